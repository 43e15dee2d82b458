#include <doctest.h>

TEST_SUITE("curve") {}
