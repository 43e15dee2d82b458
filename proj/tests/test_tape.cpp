#include <doctest.h>

TEST_SUITE("tape") {}
