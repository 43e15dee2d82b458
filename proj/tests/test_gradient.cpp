#include <doctest.h>

TEST_SUITE("gradient") {}
