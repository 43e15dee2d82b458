#include <doctest.h>

TEST_SUITE("ghop") {}
