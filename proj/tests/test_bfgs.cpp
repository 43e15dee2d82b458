#include <doctest.h>

TEST_SUITE("bfgs") {}
