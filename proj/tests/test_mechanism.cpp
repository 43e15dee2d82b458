#include <doctest.h>

TEST_SUITE("mechanism") {}
