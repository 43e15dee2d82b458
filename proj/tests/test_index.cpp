#include <doctest.h>

TEST_SUITE("index") {}
