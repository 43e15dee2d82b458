#include <doctest.h>

TEST_SUITE("layers") {}
