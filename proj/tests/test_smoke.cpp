#include "doctest.h"

#include "abf/grid.hpp"

TEST_CASE("grid constructs") {
    abf::TorusGrid grid({8, 8}, 1);
    CHECK(grid.size() == 64);
}
