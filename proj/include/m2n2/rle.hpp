#pragma once

#include <cstdint>
#include <vector>

#include "m2n2/grid.hpp"

namespace m2n2 {

/// Row-major run lengths, alternating 0-runs and 1-runs, starting with a
/// (possibly empty) run of zeros.
std::vector<std::uint32_t> rle_encode(const Mask& mask);
Mask rle_decode(const std::vector<std::uint32_t>& runs, int height, int width);

}  // namespace m2n2
