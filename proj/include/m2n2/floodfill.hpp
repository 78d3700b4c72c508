#pragma once

#include <vector>

#include "m2n2/grid.hpp"

namespace m2n2 {

/// Minimum flood threshold needed to reach every pixel from `start`:
///   out[y] = min over 4-connected paths start -> y of max over path pixels v
///            of |map[v] - map[start]|.
/// Best-first search over a stable min-priority queue. If `popped` is given
/// it receives the thresholds in extraction order.
FloatMap flood_fill_minimax(const FloatMap& map, Pixel start, std::vector<float>* popped = nullptr);

}  // namespace m2n2
