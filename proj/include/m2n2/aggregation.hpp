#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "m2n2/tensor_io.hpp"

namespace m2n2 {

enum class Stochasticity { row_stochastic, doubly_stochastic };

/// Dense n x n transition matrix over the h x w attention grid, n = h * w.
/// Cell (row, col) has index row * w + col everywhere in the library.
struct TransitionMatrix {
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::vector<float> data;
  Stochasticity stochasticity = Stochasticity::row_stochastic;
  /// Max |row or column sum - 1| the producer guarantees.
  double tolerance = kAttentionRowTolerance;

  std::size_t n() const noexcept { return std::size_t{h} * w; }
  const float* row(std::size_t k) const noexcept { return data.data() + k * n(); }
  float* row(std::size_t k) noexcept { return data.data() + k * n(); }
  float operator()(std::size_t k, std::size_t l) const noexcept { return data[k * n() + l]; }
};

using BlockWeights = std::map<std::string, double>;

/// Weighted sum of the stack's blocks, flattened to (h*w) x (h*w). Without
/// explicit weights each block's default_weight is used; blocks missing from
/// an explicit map get weight 0.
TransitionMatrix aggregate(const AttentionStack& stack,
                           const std::optional<BlockWeights>& weights = std::nullopt);

/// Largest |row sum - 1| and |column sum - 1|.
struct SumResiduals {
  double row = 0.0;
  double col = 0.0;
  double max() const noexcept { return row > col ? row : col; }
};
SumResiduals sum_residuals(const TransitionMatrix& matrix);

}  // namespace m2n2
