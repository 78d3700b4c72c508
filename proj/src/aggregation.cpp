#include "m2n2/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "m2n2/error.hpp"

namespace m2n2 {

TransitionMatrix aggregate(const AttentionStack& stack, const std::optional<BlockWeights>& weights) {
  validate_attention(stack);

  std::vector<double> w(stack.blocks.size(), 0.0);
  if (weights) {
    for (const auto& [id, value] : *weights) {
      std::size_t b = 0;
      while (b < stack.blocks.size() && stack.blocks[b].id != id) ++b;
      if (b == stack.blocks.size()) throw ValidationError("weight given for unknown block '" + id + "'");
      if (!(value >= 0.0 && value <= 1.0))
        throw ValidationError("weight for block '" + id + "' outside [0, 1]");
      w[b] = value;
    }
  } else {
    for (std::size_t b = 0; b < w.size(); ++b) w[b] = stack.blocks[b].default_weight;
  }
  double total = 0.0;
  for (double v : w) total += v;
  if (std::abs(total - 1.0) > kBlockWeightTolerance) {
    std::ostringstream msg;
    msg << "block weights sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }

  TransitionMatrix out;
  out.h = stack.h;
  out.w = stack.w;
  out.stochasticity = Stochasticity::row_stochastic;
  out.tolerance = kAttentionRowTolerance;
  const std::size_t count = out.n() * out.n();
  out.data.resize(count);

  std::vector<const float*> sources;
  std::vector<double> active;
  for (std::size_t b = 0; b < w.size(); ++b) {
    if (w[b] == 0.0) continue;
    sources.push_back(stack.blocks[b].tensor.data());
    active.push_back(w[b]);
  }
  // fixed block order per element keeps the result deterministic
  for (std::size_t i = 0; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t s = 0; s < sources.size(); ++s) acc += active[s] * sources[s][i];
    out.data[i] = static_cast<float>(acc);
  }
  return out;
}

SumResiduals sum_residuals(const TransitionMatrix& matrix) {
  const std::size_t n = matrix.n();
  SumResiduals r;
  std::vector<double> cols(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const float* row = matrix.row(k);
    double sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      sum += row[l];
      cols[l] += row[l];
    }
    r.row = std::max(r.row, std::abs(sum - 1.0));
  }
  for (double c : cols) r.col = std::max(r.col, std::abs(c - 1.0));
  return r;
}

}  // namespace m2n2
