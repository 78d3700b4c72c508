#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "m2n2/aggregation.hpp"

namespace m2n2 {

struct MarkovParams {
  double temperature = 0.65;
  /// Relative probability threshold: a cell saturates once p_t[k] / max(p_t) > tau.
  double tau = 0.3;
  int max_iters = 1000;
  /// Max |row or column sum - 1| at which IPF stops.
  double ipf_tolerance = 1e-5;
  int ipf_max_rounds = 5000;
  /// Entries are floored to this before taking logarithms.
  double epsilon_floor = 1e-30;

  void validate() const;
};

/// Saturation time of every attention cell for one start cell.
struct MarkovGrid {
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::vector<float> values;
  /// 0 where the cell never crossed tau within max_iters.
  std::vector<std::uint8_t> saturated;
  /// Number of chain steps actually taken.
  int steps = 0;

  friend bool operator==(const MarkovGrid&, const MarkovGrid&) = default;
};

/// Replaces each row by softmax(log(max(row, epsilon_floor)) / T). The result
/// is row-stochastic; entries are floored at epsilon_floor so IPF can run.
TransitionMatrix apply_temperature(const TransitionMatrix& matrix, double temperature,
                                   double epsilon_floor = 1e-30);

/// Sinkhorn-style alternating row/column normalization (row pass first in
/// every round). Throws ConvergenceError when ipf_max_rounds is exhausted.
TransitionMatrix ipf_normalize(const TransitionMatrix& matrix, const MarkovParams& params);

struct IpfStats {
  int rounds = 0;
  double residual = 0.0;
};
TransitionMatrix ipf_normalize(const TransitionMatrix& matrix, const MarkovParams& params,
                               IpfStats& stats);

/// Temperature then IPF: the operator every Markov-map is computed on.
TransitionMatrix prepare_markov_operator(const TransitionMatrix& aggregated, const MarkovParams& params);

/// Called after every chain step with the current state p_t (renormalized to
/// unit mass) and the map as far as it is known at step t.
using ChainObserver = std::function<void(int t, std::span<const double> state, const MarkovGrid& partial)>;

/// Runs p_{t+1} = p_t A from a one-hot start and records, per cell, the
/// linearly interpolated first time its relative probability exceeds tau.
MarkovGrid markov_map(const TransitionMatrix& matrix, std::size_t start_cell, const MarkovParams& params,
                      const ChainObserver& observer = {});

}  // namespace m2n2
