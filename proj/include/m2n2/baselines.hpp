#pragma once

#include <cstddef>

#include "m2n2/aggregation.hpp"
#include "m2n2/grid.hpp"

namespace m2n2 {

enum class BaselineKind { attention_nn, kl_nn };

/// Temperatures used for the baselines' aggregated attention.
inline constexpr double kAttentionNnTemperature = 10.0;
inline constexpr double kKlNnTemperature = 2.0;
inline constexpr double kKlNnClipMin = 1e-5;

/// Symmetric KL divergence sum_v (P(v) - Q(v)) (log P(v) - log Q(v)) between
/// rows `a` and `b` of `matrix`, both clipped to [clip_min, 1].
double symmetric_kl(const TransitionMatrix& matrix, std::size_t a, std::size_t b, double clip_min = kKlNnClipMin);

/// Low-res (h x w) distance map for the baselines, min-max normalized to [0, 1].
///   attention_nn: negated attention row of `cell`
///   kl_nn:        symmetric KL between the row of `cell` and every other row
/// `matrix` is row-stochastic with the baseline temperature already applied.
FloatMap baseline_map(BaselineKind kind, const TransitionMatrix& matrix, std::size_t cell,
                      double clip_min = kKlNnClipMin);

}  // namespace m2n2
