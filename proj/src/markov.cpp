#include "m2n2/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "m2n2/error.hpp"
#include "m2n2/kernels.hpp"

namespace m2n2 {

void MarkovParams::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (!(ipf_tolerance > 0.0)) throw ValidationError("ipf_tolerance must be positive");
  if (ipf_max_rounds < 1) throw ValidationError("ipf_max_rounds must be at least 1");
  if (!(epsilon_floor > 0.0)) throw ValidationError("epsilon_floor must be positive");
}

TransitionMatrix apply_temperature(const TransitionMatrix& matrix, double temperature, double epsilon_floor) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ValidationError("temperature must be positive, got " + std::to_string(temperature));
  if (!(epsilon_floor > 0.0)) throw ValidationError("epsilon_floor must be positive");

  const std::size_t n = matrix.n();
  TransitionMatrix out;
  out.h = matrix.h;
  out.w = matrix.w;
  out.stochasticity = Stochasticity::row_stochastic;
  out.tolerance = kAttentionRowTolerance;
  out.data.resize(matrix.data.size());
  const float floor = std::max(static_cast<float>(epsilon_floor), std::numeric_limits<float>::min());

  std::vector<double> logits(n);
  const double inv_t = 1.0 / temperature;
  for (std::size_t k = 0; k < n; ++k) {
    const float* src = matrix.row(k);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < n; ++l) {
      logits[l] = inv_t * std::log(std::max(static_cast<double>(src[l]), epsilon_floor));
      top = std::max(top, logits[l]);
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      logits[l] = std::exp(logits[l] - top);
      sum += logits[l];
    }
    float* dst = out.row(k);
    for (std::size_t l = 0; l < n; ++l) dst[l] = std::max(static_cast<float>(logits[l] / sum), floor);
  }
  return out;
}

TransitionMatrix ipf_normalize(const TransitionMatrix& matrix, const MarkovParams& params) {
  IpfStats stats;
  return ipf_normalize(matrix, params, stats);
}

TransitionMatrix ipf_normalize(const TransitionMatrix& matrix, const MarkovParams& params, IpfStats& stats) {
  params.validate();
  const std::size_t n = matrix.n();
  if (n == 0 || matrix.data.size() != n * n) throw ValidationError("matrix shape is inconsistent");
  for (float v : matrix.data) {
    if (!(v > 0.0F) || !std::isfinite(v))
      throw ValidationError("IPF requires strictly positive finite entries");
  }

  // A_ij = K_ij * r_i * c_j; only the scaling vectors change between passes.
  const float* k = matrix.data.data();
  std::vector<double> r(n, 1.0), c(n, 1.0), row_dot(n), col_sum(n);
  for (std::size_t i = 0; i < n; ++i) row_dot[i] = kernels::dot_row(k + i * n, c.data(), n);

  double residual = 0.0;
  int round = 0;
  for (;;) {
    ++round;
    for (std::size_t i = 0; i < n; ++i) r[i] = 1.0 / row_dot[i];
    kernels::vecmat(r, k, col_sum);
    for (std::size_t j = 0; j < n; ++j) c[j] = 1.0 / col_sum[j];
    // columns are exact after the column pass; rows carry the residual
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      row_dot[i] = kernels::dot_row(k + i * n, c.data(), n);
      residual = std::max(residual, std::abs(r[i] * row_dot[i] - 1.0));
    }
    if (!std::isfinite(residual)) throw NumericError("IPF produced non-finite sums", round);
    if (residual < params.ipf_tolerance) break;
    if (round >= params.ipf_max_rounds) {
      std::ostringstream msg;
      msg << "IPF did not converge within " << params.ipf_max_rounds << " rounds (residual " << residual
          << ", tolerance " << params.ipf_tolerance << ")";
      throw ConvergenceError(msg.str(), residual);
    }
  }
  stats.rounds = round;
  stats.residual = residual;

  TransitionMatrix out;
  out.h = matrix.h;
  out.w = matrix.w;
  out.stochasticity = Stochasticity::doubly_stochastic;
  out.tolerance = params.ipf_tolerance;
  out.data.resize(matrix.data.size());
  for (std::size_t i = 0; i < n; ++i) {
    const float* src = k + i * n;
    float* dst = out.row(i);
    for (std::size_t j = 0; j < n; ++j) dst[j] = static_cast<float>(static_cast<double>(src[j]) * r[i] * c[j]);
  }
  return out;
}

TransitionMatrix prepare_markov_operator(const TransitionMatrix& aggregated, const MarkovParams& params) {
  params.validate();
  return ipf_normalize(apply_temperature(aggregated, params.temperature, params.epsilon_floor), params);
}

MarkovGrid markov_map(const TransitionMatrix& matrix, std::size_t start_cell, const MarkovParams& params,
                      const ChainObserver& observer) {
  params.validate();
  if (matrix.stochasticity != Stochasticity::doubly_stochastic)
    throw ContractError("markov_map requires a doubly stochastic matrix (run ipf_normalize first)");
  const std::size_t n = matrix.n();
  if (matrix.data.size() != n * n) throw ValidationError("matrix shape is inconsistent");
  if (start_cell >= n) throw ValidationError("start cell " + std::to_string(start_cell) + " out of range");

  MarkovGrid grid;
  grid.h = matrix.h;
  grid.w = matrix.w;
  grid.values.assign(n, static_cast<float>(params.max_iters));
  grid.saturated.assign(n, 0);

  std::vector<double> p(n, 0.0), next(n, 0.0), prev_ratio(n, 0.0);
  p[start_cell] = 1.0;
  // t = 0: only the start cell has non-zero probability, its ratio is 1 > tau
  grid.values[start_cell] = 0.0F;
  grid.saturated[start_cell] = 1;
  std::size_t remaining = n - 1;
  if (observer) observer(0, p, grid);

  const double tau = params.tau;
  int t = 0;
  while (remaining > 0 && t < params.max_iters) {
    ++t;
    kernels::vecmat(p, matrix.data.data(), next);
    double mass = 0.0;
    double top = 0.0;
    for (double v : next) {
      mass += v;
      top = std::max(top, v);
    }
    if (!std::isfinite(mass) || !(top > 0.0)) {
      std::ostringstream msg;
      msg << "Markov chain state became degenerate at iteration " << t;
      throw NumericError(msg.str(), t);
    }
    // IPF leaves rows off by up to its tolerance; keep p_t a distribution
    const double inv_mass = 1.0 / mass;
    for (double& v : next) v *= inv_mass;
    top *= inv_mass;

    for (std::size_t k = 0; k < n; ++k) {
      if (grid.saturated[k]) continue;
      const double ratio = next[k] / top;
      if (ratio > tau) {
        const double before = prev_ratio[k];
        double frac = (tau - before) / (ratio - before);
        frac = std::clamp(frac, 0.0, 1.0);
        grid.values[k] = static_cast<float>(std::max(0.0, static_cast<double>(t - 1) + frac));
        grid.saturated[k] = 1;
        --remaining;
      } else {
        prev_ratio[k] = ratio;
      }
    }
    p.swap(next);
    grid.steps = t;
    if (observer) observer(t, p, grid);
  }
  return grid;
}

}  // namespace m2n2
