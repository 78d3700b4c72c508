#include "m2n2/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "m2n2/error.hpp"

namespace m2n2 {
namespace {

void min_max_normalize(std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double low = *lo;
  const double span = *hi - *lo;
  for (double& x : v) x = span > 0.0 ? (x - low) / span : 0.0;
}

}  // namespace

double symmetric_kl(const TransitionMatrix& matrix, std::size_t a, std::size_t b, double clip_min) {
  const std::size_t n = matrix.n();
  const float* p = matrix.row(a);
  const float* q = matrix.row(b);
  double d = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double pv = std::clamp(static_cast<double>(p[v]), clip_min, 1.0);
    const double qv = std::clamp(static_cast<double>(q[v]), clip_min, 1.0);
    d += (pv - qv) * (std::log(pv) - std::log(qv));
  }
  return d;
}

FloatMap baseline_map(BaselineKind kind, const TransitionMatrix& matrix, std::size_t cell, double clip_min) {
  const std::size_t n = matrix.n();
  if (n == 0 || matrix.data.size() != n * n) throw ValidationError("matrix shape is inconsistent");
  if (cell >= n) throw ValidationError("cell index out of range");
  if (!(clip_min > 0.0 && clip_min < 1.0)) throw ValidationError("clip_min must lie in (0, 1)");

  std::vector<double> dist(n);
  if (kind == BaselineKind::attention_nn) {
    const float* row = matrix.row(cell);
    for (std::size_t l = 0; l < n; ++l) dist[l] = -static_cast<double>(row[l]);
  } else {
    // log of the clipped matrix row by row; the prompt row is reused n times
    std::vector<double> p(n), log_p(n);
    const float* prow = matrix.row(cell);
    for (std::size_t v = 0; v < n; ++v) {
      p[v] = std::clamp(static_cast<double>(prow[v]), clip_min, 1.0);
      log_p[v] = std::log(p[v]);
    }
    for (std::size_t l = 0; l < n; ++l) {
      const float* qrow = matrix.row(l);
      double d = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        const double qv = std::clamp(static_cast<double>(qrow[v]), clip_min, 1.0);
        d += (p[v] - qv) * (log_p[v] - std::log(qv));
      }
      dist[l] = d;
    }
  }
  min_max_normalize(dist);
  FloatMap out(static_cast<int>(matrix.h), static_cast<int>(matrix.w));
  for (std::size_t l = 0; l < n; ++l) out[l] = static_cast<float>(dist[l]);
  return out;
}

}  // namespace m2n2
