// Compiled with -mavx2. Only reached after a runtime CPU check.
#include <immintrin.h>

#include "m2n2/kernels.hpp"

namespace m2n2::kernels::avx2 {

void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept {
  const __m256d w = _mm256_set1_pd(weight);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256 r = _mm256_loadu_ps(row + j);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(r));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(r, 1));
    // mul then add, no fma: matches the scalar rounding exactly
    _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_mul_pd(w, lo)));
    _mm256_storeu_pd(out + j + 4, _mm256_add_pd(_mm256_loadu_pd(out + j + 4), _mm256_mul_pd(w, hi)));
  }
  for (; j + 4 <= n; j += 4) {
    const __m256d r = _mm256_cvtps_pd(_mm_loadu_ps(row + j));
    _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_mul_pd(w, r)));
  }
  for (; j < n; ++j) out[j] += weight * static_cast<double>(row[j]);
}

double dot_row(const float* row, const double* scale, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256 r = _mm256_loadu_ps(row + j);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(r));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(r, 1));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(lo, _mm256_loadu_pd(scale + j)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(hi, _mm256_loadu_pd(scale + j + 4)));
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; j < n; ++j) sum += static_cast<double>(row[j]) * scale[j];
  return sum;
}

}  // namespace m2n2::kernels::avx2
