// AArch64 variant; compiled only when targeting arm64.
#include <arm_neon.h>

#include "m2n2/kernels.hpp"

namespace m2n2::kernels::neon {

void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept {
  const float64x2_t w = vdupq_n_f64(weight);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const float32x4_t r = vld1q_f32(row + j);
    const float64x2_t lo = vcvt_f64_f32(vget_low_f32(r));
    const float64x2_t hi = vcvt_high_f64_f32(r);
    vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vmulq_f64(w, lo)));
    vst1q_f64(out + j + 2, vaddq_f64(vld1q_f64(out + j + 2), vmulq_f64(w, hi)));
  }
  for (; j < n; ++j) out[j] += weight * static_cast<double>(row[j]);
}

double dot_row(const float* row, const double* scale, std::size_t n) noexcept {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const float32x4_t r = vld1q_f32(row + j);
    acc0 = vaddq_f64(acc0, vmulq_f64(vcvt_f64_f32(vget_low_f32(r)), vld1q_f64(scale + j)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vcvt_high_f64_f32(r), vld1q_f64(scale + j + 2)));
  }
  const float64x2_t acc = vaddq_f64(acc0, acc1);
  double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; j < n; ++j) sum += static_cast<double>(row[j]) * scale[j];
  return sum;
}

}  // namespace m2n2::kernels::neon
