#include "m2n2/kernels.hpp"

namespace m2n2::kernels::scalar {

void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept {
  for (std::size_t j = 0; j < n; ++j) out[j] += weight * static_cast<double>(row[j]);
}

double dot_row(const float* row, const double* scale, std::size_t n) noexcept {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += static_cast<double>(row[j]) * scale[j];
  return sum;
}

}  // namespace m2n2::kernels::scalar
