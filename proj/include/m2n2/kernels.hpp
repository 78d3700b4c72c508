#pragma once

// Dense inner loops of the Markov chain and IPF. Each kernel has a scalar
// reference implementation and vectorized variants; the active variant is
// picked once at startup from the CPU features (override with the
// M2N2_KERNELS environment variable: "scalar", "avx2", "neon").
//
// The axpy-shaped kernels (accumulate_row, vecmat) keep the per-element
// summation order of the scalar code, so every variant produces bit-identical
// results. Reductions (dot_row) use lane-wise partial sums and agree with the
// scalar code to rounding.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace m2n2::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b) noexcept;
std::optional<Backend> parse_backend(std::string_view name) noexcept;
bool backend_available(Backend b) noexcept;

Backend active_backend() noexcept;
/// Switches the process-wide variant. Throws ValidationError when the CPU
/// lacks support for `b`.
void set_backend(Backend b);

/// out[j] += weight * row[j] for j in [0, n)
void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept;

/// Returns sum_j row[j] * scale[j], accumulated in double.
double dot_row(const float* row, const double* scale, std::size_t n) noexcept;

/// out = p * A for a dense row-major n x n matrix. Rows with p[k] == 0 are
/// skipped; out is overwritten.
void vecmat(std::span<const double> p, const float* matrix, std::span<double> out) noexcept;

/// Per-variant entry points, used by the equivalence tests.
namespace scalar {
void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept;
double dot_row(const float* row, const double* scale, std::size_t n) noexcept;
}  // namespace scalar

#if defined(M2N2_HAVE_AVX2)
namespace avx2 {
void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept;
double dot_row(const float* row, const double* scale, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(M2N2_HAVE_NEON)
namespace neon {
void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept;
double dot_row(const float* row, const double* scale, std::size_t n) noexcept;
}  // namespace neon
#endif

}  // namespace m2n2::kernels
