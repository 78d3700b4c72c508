#include <algorithm>
#include <atomic>
#include <cstdlib>

#include "m2n2/error.hpp"
#include "m2n2/kernels.hpp"

namespace m2n2::kernels {
namespace {

struct Table {
  void (*accumulate_row)(double, const float*, double*, std::size_t) noexcept;
  double (*dot_row)(const float*, const double*, std::size_t) noexcept;
};

Table table_for(Backend b) noexcept {
  switch (b) {
#if defined(M2N2_HAVE_AVX2)
    case Backend::avx2:
      return {&avx2::accumulate_row, &avx2::dot_row};
#endif
#if defined(M2N2_HAVE_NEON)
    case Backend::neon:
      return {&neon::accumulate_row, &neon::dot_row};
#endif
    default:
      return {&scalar::accumulate_row, &scalar::dot_row};
  }
}

Backend detect() noexcept {
  if (const char* forced = std::getenv("M2N2_KERNELS")) {
    if (auto b = parse_backend(forced); b && backend_available(*b)) return *b;
  }
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

std::optional<Backend> parse_backend(std::string_view name) noexcept {
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    if (backend_name(b) == name) return b;
  }
  return std::nullopt;
}

bool backend_available(Backend b) noexcept {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(M2N2_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::neon:
#if defined(M2N2_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b))
    throw ValidationError("kernel backend '" + std::string(backend_name(b)) + "' is not available");
  current().store(b, std::memory_order_relaxed);
}

void accumulate_row(double weight, const float* row, double* out, std::size_t n) noexcept {
  table_for(active_backend()).accumulate_row(weight, row, out, n);
}

double dot_row(const float* row, const double* scale, std::size_t n) noexcept {
  return table_for(active_backend()).dot_row(row, scale, n);
}

void vecmat(std::span<const double> p, const float* matrix, std::span<double> out) noexcept {
  const std::size_t n = p.size();
  const auto acc = table_for(active_backend()).accumulate_row;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (p[k] == 0.0) continue;
    acc(p[k], matrix + k * n, out.data(), n);
  }
}

}  // namespace m2n2::kernels
