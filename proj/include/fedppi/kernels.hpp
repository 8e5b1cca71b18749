#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference
// implementation and an AVX2 variant; the active table is chosen once at
// startup from CPUID and can be overridden with FEDPPI_ISA=scalar|avx2.

#include <cstddef>
#include <span>
#include <string_view>

#include "fedppi/stats.hpp"

namespace fedppi::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa) noexcept;

struct PairCounts {
  std::size_t first_only = 0;   // a[i] <= t and b[i] > t
  std::size_t second_only = 0;  // b[i] <= t and a[i] > t

  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

struct KernelTable {
  double (*sum)(const double* x, std::size_t n);
  // sum_i (x[i] - center)^2
  double (*sum_sq_dev)(const double* x, std::size_t n, double center);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i w[i] * a[i] * b[i]
  double (*weighted_dot)(const double* a, const double* b, const double* w,
                         std::size_t n);
  std::size_t (*count_le)(const double* x, std::size_t n, double t);
  PairCounts (*count_pair_le)(const double* a, const double* b, std::size_t n,
                              double t);
  void (*subtract)(const double* a, const double* b, std::size_t n,
                   double* out);
  void (*multiply)(const double* a, const double* b, std::size_t n,
                   double* out);
  // out[i] = sigmoid(sum_j cols[j][i] * theta[j]) - pred[i]
  void (*logistic_residual)(const double* const* cols, std::size_t dims,
                            const double* theta, const double* pred,
                            std::size_t n, double* out);
};

bool isa_available(Isa isa) noexcept;
const KernelTable& table_for(Isa isa);

Isa active_isa() noexcept;
/// Throws a validation error if the ISA is not supported on this CPU.
void set_active_isa(Isa isa);
const KernelTable& active() noexcept;

// Convenience wrappers over the active table.
double sum(std::span<const double> x) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
/// Two-pass mean and population variance.
MomentSummary moments(std::span<const double> x) noexcept;
std::size_t count_le(std::span<const double> x, double t) noexcept;
PairCounts count_pair_le(std::span<const double> a, std::span<const double> b,
                         double t) noexcept;

namespace scalar {
extern const KernelTable kTable;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace fedppi::kernels
