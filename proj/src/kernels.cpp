#include "fedppi/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "fedppi/error.hpp"

namespace fedppi::kernels {
namespace {

Isa detect() noexcept {
  if (const char* env = std::getenv("FEDPPI_ISA")) {
    const std::string choice(env);
    if (choice == "scalar") return Isa::kScalar;
    if (choice == "avx2" && isa_available(Isa::kAvx2)) return Isa::kAvx2;
  }
  return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_available(isa)) {
    fail(ErrorCategory::kValidation,
         "kernel set '" + std::string(isa_name(isa)) +
             "' is not supported on this CPU");
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::kAvx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  table_for(isa);
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& active() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_isa() == Isa::kAvx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

double sum(std::span<const double> x) noexcept {
  return active().sum(x.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

MomentSummary moments(std::span<const double> x) noexcept {
  MomentSummary m;
  m.count = x.size();
  if (x.empty()) return m;
  const auto& k = active();
  const double n = static_cast<double>(x.size());
  m.mean = k.sum(x.data(), x.size()) / n;
  m.variance = k.sum_sq_dev(x.data(), x.size(), m.mean) / n;
  return m;
}

std::size_t count_le(std::span<const double> x, double t) noexcept {
  return active().count_le(x.data(), x.size(), t);
}

PairCounts count_pair_le(std::span<const double> a, std::span<const double> b,
                         double t) noexcept {
  return active().count_pair_le(a.data(), b.data(), a.size(), t);
}

}  // namespace fedppi::kernels
