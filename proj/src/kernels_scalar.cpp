#include <cmath>

#include "fedppi/kernels.hpp"

namespace fedppi::kernels::scalar {
namespace {

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_sq_dev(const double* x, std::size_t n, double center) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    s += d * d;
  }
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot(const double* a, const double* b, const double* w,
                    std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

std::size_t count_le(const double* x, std::size_t n, double t) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += x[i] <= t ? 1 : 0;
  return c;
}

PairCounts count_pair_le(const double* a, const double* b, std::size_t n,
                         double t) {
  PairCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_a = a[i] <= t;
    const bool in_b = b[i] <= t;
    c.first_only += (in_a && !in_b) ? 1 : 0;
    c.second_only += (in_b && !in_a) ? 1 : 0;
  }
  return c;
}

void subtract(const double* a, const double* b, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void multiply(const double* a, const double* b, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void logistic_residual(const double* const* cols, std::size_t dims,
                       const double* theta, const double* pred, std::size_t n,
                       double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < dims; ++j) z += cols[j][i] * theta[j];
    out[i] = 1.0 / (1.0 + std::exp(-z)) - pred[i];
  }
}

}  // namespace

const KernelTable kTable = {
    &sum,      &sum_sq_dev, &dot,      &weighted_dot,      &count_le,
    &count_pair_le, &subtract, &multiply, &logistic_residual,
};

}  // namespace fedppi::kernels::scalar
