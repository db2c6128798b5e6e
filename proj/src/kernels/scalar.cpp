#include "tilecast/kernels.hpp"

#include <cmath>

// Scalar reference implementation. This is the semantic definition the SIMD
// variants are tested against, so it favors numerical care over speed:
//   - log2(1+x) goes through log1p (accurate for x near 0),
//   - the t-derivative ln(1+x) - x/(1+x) cancels catastrophically for small
//     x, so below x = 2^-10 it switches to the series
//         sum_{n>=2} (-1)^n (n-1)/n x^n = x^2/2 - 2x^3/3 + 3x^4/4 - ...
//     truncated at n = 9 (relative error ~2 x^8 <= 2e-24 at the switch).

namespace tilecast::kernels::detail {

namespace {
constexpr double kInvLn2 = 1.4426950408889634073599246810019;  // 1/ln(2)
constexpr double kSmallX = 0x1p-10;

inline double dfdt_series(double x) {
  // Horner on x: coefficients (n-1)/n with alternating signs, n = 2..9.
  double p = -8.0 / 9.0;
  p = p * x + 7.0 / 8.0;
  p = p * x - 6.0 / 7.0;
  p = p * x + 5.0 / 6.0;
  p = p * x - 4.0 / 5.0;
  p = p * x + 3.0 / 4.0;
  p = p * x - 2.0 / 3.0;
  p = p * x + 1.0 / 2.0;
  return x * x * p;
}
}  // namespace

double rate_terms_scalar(std::size_t n, const double* t, const double* e, const double* h,
                         const double* q, double* gt, double* ge, double* curv) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = e[i] * h[i] / t[i];
    const double u = 1.0 + x;
    const double lg = std::log1p(x) * kInvLn2;
    sum += q[i] * t[i] * lg;
    const double d = x < kSmallX ? dfdt_series(x) : std::log1p(x) - x / u;
    gt[i] = q[i] * d * kInvLn2;
    ge[i] = q[i] * h[i] * kInvLn2 / u;
    const double te = t[i] + e[i] * h[i];
    curv[i] = q[i] * h[i] * h[i] * kInvLn2 / (t[i] * te * te);
  }
  return sum;
}

double rate_value_scalar(std::size_t n, const double* t, const double* e, const double* h,
                         const double* q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = e[i] * h[i] / t[i];
    sum += q[i] * t[i] * std::log1p(x) * kInvLn2;
  }
  return sum;
}

}  // namespace tilecast::kernels::detail
