#pragma once

// Batched evaluation of the perspective rate function and its derivatives
// across channel states. These are the inner loops of the barrier solver:
// every rate constraint is an expectation over the joint channel states, so
// each Newton iteration streams over state-contiguous arrays.
//
// All quantities here are dimensionless (the solver normalizes time by the
// frame length, energy by T*n0/h_ref and gains by h_ref). For each entry i:
//
//   x_i = e_i * h_i / t_i
//   f_i = t_i * log2(1 + x_i)
//
// rate_terms returns sum_i q_i f_i and fills, per entry,
//   gt[i]   = q_i * d f_i / d t = q_i * (log2(1+x) - x / ((1+x) ln 2))
//   ge[i]   = q_i * d f_i / d e = q_i * h_i / ((1+x) ln 2)
//   curv[i] = q_i * h_i^2 / (ln2 * t_i * (t_i + e_i h_i)^2)
//
// curv is the scale of the (negated) per-entry Hessian of q*f, which is the
// rank-one matrix curv * (e,-t)(e,-t)^T; it is what the barrier assembles.
// rate_value computes only the sum (line searches).
//
// Contract: t_i > 0, e_i >= 0, h_i > 0, q_i >= 0 (barrier iterates are
// strictly interior in t). Implementations: a scalar reference and an AVX2
// variant selected at runtime; both compute identical math and are
// equivalence-tested against each other.

#include <cstddef>

namespace tilecast::kernels {

enum class Isa { scalar, avx2 };

double rate_terms(std::size_t n, const double* t, const double* e, const double* h,
                  const double* q, double* gt, double* ge, double* curv);
double rate_value(std::size_t n, const double* t, const double* e, const double* h,
                  const double* q);

Isa active_isa();
bool isa_supported(Isa isa);
void force_isa(Isa isa);  // throws std::invalid_argument if unsupported here
void reset_isa();         // back to auto-detection

namespace detail {
double rate_terms_scalar(std::size_t n, const double* t, const double* e, const double* h,
                         const double* q, double* gt, double* ge, double* curv);
double rate_value_scalar(std::size_t n, const double* t, const double* e, const double* h,
                         const double* q);
double rate_terms_avx2(std::size_t n, const double* t, const double* e, const double* h,
                       const double* q, double* gt, double* ge, double* curv);
double rate_value_avx2(std::size_t n, const double* t, const double* e, const double* h,
                       const double* q);
}  // namespace detail

}  // namespace tilecast::kernels
