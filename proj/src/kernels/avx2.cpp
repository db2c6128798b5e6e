// AVX2 variant of the rate kernels, 4 doubles per lane. Compiled with
// -mavx2 -mfma on x86; only ever called after the dispatcher has confirmed
// cpu support. Falls back to forwarding stubs elsewhere.
//
// log2(1+x) is computed without cancellation via the atanh reduction:
//   x <  1/4 : s = x/(2+x),                      k = 0
//   x >= 1/4 : 1+x = m 2^k, m in [sqrt(1/2),sqrt2), s = (m-1)/(m+1)
//   log2(1+x) = k + (2/ln2) * atanh(s),  atanh(s) = s (1 + s^2/3 + s^4/5 + ...)
// With |s| <= sqrt2-1/(sqrt2+1) ~ 0.1716 the series truncated at s^19/19 has
// relative error ~4e-18. The t-derivative uses the same small-x series as the
// scalar reference below x = 2^-10.

#include "tilecast/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace tilecast::kernels::detail {

namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;
constexpr double kInvLn2 = 1.4426950408889634073599246810019;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

inline __m256d poly_atanh_over_s(__m256d w) {
  // 1 + w/3 + w^2/5 + ... + w^9/19, w = s^2.
  __m256d p = _mm256_set1_pd(1.0 / 19.0);
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 3.0));
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0));
  return p;
}

// Returns ln(1+x) for x >= 0; also writes log2(1+x).
inline __m256d ln1p_and_log2(__m256d x, __m256d* log2_out) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d u = _mm256_add_pd(one, x);

  // Branch B: decompose u into m 2^k.
  const __m256i bits = _mm256_castpd_si256(u);
  __m256i expo = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  // exponent (0..1024) to double via the 2^52 bias trick
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  __m256d kd = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(expo, magic)),
                             _mm256_castsi256_pd(magic));
  const __m256d shrink = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), shrink);
  kd = _mm256_add_pd(kd, _mm256_and_pd(shrink, one));
  const __m256d sB =
      _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));

  // Branch A: exact reduction for small x.
  const __m256d sA = _mm256_div_pd(x, _mm256_add_pd(_mm256_set1_pd(2.0), x));
  const __m256d smallx = _mm256_cmp_pd(x, _mm256_set1_pd(0.25), _CMP_LT_OQ);
  const __m256d s = _mm256_blendv_pd(sB, sA, smallx);
  kd = _mm256_andnot_pd(smallx, kd);

  const __m256d p = poly_atanh_over_s(_mm256_mul_pd(s, s));
  const __m256d sp2 = _mm256_mul_pd(_mm256_mul_pd(s, p), _mm256_set1_pd(2.0));
  *log2_out = _mm256_fmadd_pd(sp2, _mm256_set1_pd(kInvLn2), kd);
  return _mm256_fmadd_pd(kd, _mm256_set1_pd(kLn2), sp2);
}

inline __m256d dfdt_series(__m256d x) {
  __m256d p = _mm256_set1_pd(-8.0 / 9.0);
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(7.0 / 8.0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(-6.0 / 7.0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(5.0 / 6.0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(-4.0 / 5.0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(3.0 / 4.0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(-2.0 / 3.0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(1.0 / 2.0));
  return _mm256_mul_pd(_mm256_mul_pd(x, x), p);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double rate_terms_avx2(std::size_t n, const double* t, const double* e, const double* h,
                       const double* q, double* gt, double* ge, double* curv) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  const __m256d inv_ln2 = _mm256_set1_pd(kInvLn2);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d ti = _mm256_loadu_pd(t + i);
    const __m256d ei = _mm256_loadu_pd(e + i);
    const __m256d hi = _mm256_loadu_pd(h + i);
    const __m256d qi = _mm256_loadu_pd(q + i);
    const __m256d eh = _mm256_mul_pd(ei, hi);
    const __m256d x = _mm256_div_pd(eh, ti);
    const __m256d u = _mm256_add_pd(_mm256_set1_pd(1.0), x);

    __m256d lg2;
    const __m256d ln1p = ln1p_and_log2(x, &lg2);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(qi, ti), lg2, acc);

    const __m256d direct = _mm256_sub_pd(ln1p, _mm256_div_pd(x, u));
    const __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(0x1p-10), _CMP_LT_OQ);
    const __m256d d = _mm256_blendv_pd(direct, dfdt_series(x), tiny);
    _mm256_storeu_pd(gt + i, _mm256_mul_pd(_mm256_mul_pd(qi, d), inv_ln2));

    _mm256_storeu_pd(ge + i,
                     _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(qi, hi), inv_ln2), u));

    const __m256d te = _mm256_add_pd(ti, eh);
    const __m256d denom = _mm256_mul_pd(ti, _mm256_mul_pd(te, te));
    const __m256d h2 = _mm256_mul_pd(hi, hi);
    _mm256_storeu_pd(curv + i,
                     _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(qi, h2), inv_ln2), denom));
  }
  double sum = hsum(acc);
  if (n4 < n)
    sum += rate_terms_scalar(n - n4, t + n4, e + n4, h + n4, q + n4, gt + n4, ge + n4, curv + n4);
  return sum;
}

double rate_value_avx2(std::size_t n, const double* t, const double* e, const double* h,
                       const double* q) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d ti = _mm256_loadu_pd(t + i);
    const __m256d x = _mm256_div_pd(_mm256_mul_pd(_mm256_loadu_pd(e + i), _mm256_loadu_pd(h + i)), ti);
    __m256d lg2;
    (void)ln1p_and_log2(x, &lg2);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(q + i), ti), lg2, acc);
  }
  double sum = hsum(acc);
  if (n4 < n) sum += rate_value_scalar(n - n4, t + n4, e + n4, h + n4, q + n4);
  return sum;
}

}  // namespace tilecast::kernels::detail

#else  // no AVX2 at compile time: forwarding stubs, never selected at runtime

namespace tilecast::kernels::detail {

double rate_terms_avx2(std::size_t n, const double* t, const double* e, const double* h,
                       const double* q, double* gt, double* ge, double* curv) {
  return rate_terms_scalar(n, t, e, h, q, gt, ge, curv);
}

double rate_value_avx2(std::size_t n, const double* t, const double* e, const double* h,
                       const double* q) {
  return rate_value_scalar(n, t, e, h, q);
}

}  // namespace tilecast::kernels::detail

#endif
