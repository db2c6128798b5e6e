#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "tilecast/kernels.hpp"
#include "tilecast/rng.hpp"

using namespace tilecast;
namespace k = tilecast::kernels;

namespace {

constexpr double kLn2 = 0.6931471805599453094172321214582;

// Independent per-entry recomputation of the documented formulas, written
// against the header contract rather than the implementation.
struct Terms {
  double f, gt, ge, curv;
};

Terms oracle_entry(double t, double e, double h, double q) {
  const double x = e * h / t;
  Terms o;
  o.f = t * std::log2(1.0 + x);
  o.gt = q * (std::log2(1.0 + x) - x / ((1.0 + x) * kLn2));
  o.ge = q * h / ((1.0 + x) * kLn2);
  o.curv = q * h * h / (kLn2 * t * (t + e * h) * (t + e * h));
  return o;
}

struct Batch {
  std::vector<double> t, e, h, q;
  size_t size() const { return t.size(); }
};

// Mix of magnitudes covering the regimes the barrier visits: near-zero energy,
// unit scale, and deep saturation x >> 1.
Batch random_batch(Rng& rng, size_t n) {
  Batch b;
  for (size_t i = 0; i < n; ++i) {
    const double t = std::pow(10.0, -12.0 * rng.uniform());   // 1e-12 .. 1
    const double e = rng.uniform() < 0.15 ? 0.0 : std::pow(10.0, 6.0 * rng.uniform() - 4.0);
    const double h = std::pow(10.0, 2.0 * rng.uniform() - 1.0);
    const double q = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
    b.t.push_back(t);
    b.e.push_back(e);
    b.h.push_back(h);
    b.q.push_back(q);
  }
  return b;
}

}  // namespace

TEST_CASE("kernels: scalar terms match the independent oracle") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    Batch b = random_batch(rng, 37);
    std::vector<double> gt(b.size()), ge(b.size()), curv(b.size());
    const double sum = k::detail::rate_terms_scalar(b.size(), b.t.data(), b.e.data(), b.h.data(),
                                                    b.q.data(), gt.data(), ge.data(), curv.data());
    double expect_sum = 0.0;
    for (size_t i = 0; i < b.size(); ++i) {
      const Terms o = oracle_entry(b.t[i], b.e[i], b.h[i], b.q[i]);
      expect_sum += b.q[i] * o.f;
      CHECK(gt[i] == doctest::Approx(o.gt).epsilon(1e-12));
      CHECK(ge[i] == doctest::Approx(o.ge).epsilon(1e-12));
      CHECK(curv[i] == doctest::Approx(o.curv).epsilon(1e-12));
    }
    CHECK(sum == doctest::Approx(expect_sum).epsilon(1e-12));
  }
}

TEST_CASE("kernels: gt and ge are the partial derivatives of the summed value") {
  Rng rng(12);
  Batch b = random_batch(rng, 16);
  for (auto& e : b.e)
    if (e == 0.0) e = 1e-3;  // keep the FD stencil interior
  std::vector<double> gt(b.size()), ge(b.size()), curv(b.size());
  k::detail::rate_terms_scalar(b.size(), b.t.data(), b.e.data(), b.h.data(), b.q.data(), gt.data(),
                               ge.data(), curv.data());
  for (size_t i = 0; i < b.size(); ++i) {
    auto value_at = [&](double ti, double ei) {
      return b.q[i] * ti * std::log2(1.0 + ei * b.h[i] / ti);
    };
    const double ht = 1e-6 * b.t[i];
    const double he = 1e-6 * b.e[i];
    const double fd_t = (value_at(b.t[i] + ht, b.e[i]) - value_at(b.t[i] - ht, b.e[i])) / (2 * ht);
    const double fd_e = (value_at(b.t[i], b.e[i] + he) - value_at(b.t[i], b.e[i] - he)) / (2 * he);
    CHECK(gt[i] == doctest::Approx(fd_t).epsilon(1e-6));
    CHECK(ge[i] == doctest::Approx(fd_e).epsilon(1e-6));
  }
}

TEST_CASE("kernels: curvature equals the finite difference of the gradient") {
  // -H of q*f is curv * (e,-t)(e,-t)^T; probe it through d/de of ge.
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    const double t = 0.01 + rng.uniform();
    const double e = 0.01 + rng.uniform();
    const double h = 0.1 + rng.uniform();
    const double q = 0.5 + rng.uniform();
    double gt, ge_lo, ge_hi, curv;
    const double he = 1e-6 * e;
    double el = e - he, eh = e + he;
    k::detail::rate_terms_scalar(1, &t, &el, &h, &q, &gt, &ge_lo, &curv);
    k::detail::rate_terms_scalar(1, &t, &eh, &h, &q, &gt, &ge_hi, &curv);
    double gex;
    k::detail::rate_terms_scalar(1, &t, &e, &h, &q, &gt, &gex, &curv);
    // -H = curv (e,-t)(e,-t)^T, so d(ge)/de = H_ee = -curv * t^2
    const double fd = (ge_hi - ge_lo) / (2 * he);
    CHECK(fd == doctest::Approx(-curv * t * t).epsilon(1e-5));
  }
}

TEST_CASE("kernels: e = 0 entries follow the x -> 0 limits") {
  const double t = 0.37, e = 0.0, h = 2.5, q = 0.8;
  double gt, ge, curv;
  const double sum = k::detail::rate_terms_scalar(1, &t, &e, &h, &q, &gt, &ge, &curv);
  CHECK(sum == 0.0);
  CHECK(gt == 0.0);
  CHECK(ge == doctest::Approx(q * h / kLn2).epsilon(1e-15));
  CHECK(curv == doctest::Approx(q * h * h / (kLn2 * t * t * t)).epsilon(1e-15));
}

TEST_CASE("kernels: rate_value agrees with rate_terms' sum") {
  Rng rng(14);
  Batch b = random_batch(rng, 101);
  std::vector<double> gt(b.size()), ge(b.size()), curv(b.size());
  const double s1 = k::detail::rate_terms_scalar(b.size(), b.t.data(), b.e.data(), b.h.data(),
                                                 b.q.data(), gt.data(), ge.data(), curv.data());
  const double s2 =
      k::detail::rate_value_scalar(b.size(), b.t.data(), b.e.data(), b.h.data(), b.q.data());
  CHECK(s1 == doctest::Approx(s2).epsilon(1e-14));
}

TEST_CASE("kernels: vector variant matches scalar on every lane and tail") {
  if (!k::isa_supported(k::Isa::avx2)) return;  // host without AVX2: dispatch is scalar-only
  Rng rng(15);
  for (size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 64, 129}) {
    Batch b = random_batch(rng, n);
    std::vector<double> gts(n), ges(n), curvs(n), gtv(n), gev(n), curvv(n);
    const double ss = k::detail::rate_terms_scalar(n, b.t.data(), b.e.data(), b.h.data(),
                                                   b.q.data(), gts.data(), ges.data(), curvs.data());
    const double sv = k::detail::rate_terms_avx2(n, b.t.data(), b.e.data(), b.h.data(), b.q.data(),
                                                 gtv.data(), gev.data(), curvv.data());
    CHECK(ss == doctest::Approx(sv).epsilon(1e-13));
    for (size_t i = 0; i < n; ++i) {
      CHECK(gts[i] == doctest::Approx(gtv[i]).epsilon(1e-13));
      CHECK(ges[i] == doctest::Approx(gev[i]).epsilon(1e-13));
      CHECK(curvs[i] == doctest::Approx(curvv[i]).epsilon(1e-13));
    }
    const double vs = k::detail::rate_value_scalar(n, b.t.data(), b.e.data(), b.h.data(), b.q.data());
    const double vv = k::detail::rate_value_avx2(n, b.t.data(), b.e.data(), b.h.data(), b.q.data());
    CHECK(vs == doctest::Approx(vv).epsilon(1e-13));
  }
}

TEST_CASE("kernels: isa dispatch is forceable and reversible") {
  CHECK(k::isa_supported(k::Isa::scalar));
  k::force_isa(k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);

  const double t = 0.5, e = 0.25, h = 1.5, q = 1.0;
  double gt, ge, curv;
  const double via_dispatch = k::rate_terms(1, &t, &e, &h, &q, &gt, &ge, &curv);
  const double direct = k::detail::rate_terms_scalar(1, &t, &e, &h, &q, &gt, &ge, &curv);
  CHECK(via_dispatch == direct);

  if (k::isa_supported(k::Isa::avx2)) {
    k::force_isa(k::Isa::avx2);
    CHECK(k::active_isa() == k::Isa::avx2);
  } else {
    CHECK_THROWS_AS(k::force_isa(k::Isa::avx2), std::invalid_argument);
  }
  k::reset_isa();
  CHECK(k::isa_supported(k::active_isa()));
}

TEST_CASE("kernels: evaluation is deterministic") {
  Rng rng(16);
  Batch b = random_batch(rng, 53);
  std::vector<double> a1(b.size()), a2(b.size()), a3(b.size());
  std::vector<double> b1(b.size()), b2(b.size()), b3(b.size());
  const double s1 =
      k::rate_terms(b.size(), b.t.data(), b.e.data(), b.h.data(), b.q.data(), a1.data(), a2.data(), a3.data());
  const double s2 =
      k::rate_terms(b.size(), b.t.data(), b.e.data(), b.h.data(), b.q.data(), b1.data(), b2.data(), b3.data());
  CHECK(s1 == s2);
  CHECK(a1 == b1);
  CHECK(a2 == b2);
  CHECK(a3 == b3);
}
