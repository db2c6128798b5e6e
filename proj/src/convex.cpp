#include "tilecast/convex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "tilecast/kernels.hpp"

namespace tilecast {

namespace {
constexpr double kInvLn2 = 1.4426950408889634073599246810019;
}

double perspective_rate(double t, double e, double h, double n0, double B, double T) {
  if (t < 0.0 || e < 0.0) throw std::invalid_argument("perspective_rate: t and e must be nonnegative");
  if (!(h > 0.0) || !(n0 > 0.0) || !(B > 0.0) || !(T > 0.0))
    throw std::invalid_argument("perspective_rate: h, n0, B, T must be positive");
  if (t == 0.0) return 0.0;  // continuous extension: t log2(1 + e h/(t n0)) -> 0
  return (B / T) * t * std::log1p(e * h / (t * n0)) * kInvLn2;
}

std::pair<double, double> perspective_rate_gradient(double t, double e, double h, double n0,
                                                    double B, double T) {
  if (t < 0.0 || e < 0.0) throw std::invalid_argument("perspective_rate_gradient: t and e must be nonnegative");
  if (!(h > 0.0) || !(n0 > 0.0) || !(B > 0.0) || !(T > 0.0))
    throw std::invalid_argument("perspective_rate_gradient: h, n0, B, T must be positive");
  if (t == 0.0) throw std::domain_error("perspective_rate_gradient: undefined at t = 0");
  const double x = e * h / (t * n0);
  const double dt = (B / T) * (std::log1p(x) - x / (1.0 + x)) * kInvLn2;
  const double de = (B / T) * (h / n0) * kInvLn2 / (1.0 + x);
  return {dt, de};
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iterations: return "max-iterations";
  }
  return "?";
}

double Allocation::expected_energy(const std::vector<double>& state_prob) const {
  double sum = 0.0;
  for (const auto& row : energy)
    for (size_t s = 0; s < row.size(); ++s) sum += state_prob[s] * row[s];
  return sum;
}

namespace {

// ---------------------------------------------------------------------------
// presolve: pin selection variables forced by their rows, drop implied rows,
// certify the only possible infeasibility (quality floor above reachable max)
// ---------------------------------------------------------------------------

struct Presolve {
  std::vector<double> y_pin;     // NaN = free
  std::vector<int> y_map;        // original y -> internal index or -1
  std::vector<int> free_y;       // internal -> original
  std::vector<int> pair_map;     // original pair -> internal or -1
  std::vector<int> keep_pairs;   // internal -> original
  struct Row {
    int pair;  // internal
    int user;
    double c_hat;  // required rate / B
    int y;         // internal y or -1 (fixed requirement)
  };
  std::vector<Row> rates;
  std::vector<SimplexRow> simplex;   // free internal indices
  std::vector<QualityRow> quality;   // free internal indices/coeffs, rhs adjusted
  bool infeasible = false;
  std::string detail;
};

void validate_subproblem(const ConvexSubproblem& sp) {
  auto bad = [](const std::string& m) { throw std::invalid_argument("solve_convex: " + m); };
  if (sp.state_count <= 0) bad("state_count must be positive");
  if (static_cast<int>(sp.state_prob.size()) != sp.state_count) bad("state_prob size mismatch");
  double qs = 0.0;
  for (double q : sp.state_prob) {
    if (!(q >= 0.0)) bad("state probabilities must be nonnegative");
    qs += q;
  }
  if (std::abs(qs - 1.0) > 1e-9) bad("state probabilities must sum to 1");
  if (!(sp.bandwidth_hz > 0) || !(sp.frame_seconds > 0) || !(sp.noise_watts > 0))
    bad("bandwidth, frame length and noise must be positive");
  for (const auto& g : sp.gain) {
    if (static_cast<int>(g.size()) != sp.state_count) bad("gain row size mismatch");
    for (double v : g)
      if (!(v > 0.0)) bad("gains must be positive");
  }
  for (const auto& r : sp.rates) {
    if (r.pair < 0 || r.pair >= static_cast<int>(sp.pairs.size())) bad("rate row: pair out of range");
    if (r.user < 0 || r.user >= static_cast<int>(sp.gain.size())) bad("rate row: user out of range");
    if (!(r.required_rate_bps > 0)) bad("rate row: required rate must be positive");
    if (r.y_index >= sp.y_count) bad("rate row: y index out of range");
  }
  if (static_cast<int>(sp.y_cost.size()) != sp.y_count) bad("y_cost size mismatch");
  for (const auto& s : sp.simplex)
    for (int i : s.y_indices)
      if (i < 0 || i >= sp.y_count) bad("simplex row: y index out of range");
  for (const auto& qr : sp.quality) {
    if (qr.y_indices.size() != qr.coeff.size()) bad("quality row: size mismatch");
    for (int i : qr.y_indices)
      if (i < 0 || i >= sp.y_count) bad("quality row: y index out of range");
  }
}

Presolve run_presolve(const ConvexSubproblem& sp) {
  Presolve ps;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ps.y_pin.assign(sp.y_count, nan);
  auto pinned = [&](int i) { return !std::isnan(ps.y_pin[i]); };

  // Quality rows are stated over the same index set as one simplex row
  // (ascending distinct coefficients). rhs at the reachable max pins the top
  // level; rhs above it is the only infeasibility this model admits; rhs at
  // or below the min is implied by the simplex row and the box.
  std::vector<char> drop_quality(sp.quality.size(), 0);
  std::vector<char> drop_simplex(sp.simplex.size(), 0);
  for (size_t qi = 0; qi < sp.quality.size(); ++qi) {
    const auto& qr = sp.quality[qi];
    if (qr.y_indices.empty()) { drop_quality[qi] = 1; continue; }
    double cmax = qr.coeff[0], cmin = qr.coeff[0];
    size_t amax = 0;
    for (size_t i = 1; i < qr.coeff.size(); ++i) {
      if (qr.coeff[i] > cmax) { cmax = qr.coeff[i]; amax = i; }
      cmin = std::min(cmin, qr.coeff[i]);
    }
    if (qr.rhs > cmax + 1e-12) {
      ps.infeasible = true;
      ps.detail = "quality floor " + std::to_string(qr.rhs) + " exceeds reachable maximum " +
                  std::to_string(cmax);
      return ps;
    }
    if (qr.rhs >= cmax - 1e-12) {
      for (size_t i = 0; i < qr.y_indices.size(); ++i) ps.y_pin[qr.y_indices[i]] = (i == amax) ? 1.0 : 0.0;
      drop_quality[qi] = 1;
    } else if (qr.rhs <= cmin + 1e-12) {
      drop_quality[qi] = 1;  // implied by simplex + box
    }
  }

  // Simplex rows fully determined by pins; a single free slot takes the rest.
  for (size_t si = 0; si < sp.simplex.size(); ++si) {
    const auto& row = sp.simplex[si].y_indices;
    double pinned_sum = 0.0;
    std::vector<int> free;
    for (int i : row) {
      if (pinned(i)) pinned_sum += ps.y_pin[i];
      else free.push_back(i);
    }
    if (free.empty()) {
      if (std::abs(pinned_sum - 1.0) > 1e-9) {
        ps.infeasible = true;
        ps.detail = "pinned selection row sums to " + std::to_string(pinned_sum);
        return ps;
      }
      drop_simplex[si] = 1;
    } else if (free.size() == 1) {
      const double v = 1.0 - pinned_sum;
      if (v < -1e-9 || v > 1.0 + 1e-9) {
        ps.infeasible = true;
        ps.detail = "selection row forces a variable outside [0,1]";
        return ps;
      }
      ps.y_pin[free[0]] = std::clamp(v, 0.0, 1.0);
      drop_simplex[si] = 1;
    }
  }

  ps.y_map.assign(sp.y_count, -1);
  for (int i = 0; i < sp.y_count; ++i) {
    if (!pinned(i)) {
      ps.y_map[i] = static_cast<int>(ps.free_y.size());
      ps.free_y.push_back(i);
    }
  }
  for (size_t si = 0; si < sp.simplex.size(); ++si) {
    if (drop_simplex[si]) continue;
    SimplexRow r;
    for (int i : sp.simplex[si].y_indices)
      if (!pinned(i)) r.y_indices.push_back(ps.y_map[i]);
    ps.simplex.push_back(std::move(r));
  }
  for (size_t qi = 0; qi < sp.quality.size(); ++qi) {
    if (drop_quality[qi]) continue;
    QualityRow r;
    r.rhs = sp.quality[qi].rhs;
    for (size_t i = 0; i < sp.quality[qi].y_indices.size(); ++i) {
      const int yi = sp.quality[qi].y_indices[i];
      if (pinned(yi)) r.rhs -= sp.quality[qi].coeff[i] * ps.y_pin[yi];
      else {
        r.y_indices.push_back(ps.y_map[yi]);
        r.coeff.push_back(sp.quality[qi].coeff[i]);
      }
    }
    ps.quality.push_back(std::move(r));
  }

  // Rate rows after pinning; pairs that keep at least one row stay active.
  ps.pair_map.assign(sp.pairs.size(), -1);
  std::vector<char> pair_used(sp.pairs.size(), 0);
  std::vector<Presolve::Row> rows;
  for (const auto& r : sp.rates) {
    double scale = 1.0;
    int y = -1;
    if (r.y_index >= 0) {
      if (pinned(r.y_index)) {
        scale = ps.y_pin[r.y_index];
        if (scale <= 0.0) continue;  // requirement vanished
      } else {
        y = ps.y_map[r.y_index];
      }
    }
    rows.push_back({r.pair, r.user, scale * r.required_rate_bps / sp.bandwidth_hz, y});
    pair_used[r.pair] = 1;
  }
  for (size_t j = 0; j < sp.pairs.size(); ++j) {
    if (pair_used[j]) {
      ps.pair_map[j] = static_cast<int>(ps.keep_pairs.size());
      ps.keep_pairs.push_back(static_cast<int>(j));
    }
  }
  for (auto& r : rows) r.pair = ps.pair_map[r.pair];
  ps.rates = std::move(rows);
  return ps;
}

// ---------------------------------------------------------------------------
// barrier solver on the normalized problem
// ---------------------------------------------------------------------------

// Dense lower Cholesky; returns false if not positive definite.
bool cholesky(std::vector<double>& a, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (int k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / d;
    }
  }
  return true;
}

void chol_solve(const std::vector<double>& l, int n, double* b) {
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= l[i * n + k] * b[k];
    b[i] = v / l[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < n; ++k) v -= l[k * n + i] * b[k];
    b[i] = v / l[i * n + i];
  }
}

// Cholesky with escalating diagonal jitter. Roundoff can push a matrix that is
// positive definite in exact arithmetic slightly indefinite; a perturbed factor
// still yields a usable direction because newton() refines against the exact
// residual afterwards.
bool cholesky_jitter(std::vector<double>& a, int n, std::vector<double>& backup) {
  backup.assign(a.begin(), a.end());
  if (cholesky(a, n)) return true;
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(backup[i * n + i]));
  double jit = (dmax > 0.0 ? dmax : 1.0) * 1e-14;
  for (int k = 0; k < 8; ++k, jit *= 64.0) {
    std::copy(backup.begin(), backup.end(), a.begin());
    for (int i = 0; i < n; ++i) a[i * n + i] += jit;
    if (cholesky(a, n)) return true;
  }
  return false;
}

struct Barrier {
  // problem (normalized)
  int ns = 0, np = 0, ny = 0;
  const std::vector<double>* q = nullptr;
  std::vector<std::vector<double>> gh;  // gh[user][state] = gain/h_ref
  std::vector<Presolve::Row> rates;
  std::vector<std::vector<int>> pair_rows;  // rate row ids per pair
  std::vector<double> w;                    // normalized y cost
  double fixed = 0.0;                       // normalized fixed cost
  std::vector<SimplexRow> simplex;
  std::vector<QualityRow> quality;

  int nvar = 0, nr = 0, nq = 0, m_rank = 0, m_total = 0, n_eq = 0;
  bool disjoint_simplex = false;

  // iterate + scratch
  std::vector<double> x, dx, grad, hinv_rhs, up_scratch, z_scratch;
  std::vector<double> rterms_gt, rterms_ge, rterms_curv;  // nr x ns
  std::vector<double> rate_val, srate, stime, squal;
  std::vector<double> itt, ite, iee, dyinv;  // inverted block diagonal
  std::vector<double> htt, hte, hee, hy;     // forward block diagonal (residuals)
  std::vector<double> schur;
  std::vector<double> eq_y, eq_m, eq_rhs;  // H^-1 A^T (nvar x n_eq), A H^-1 A^T, workspace
  std::vector<double> nu, dnu, ra;         // equality multipliers, refinement scratch
  std::vector<double> hx_s, rx_s, ddx_s;   // refinement scratch, nvar each
  std::vector<double> chol_bak;            // jitter-retry backup

  int it_t(int j, int s) const { return j * ns + s; }
  int it_e(int j, int s) const { return np * ns + j * ns + s; }
  int it_y(int i) const { return 2 * np * ns + i; }

  double f0(const std::vector<double>& v) const {
    double sum = fixed;
    for (int j = 0; j < np; ++j)
      for (int s = 0; s < ns; ++s) sum += (*q)[s] * v[it_e(j, s)];
    for (int i = 0; i < ny; ++i) sum += w[i] * v[it_y(i)];
    return sum;
  }

  // Term-magnitude scale of the variable part of f0. Linearized selection
  // costs carry mixed signs, so |f0| can cancel to near zero while the terms,
  // and hence the meaningful accuracy target, stay large; the gap criterion
  // anchors here instead. The constant is excluded: it shifts the objective
  // without moving the argmin, so it must not loosen the certificate.
  double f0_abs(const std::vector<double>& v) const {
    double sum = 0.0;
    for (int j = 0; j < np; ++j)
      for (int s = 0; s < ns; ++s) sum += (*q)[s] * v[it_e(j, s)];
    for (int i = 0; i < ny; ++i) sum += std::abs(w[i]) * v[it_y(i)];
    return sum;
  }

  // Rounding drift in the eliminated equalities accumulates across steps when
  // the scaled costs are large; scaling each row back to sum one wipes it while
  // preserving positivity. Only valid when rows share no variable.
  void renorm_simplex() {
    if (!disjoint_simplex) return;
    for (int c = 0; c < n_eq; ++c) {
      double sum = 0.0;
      for (int i : simplex[c].y_indices) sum += x[it_y(i)];
      if (sum > 0.0 && sum != 1.0) {
        const double f = 1.0 / sum;
        for (int i : simplex[c].y_indices) x[it_y(i)] *= f;
      }
    }
  }

  // slacks at v; returns false if any is nonpositive. Fills rate_val too.
  bool slacks(const std::vector<double>& v, std::vector<double>* sr, std::vector<double>* st,
              std::vector<double>* sq) {
    for (int i = 0; i < nvar; ++i)
      if (!(v[i] > 0.0)) return false;
    for (int s = 0; s < ns; ++s) {
      double tot = 0.0;
      for (int j = 0; j < np; ++j) tot += v[it_t(j, s)];
      (*st)[s] = 1.0 - tot;
      if (!((*st)[s] > 0.0)) return false;
    }
    for (int r = 0; r < nr; ++r) {
      const auto& row = rates[r];
      const double R = kernels::rate_value(ns, &v[it_t(row.pair, 0)], &v[it_e(row.pair, 0)],
                                           gh[row.user].data(), q->data());
      rate_val[r] = R;
      const double yv = row.y >= 0 ? v[it_y(row.y)] : 1.0;
      (*sr)[r] = R - row.c_hat * yv;
      if (!((*sr)[r] > 0.0)) return false;
    }
    for (int qi = 0; qi < nq; ++qi) {
      double acc = -quality[qi].rhs;
      for (size_t i = 0; i < quality[qi].y_indices.size(); ++i)
        acc += quality[qi].coeff[i] * v[it_y(quality[qi].y_indices[i])];
      (*sq)[qi] = acc;
      if (!(acc > 0.0)) return false;
    }
    return true;
  }

  double phi(const std::vector<double>& v, const std::vector<double>& sr,
             const std::vector<double>& st, const std::vector<double>& sq) const {
    double p = 0.0;
    for (int i = 0; i < nvar; ++i) p -= std::log(v[i]);
    for (int s = 0; s < ns; ++s) p -= std::log(st[s]);
    for (int r = 0; r < nr; ++r) p -= std::log(sr[r]);
    for (int qi = 0; qi < nq; ++qi) p -= std::log(sq[qi]);
    return p;
  }

  // One Newton step at barrier weight tau. Returns squared decrement, or a
  // negative value on numerical failure.
  double newton(double tau);
  void apply_hinv(const double* b, double* out);
  // w = U~^T v and out += U~ w for the slack-scaled constraint gradients
  // u~ = u/slack; U~ U~^T equals the barrier's U W U^T with W = diag(1/s^2).
  void ut_gather(const double* v, double* w);
  void u_scatter(const double* w, double* out);
  void apply_H(const double* v, double* out);  // exact H v for residuals
  // [H A^T; A 0] [dx; nu] = [bx; ba], ba may be null (zero)
  void solve_kkt(const double* bx, const double* ba, double* out_dx, double* out_nu);
};

void Barrier::ut_gather(const double* v, double* w) {
  for (int r = 0; r < nr; ++r) {
    const auto& row = rates[r];
    double acc = 0.0;
    const double* gt = &rterms_gt[r * ns];
    const double* ge = &rterms_ge[r * ns];
    for (int s = 0; s < ns; ++s)
      acc += gt[s] * v[it_t(row.pair, s)] + ge[s] * v[it_e(row.pair, s)];
    if (row.y >= 0) acc -= row.c_hat * v[it_y(row.y)];
    w[r] = acc / srate[r];
  }
  for (int s = 0; s < ns; ++s) {
    double acc = 0.0;
    for (int j = 0; j < np; ++j) acc -= v[it_t(j, s)];
    w[nr + s] = acc / stime[s];
  }
  for (int qi = 0; qi < nq; ++qi) {
    double acc = 0.0;
    for (size_t i = 0; i < quality[qi].y_indices.size(); ++i)
      acc += quality[qi].coeff[i] * v[it_y(quality[qi].y_indices[i])];
    w[nr + ns + qi] = acc / squal[qi];
  }
}

void Barrier::u_scatter(const double* w, double* out) {
  for (int r = 0; r < nr; ++r) {
    const auto& row = rates[r];
    const double a = w[r] / srate[r];
    if (a == 0.0) continue;
    const double* gt = &rterms_gt[r * ns];
    const double* ge = &rterms_ge[r * ns];
    for (int s = 0; s < ns; ++s) {
      out[it_t(row.pair, s)] += gt[s] * a;
      out[it_e(row.pair, s)] += ge[s] * a;
    }
    if (row.y >= 0) out[it_y(row.y)] -= row.c_hat * a;
  }
  for (int s = 0; s < ns; ++s) {
    const double a = w[nr + s] / stime[s];
    if (a == 0.0) continue;
    for (int j = 0; j < np; ++j) out[it_t(j, s)] -= a;
  }
  for (int qi = 0; qi < nq; ++qi) {
    const double a = w[nr + ns + qi] / squal[qi];
    if (a == 0.0) continue;
    for (size_t i = 0; i < quality[qi].y_indices.size(); ++i)
      out[it_y(quality[qi].y_indices[i])] += quality[qi].coeff[i] * a;
  }
}

void Barrier::apply_H(const double* v, double* out) {
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) {
      const int a = it_t(j, s), c = it_e(j, s);
      const int k = j * ns + s;
      out[a] = htt[k] * v[a] + hte[k] * v[c];
      out[c] = hte[k] * v[a] + hee[k] * v[c];
    }
  for (int i = 0; i < ny; ++i) out[it_y(i)] = hy[i] * v[it_y(i)];
  ut_gather(v, z_scratch.data());
  u_scatter(z_scratch.data(), out);
}

void Barrier::solve_kkt(const double* bx, const double* ba, double* out_dx, double* out_nu) {
  apply_hinv(bx, out_dx);
  if (n_eq == 0) return;
  for (int a = 0; a < n_eq; ++a) {
    double acc = ba ? -ba[a] : 0.0;
    for (int i : simplex[a].y_indices) acc += out_dx[it_y(i)];
    eq_rhs[a] = acc;
  }
  chol_solve(eq_m, n_eq, eq_rhs.data());
  for (int c = 0; c < n_eq; ++c) {
    const double v = eq_rhs[c];
    if (v == 0.0) continue;
    const double* cy = &eq_y[static_cast<size_t>(c) * nvar];
    for (int i = 0; i < nvar; ++i) out_dx[i] -= v * cy[i];
  }
  for (int c = 0; c < n_eq; ++c) out_nu[c] = eq_rhs[c];
}

void Barrier::apply_hinv(const double* b, double* out) {
  // z = D^-1 b
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) {
      const int a = it_t(j, s), c = it_e(j, s);
      const int k = j * ns + s;
      out[a] = itt[k] * b[a] + ite[k] * b[c];
      out[c] = ite[k] * b[a] + iee[k] * b[c];
    }
  for (int i = 0; i < ny; ++i) out[it_y(i)] = dyinv[i] * b[it_y(i)];

  // wvec = U~^T z with the slack-scaled columns used by the Schur factor
  std::vector<double>& wvec = z_scratch;
  ut_gather(out, wvec.data());
  chol_solve(schur, m_rank, wvec.data());

  // out -= D^-1 (U~ wvec)
  std::vector<double>& uv = up_scratch;
  std::fill(uv.begin(), uv.end(), 0.0);
  u_scatter(wvec.data(), uv.data());
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) {
      const int a = it_t(j, s), c = it_e(j, s);
      const int k = j * ns + s;
      const double zt = itt[k] * uv[a] + ite[k] * uv[c];
      const double ze = ite[k] * uv[a] + iee[k] * uv[c];
      out[a] -= zt;
      out[c] -= ze;
    }
  for (int i = 0; i < ny; ++i) out[it_y(i)] -= dyinv[i] * uv[it_y(i)];
}

double Barrier::newton(double tau) {
  // slacks and rate derivatives at x
  for (int s = 0; s < ns; ++s) {
    double tot = 0.0;
    for (int j = 0; j < np; ++j) tot += x[it_t(j, s)];
    stime[s] = 1.0 - tot;
    if (!(stime[s] > 0.0)) return -1.0;
  }
  for (int r = 0; r < nr; ++r) {
    const auto& row = rates[r];
    rate_val[r] = kernels::rate_terms(ns, &x[it_t(row.pair, 0)], &x[it_e(row.pair, 0)],
                                      gh[row.user].data(), q->data(), &rterms_gt[r * ns],
                                      &rterms_ge[r * ns], &rterms_curv[r * ns]);
    const double yv = row.y >= 0 ? x[it_y(row.y)] : 1.0;
    srate[r] = rate_val[r] - row.c_hat * yv;
    if (!(srate[r] > 0.0)) return -1.0;
  }
  for (int qi = 0; qi < nq; ++qi) {
    double acc = -quality[qi].rhs;
    for (size_t i = 0; i < quality[qi].y_indices.size(); ++i)
      acc += quality[qi].coeff[i] * x[it_y(quality[qi].y_indices[i])];
    squal[qi] = acc;
    if (!(squal[qi] > 0.0)) return -1.0;
  }

  // gradient of tau f0 + phi
  std::fill(grad.begin(), grad.end(), 0.0);
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) {
      grad[it_t(j, s)] = -1.0 / x[it_t(j, s)] + 1.0 / stime[s];
      grad[it_e(j, s)] = tau * (*q)[s] - 1.0 / x[it_e(j, s)];
    }
  for (int i = 0; i < ny; ++i) grad[it_y(i)] = tau * w[i] - 1.0 / x[it_y(i)];
  for (int r = 0; r < nr; ++r) {
    const auto& row = rates[r];
    const double inv_s = 1.0 / srate[r];
    const double* gt = &rterms_gt[r * ns];
    const double* ge = &rterms_ge[r * ns];
    for (int s = 0; s < ns; ++s) {
      grad[it_t(row.pair, s)] -= inv_s * gt[s];
      grad[it_e(row.pair, s)] -= inv_s * ge[s];
    }
    if (row.y >= 0) grad[it_y(row.y)] += inv_s * row.c_hat;
  }
  for (int qi = 0; qi < nq; ++qi) {
    const double inv_s = 1.0 / squal[qi];
    for (size_t i = 0; i < quality[qi].y_indices.size(); ++i)
      grad[it_y(quality[qi].y_indices[i])] -= inv_s * quality[qi].coeff[i];
  }

  // 2x2 block diagonal D and its inverse. The rate rows' curvature for a pair
  // share the direction (e,-t), so their scales just sum.
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) {
      double c = 0.0;
      for (int r : pair_rows[j]) c += rterms_curv[r * ns + s] / srate[r];
      const int k = j * ns + s;
      const double tv = x[it_t(j, s)], ev = x[it_e(j, s)];
      const double dtt = 1.0 / (tv * tv) + c * ev * ev;
      const double dte = -c * ev * tv;
      const double dee = 1.0 / (ev * ev) + c * tv * tv;
      const double det = dtt * dee - dte * dte;
      if (!(det > 0.0) || !std::isfinite(det)) return -1.0;
      htt[k] = dtt;
      hte[k] = dte;
      hee[k] = dee;
      itt[k] = dee / det;
      ite[k] = -dte / det;
      iee[k] = dtt / det;
    }
  for (int i = 0; i < ny; ++i) {
    const double yv = x[it_y(i)];
    dyinv[i] = yv * yv;  // D_y = 1/y^2
    hy[i] = 1.0 / (yv * yv);
  }

  // Schur complement in slack-scaled form, S = I + U~^T D^-1 U~ with
  // u~ = u/slack per constraint row: the unit diagonal keeps the Cholesky
  // well posed even when active slacks span many orders of magnitude.
  std::fill(schur.begin(), schur.end(), 0.0);
  for (int m = 0; m < m_rank; ++m) schur[m * m_rank + m] = 1.0;

  std::vector<int> cols;
  std::vector<double> colt, cole;
  for (int j = 0; j < np; ++j) {
    for (int s = 0; s < ns; ++s) {
      const int k = j * ns + s;
      cols.clear();
      colt.clear();
      cole.clear();
      cols.push_back(nr + s);  // time budget row
      colt.push_back(-1.0 / stime[s]);
      cole.push_back(0.0);
      for (int r : pair_rows[j]) {
        cols.push_back(r);
        colt.push_back(rterms_gt[r * ns + s] / srate[r]);
        cole.push_back(rterms_ge[r * ns + s] / srate[r]);
      }
      for (size_t a = 0; a < cols.size(); ++a) {
        const double zat = itt[k] * colt[a] + ite[k] * cole[a];
        const double zae = ite[k] * colt[a] + iee[k] * cole[a];
        for (size_t b = a; b < cols.size(); ++b) {
          const double v = zat * colt[b] + zae * cole[b];
          int ca = cols[a], cb = cols[b];
          if (ca < cb) std::swap(ca, cb);
          schur[ca * m_rank + cb] += v;
        }
      }
    }
  }
  // y contributions to the Schur complement, same scaling
  for (int r = 0; r < nr; ++r) {
    if (rates[r].y < 0) continue;
    const int yi = rates[r].y;
    const double u = -rates[r].c_hat / srate[r];
    schur[r * m_rank + r] += u * u * dyinv[yi];
    for (int qi = 0; qi < nq; ++qi) {
      for (size_t i = 0; i < quality[qi].y_indices.size(); ++i) {
        if (quality[qi].y_indices[i] == yi) {
          const int cq = nr + ns + qi;
          const double v = u * (quality[qi].coeff[i] / squal[qi]) * dyinv[yi];
          schur[cq * m_rank + r] += v;  // cq > r always (quality block is last)
        }
      }
    }
  }
  for (int qi = 0; qi < nq; ++qi)
    for (size_t a = 0; a < quality[qi].y_indices.size(); ++a) {
      const int c = nr + ns + qi;
      const double ca = quality[qi].coeff[a] / squal[qi];
      schur[c * m_rank + c] += ca * ca * dyinv[quality[qi].y_indices[a]];
    }
  // distinct quality rows sharing a y variable would add cross terms; the
  // builders emit one quality row per simplex row, so none arise here.

  if (!cholesky_jitter(schur, m_rank, chol_bak)) return -1.0;

  // KKT elimination data: columns of H^-1 A^T and the reduced matrix A H^-1 A^T
  if (n_eq > 0) {
    for (int c = 0; c < n_eq; ++c) {
      std::fill(hinv_rhs.begin(), hinv_rhs.end(), 0.0);
      for (int i : simplex[c].y_indices) hinv_rhs[it_y(i)] = 1.0;
      apply_hinv(hinv_rhs.data(), &eq_y[static_cast<size_t>(c) * nvar]);
    }
    for (int a = 0; a < n_eq; ++a)
      for (int b = 0; b <= a; ++b) {
        double acc = 0.0;
        const double* cb = &eq_y[static_cast<size_t>(b) * nvar];
        for (int i : simplex[a].y_indices) acc += cb[it_y(i)];
        eq_m[a * n_eq + b] = acc;
      }
    for (int a = 0; a < n_eq; ++a)
      for (int b = a + 1; b < n_eq; ++b) eq_m[a * n_eq + b] = eq_m[b * n_eq + a];
    if (!cholesky_jitter(eq_m, n_eq, chol_bak)) return -1.0;
  }

  // H dx + A^T nu = -grad, A dx = 0, followed by iterative refinement; the
  // product form of H^-1 loses accuracy when the barrier weight gets large,
  // so each round re-measures the residual before deciding to stop.
  for (int i = 0; i < nvar; ++i) hinv_rhs[i] = -grad[i];
  solve_kkt(hinv_rhs.data(), nullptr, dx.data(), nu.data());
  for (int round = 0; round < 6; ++round) {
    apply_H(dx.data(), hx_s.data());
    double gmax = 0.0;
    for (int i = 0; i < nvar; ++i) gmax = std::max(gmax, std::abs(grad[i]));
    for (int i = 0; i < nvar; ++i) rx_s[i] = -grad[i] - hx_s[i];
    for (int c = 0; c < n_eq; ++c)
      for (int i : simplex[c].y_indices) rx_s[it_y(i)] -= nu[c];
    double rmax = 0.0;
    for (int i = 0; i < nvar; ++i) rmax = std::max(rmax, std::abs(rx_s[i]));
    double ramax = 0.0;
    for (int c = 0; c < n_eq; ++c) {
      double acc = 0.0;
      for (int i : simplex[c].y_indices) acc += dx[it_y(i)];
      ra[c] = -acc;
      ramax = std::max(ramax, std::abs(acc));
    }
    if (rmax <= 1e-13 * std::max(gmax, 1.0) && ramax <= 1e-13) break;
    solve_kkt(rx_s.data(), n_eq > 0 ? ra.data() : nullptr, ddx_s.data(), dnu.data());
    for (int i = 0; i < nvar; ++i) dx[i] += ddx_s[i];
    for (int c = 0; c < n_eq; ++c) nu[c] += dnu[c];
  }

  double dec2 = 0.0;
  for (int i = 0; i < nvar; ++i) dec2 -= grad[i] * dx[i];
  return dec2;
}

}  // namespace

ConvexSolution solve_convex(const ConvexSubproblem& sp, const SolverOptions& opt) {
  validate_subproblem(sp);

  ConvexSolution sol;
  sol.allocation.pairs = sp.pairs;
  sol.allocation.time.assign(sp.pairs.size(), std::vector<double>(sp.state_count, 0.0));
  sol.allocation.energy.assign(sp.pairs.size(), std::vector<double>(sp.state_count, 0.0));
  sol.y.assign(sp.y_count, 0.0);

  Presolve ps = run_presolve(sp);
  if (ps.infeasible) {
    sol.report.status = SolveStatus::infeasible;
    sol.report.detail = ps.detail;
    return sol;
  }
  for (int i = 0; i < sp.y_count; ++i)
    if (!std::isnan(ps.y_pin[i])) sol.y[i] = ps.y_pin[i];

  const double T = sp.frame_seconds;
  double h_ref = 0.0;
  for (const auto& g : sp.gain)
    for (double v : g) h_ref = std::max(h_ref, v);
  if (!(h_ref > 0.0)) h_ref = 1.0;
  const double e_ref = T * sp.noise_watts / h_ref;

  // pinned-cost part of the objective (physical Joules)
  double pinned_cost = sp.fixed_cost;
  for (int i = 0; i < sp.y_count; ++i)
    if (!std::isnan(ps.y_pin[i])) pinned_cost += sp.y_cost[i] * ps.y_pin[i];

  Barrier bb;
  bb.ns = sp.state_count;
  bb.np = static_cast<int>(ps.keep_pairs.size());
  bb.ny = static_cast<int>(ps.free_y.size());
  bb.q = &sp.state_prob;
  bb.gh.resize(sp.gain.size());
  for (size_t k = 0; k < sp.gain.size(); ++k) {
    bb.gh[k].resize(bb.ns);
    for (int s = 0; s < bb.ns; ++s) bb.gh[k][s] = sp.gain[k][s] / h_ref;
  }
  bb.rates = ps.rates;
  bb.simplex = ps.simplex;
  bb.quality = ps.quality;
  bb.w.resize(bb.ny);
  for (int i = 0; i < bb.ny; ++i) bb.w[i] = sp.y_cost[ps.free_y[i]] / e_ref;
  bb.fixed = pinned_cost / e_ref;

  const int ns = bb.ns, np = bb.np, ny = bb.ny;
  bb.nr = static_cast<int>(bb.rates.size());
  bb.nq = static_cast<int>(bb.quality.size());
  bb.n_eq = static_cast<int>(bb.simplex.size());
  bb.nvar = 2 * np * ns + ny;
  bb.m_rank = bb.nr + ns + bb.nq;
  bb.m_total = bb.nvar + ns + bb.nr + bb.nq;

  // trivial: nothing to transmit and nothing to select
  if (bb.nr == 0 && ny == 0) {
    sol.report.status = SolveStatus::optimal;
    sol.report.objective = pinned_cost;
    sol.report.kkt_residual = 0.0;
    sol.report.max_primal_violation = 0.0;
    return sol;
  }

  bb.pair_rows.assign(np, {});
  for (int r = 0; r < bb.nr; ++r) bb.pair_rows[bb.rates[r].pair].push_back(r);

  {
    std::vector<char> seen(std::max(ny, 1), 0);
    bb.disjoint_simplex = true;
    for (const auto& row : bb.simplex)
      for (int i : row.y_indices) {
        if (seen[i]) bb.disjoint_simplex = false;
        seen[i] = 1;
      }
  }

  bb.x.assign(bb.nvar, 0.0);
  bb.dx.assign(bb.nvar, 0.0);
  bb.grad.assign(bb.nvar, 0.0);
  bb.hinv_rhs.assign(bb.nvar, 0.0);
  bb.up_scratch.assign(bb.nvar, 0.0);
  bb.z_scratch.assign(std::max(bb.m_rank, 1), 0.0);
  bb.rterms_gt.assign(static_cast<size_t>(bb.nr) * ns, 0.0);
  bb.rterms_ge.assign(static_cast<size_t>(bb.nr) * ns, 0.0);
  bb.rterms_curv.assign(static_cast<size_t>(bb.nr) * ns, 0.0);
  bb.rate_val.assign(bb.nr, 0.0);
  bb.srate.assign(bb.nr, 0.0);
  bb.stime.assign(ns, 0.0);
  bb.squal.assign(std::max(bb.nq, 1), 0.0);
  bb.itt.assign(static_cast<size_t>(np) * ns, 0.0);
  bb.ite.assign(static_cast<size_t>(np) * ns, 0.0);
  bb.iee.assign(static_cast<size_t>(np) * ns, 0.0);
  bb.htt.assign(static_cast<size_t>(np) * ns, 0.0);
  bb.hte.assign(static_cast<size_t>(np) * ns, 0.0);
  bb.hee.assign(static_cast<size_t>(np) * ns, 0.0);
  bb.dyinv.assign(std::max(ny, 1), 0.0);
  bb.hy.assign(std::max(ny, 1), 0.0);
  bb.schur.assign(static_cast<size_t>(bb.m_rank) * bb.m_rank, 0.0);
  bb.eq_y.assign(static_cast<size_t>(std::max(bb.n_eq, 1)) * bb.nvar, 0.0);
  bb.eq_m.assign(static_cast<size_t>(std::max(bb.n_eq, 1)) * std::max(bb.n_eq, 1), 0.0);
  bb.eq_rhs.assign(std::max(bb.n_eq, 1), 0.0);
  bb.nu.assign(std::max(bb.n_eq, 1), 0.0);
  bb.dnu.assign(std::max(bb.n_eq, 1), 0.0);
  bb.ra.assign(std::max(bb.n_eq, 1), 0.0);
  bb.hx_s.assign(bb.nvar, 0.0);
  bb.rx_s.assign(bb.nvar, 0.0);
  bb.ddx_s.assign(bb.nvar, 0.0);

  // ---- strictly feasible start ----
  // y: mass biased to the top coefficient with enough spread to keep every
  // entry and the quality slack strictly positive.
  for (int c = 0; c < bb.n_eq; ++c) {
    const auto& row = bb.simplex[c].y_indices;
    const int n_row = static_cast<int>(row.size());
    const QualityRow* qr = nullptr;
    for (const auto& cand : bb.quality) {
      if (cand.y_indices == row) { qr = &cand; break; }
    }
    if (qr) {
      double cmax = qr->coeff[0];
      size_t amax = 0;
      double cmin = qr->coeff[0];
      for (size_t i = 1; i < qr->coeff.size(); ++i) {
        if (qr->coeff[i] > cmax) { cmax = qr->coeff[i]; amax = i; }
        cmin = std::min(cmin, qr->coeff[i]);
      }
      // mean = cmax - delta * (cmax - mean_of_coeffs); keep mean >= rhs + 25% of headroom
      double mean_c = 0.0;
      for (double cc : qr->coeff) mean_c += cc;
      mean_c /= qr->coeff.size();
      const double headroom = cmax - qr->rhs;  // > 0 after presolve
      double delta = 0.2;
      if (cmax > mean_c) delta = std::min(0.2, 0.75 * headroom / (cmax - mean_c));
      delta = std::max(delta, 1e-6);
      double sum = 0.0;
      for (size_t i = 0; i < row.size(); ++i) {
        const double v = (i == amax ? 1.0 - delta + delta / n_row : delta / n_row);
        bb.x[bb.it_y(row[i])] = v;
        sum += v;
      }
      bb.x[bb.it_y(row[amax])] += 1.0 - sum;  // exact simplex
    } else {
      for (size_t i = 0; i < row.size(); ++i) bb.x[bb.it_y(row[i])] = 1.0 / n_row;
      double sum = 0.0;
      for (size_t i = 0; i + 1 < row.size(); ++i) sum += bb.x[bb.it_y(row[i])];
      bb.x[bb.it_y(row.back())] = 1.0 - sum;
    }
  }

  // t proportional to each pair's stiffest requirement, filling 0.9 of the
  // frame; e targets twice that requirement through the weakest gain, which
  // keeps every rate slack comfortably positive at the start.
  std::vector<double> omega(np, 0.0);
  for (const auto& r : bb.rates) omega[r.pair] = std::max(omega[r.pair], r.c_hat);
  double omega_sum = 0.0;
  for (double v : omega) omega_sum += v;
  for (int j = 0; j < np; ++j) {
    const double tj = 0.9 * (omega_sum > 0 ? omega[j] / omega_sum : 1.0 / np);
    double h_weak = std::numeric_limits<double>::infinity();
    for (int r : bb.pair_rows[j])
      for (int s = 0; s < ns; ++s) h_weak = std::min(h_weak, bb.gh[bb.rates[r].user][s]);
    if (!std::isfinite(h_weak)) h_weak = 1.0;
    const double expo = std::min(2.0 * omega[j] / tj, 900.0);
    const double ej = tj / h_weak * (std::exp2(expo) - 1.0);
    for (int s = 0; s < ns; ++s) {
      bb.x[bb.it_t(j, s)] = tj;
      bb.x[bb.it_e(j, s)] = std::max(ej, 1e-12);
    }
  }

  // ---- path following ----
  SolverReport& rep = sol.report;
  bool stalled = false;
  std::vector<double> tr_sr(bb.nr), tr_st(ns), tr_sq(std::max(bb.nq, 1));
  std::vector<double> xtrial(bb.nvar);

  // The start must be strictly interior. The heuristic above guarantees it
  // unless the exponent cap bit; raising e only raises rates, so retry upward.
  for (int tries = 0; tries < 8; ++tries) {
    if (bb.slacks(bb.x, &tr_sr, &tr_st, &tr_sq)) break;
    for (int j = 0; j < np; ++j)
      for (int s = 0; s < ns; ++s) bb.x[bb.it_e(j, s)] *= 16.0;
  }

  double tau = bb.m_total / std::max(0.5 * bb.f0_abs(bb.x), 1e-12);

  double cert_tau = -1.0;
  double cert_dec2 = std::numeric_limits<double>::infinity();
  std::vector<double> cert_x;
  std::vector<double> prov_x;
  int stall_retries = 0;

  const bool dbg = std::getenv("TILECAST_TRACE") != nullptr;
  for (int outer = 0; outer < 128; ++outer) {
    // center at tau; the stage is certified once the decrement is tiny, or
    // once it stops contracting at the floor set by the linear algebra. A
    // stage that has already reached a small decrement may see the next
    // computed direction lose descent to rounding; the best such iterate is
    // kept as a provisional center so the stage still certifies.
    bool centered = false;
    double prev_dec2 = std::numeric_limits<double>::infinity();
    double prov_dec2 = -1.0;
    auto certify = [&](double d2, const std::vector<double>& x) {
      centered = true;
      cert_tau = tau;
      cert_dec2 = d2;
      cert_x = x;
    };
    for (;;) {
      if (rep.newton_steps >= opt.max_newton) break;
      const double dec2 = bb.newton(tau);
      ++rep.newton_steps;
      if (dec2 < 0.0) {
        if (prov_dec2 >= 0.0) { certify(prov_dec2, prov_x); bb.x = prov_x; }
        else stalled = true;
        break;
      }
      if (dec2 <= 1e-4 && (prov_dec2 < 0.0 || dec2 < prov_dec2)) {
        prov_dec2 = dec2;
        prov_x = bb.x;
      }
      if (dec2 * 0.5 <= 1e-10 || (dec2 <= 1e-6 && dec2 > 0.25 * prev_dec2)) {
        certify(dec2, bb.x);
        break;
      }
      prev_dec2 = dec2;

      // fraction to boundary on the linear constraints
      double amax = std::numeric_limits<double>::infinity();
      for (int i = 0; i < bb.nvar; ++i)
        if (bb.dx[i] < 0.0) amax = std::min(amax, -bb.x[i] / bb.dx[i]);
      for (int s = 0; s < ns; ++s) {
        double dtot = 0.0;
        for (int j = 0; j < np; ++j) dtot += bb.dx[bb.it_t(j, s)];
        if (dtot > 0.0) amax = std::min(amax, bb.stime[s] / dtot);
      }
      for (int qi = 0; qi < bb.nq; ++qi) {
        double dq = 0.0;
        for (size_t i = 0; i < bb.quality[qi].y_indices.size(); ++i)
          dq += bb.quality[qi].coeff[i] * bb.dx[bb.it_y(bb.quality[qi].y_indices[i])];
        if (dq < 0.0) amax = std::min(amax, bb.squal[qi] / (-dq));
      }
      double alpha = std::min(1.0, 0.99 * amax);

      const double F0 = tau * bb.f0(bb.x) + bb.phi(bb.x, bb.srate, bb.stime, bb.squal);
      double gd = 0.0;
      for (int i = 0; i < bb.nvar; ++i) gd += bb.grad[i] * bb.dx[i];
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        for (int i = 0; i < bb.nvar; ++i) xtrial[i] = bb.x[i] + alpha * bb.dx[i];
        if (bb.slacks(xtrial, &tr_sr, &tr_st, &tr_sq)) {
          const double Ft = tau * bb.f0(xtrial) + bb.phi(xtrial, tr_sr, tr_st, tr_sq);
          if (Ft <= F0 + 0.25 * alpha * gd) {
            bb.x.swap(xtrial);
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (prov_dec2 >= 0.0) { certify(prov_dec2, prov_x); bb.x = prov_x; }
        else stalled = true;
        break;
      }
      bb.renorm_simplex();
    }

    if (dbg)
      std::fprintf(stderr,
                   "  CV outer=%d tau=%.3e centered=%d prov=%.3e steps=%d f0abs=%.3e gap=%.3e\n",
                   outer, tau, centered ? 1 : 0, prov_dec2, rep.newton_steps,
                   bb.f0_abs(bb.x), bb.m_total / tau);
    if (!centered) {
      // centering failed at this tau. A continuation jump that overshoots the
      // Newton basin is retried with a smaller jump from the last certified
      // center; the very first stage recenters lower instead.
      if (rep.newton_steps < opt.max_newton && stall_retries < 16) {
        ++stall_retries;
        if (cert_tau > 0.0 && tau > 1.1 * cert_tau) {
          bb.x = cert_x;
          tau = std::sqrt(cert_tau * tau);
          continue;
        }
        if (cert_tau < 0.0) {
          tau *= 0.1;
          continue;
        }
      }
      break;
    }

    const double gap = bb.m_total / tau;
    const double scale = std::max(bb.f0_abs(bb.x), 1e-12);
    if (gap <= opt.stationarity_tol * scale) break;
    // grow tau, but never far past the value that closes the gap: deep into
    // that regime the product-form H^{-1} stops delivering descent directions
    const double needed = bb.m_total / (opt.stationarity_tol * scale);
    tau = std::min(tau * opt.barrier_growth, std::max(needed, tau * 1.01));
  }

  // report from the last certified center; the live iterate may belong to a
  // stage whose centering never finished
  if (cert_tau > 0.0) bb.x = cert_x;
  const double tau_cert = cert_tau > 0.0 ? cert_tau : tau;
  const double gap_final = bb.m_total / tau_cert;
  const double f0_scale = std::max(bb.f0_abs(bb.x), 1e-12);
  const bool gap_ok = cert_tau > 0.0 && gap_final <= opt.stationarity_tol * f0_scale;

  // Stationarity residual: with the barrier multipliers lambda_i = 1/(tau s_i)
  // and nu_hat = nu/tau, the Lagrangian gradient equals (grad F + A^T nu)/tau,
  // whose H^{-1}-norm is the Newton decrement over tau. Small means the point
  // is centered, which together with the gap m/tau certifies suboptimality.
  double kkt = std::numeric_limits<double>::infinity();
  if (cert_tau > 0.0) kkt = std::sqrt(std::max(cert_dec2, 0.0)) / cert_tau;

  // ---- post-processing on the normalized iterate ----
  // zero-snap tiny variables, then fill each state's time budget exactly
  // (scaling t up is free and never loses feasibility).
  double emax = 0.0;
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) emax = std::max(emax, bb.x[bb.it_e(j, s)]);
  std::vector<double> x_pre = bb.x;
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s) {
      if (bb.x[bb.it_t(j, s)] < opt.snap_time_rel) bb.x[bb.it_t(j, s)] = 0.0;
      if (bb.x[bb.it_e(j, s)] < opt.snap_energy_rel * emax) bb.x[bb.it_e(j, s)] = 0.0;
    }
  // a snap that would break a rate row is undone for that row's pair
  for (int r = 0; r < bb.nr; ++r) {
    const auto& row = bb.rates[r];
    double R = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double tv = bb.x[bb.it_t(row.pair, s)];
      const double ev = bb.x[bb.it_e(row.pair, s)];
      if (tv > 0.0) R += (*bb.q)[s] * tv * std::log1p(ev * bb.gh[row.user][s] / tv) * kInvLn2;
    }
    const double yv = row.y >= 0 ? bb.x[bb.it_y(row.y)] : 1.0;
    if (row.c_hat * yv - R > opt.feasibility_tol * row.c_hat) {
      for (int s = 0; s < ns; ++s) {
        bb.x[bb.it_t(row.pair, s)] = x_pre[bb.it_t(row.pair, s)];
        bb.x[bb.it_e(row.pair, s)] = x_pre[bb.it_e(row.pair, s)];
      }
    }
  }
  for (int s = 0; s < ns; ++s) {
    double tot = 0.0;
    for (int j = 0; j < np; ++j) tot += bb.x[bb.it_t(j, s)];
    if (tot > 0.0) {
      const double f = 1.0 / tot;
      for (int j = 0; j < np; ++j) bb.x[bb.it_t(j, s)] *= f;
    }
  }

  // primal violations (relative) at the returned point
  double viol = 0.0;
  for (int s = 0; s < ns; ++s) {
    double tot = 0.0;
    for (int j = 0; j < np; ++j) {
      tot += bb.x[bb.it_t(j, s)];
      viol = std::max(viol, -bb.x[bb.it_t(j, s)]);
      viol = std::max(viol, -bb.x[bb.it_e(j, s)]);
    }
    viol = std::max(viol, tot - 1.0);
  }
  const double viol_time = viol;
  for (int r = 0; r < bb.nr; ++r) {
    const auto& row = bb.rates[r];
    double R = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double tv = bb.x[bb.it_t(row.pair, s)];
      const double ev = bb.x[bb.it_e(row.pair, s)];
      if (tv > 0.0) R += (*bb.q)[s] * tv * std::log1p(ev * bb.gh[row.user][s] / tv) * kInvLn2;
    }
    const double yv = row.y >= 0 ? bb.x[bb.it_y(row.y)] : 1.0;
    viol = std::max(viol, (row.c_hat * yv - R) / row.c_hat);
  }
  const double viol_rate = viol;
  for (int i = 0; i < ny; ++i) {
    viol = std::max(viol, -bb.x[bb.it_y(i)]);
    viol = std::max(viol, bb.x[bb.it_y(i)] - 1.0);
  }
  const double viol_box = viol;
  for (int c = 0; c < bb.n_eq; ++c) {
    double sum = -1.0;
    for (int i : bb.simplex[c].y_indices) sum += bb.x[bb.it_y(i)];
    viol = std::max(viol, std::abs(sum));
  }
  const double viol_eq = viol;
  for (int qi = 0; qi < bb.nq; ++qi) {
    double acc = -bb.quality[qi].rhs;
    for (size_t i = 0; i < bb.quality[qi].y_indices.size(); ++i)
      acc += bb.quality[qi].coeff[i] * bb.x[bb.it_y(bb.quality[qi].y_indices[i])];
    viol = std::max(viol, -acc / std::max(1.0, bb.quality[qi].rhs));
  }
  if (std::getenv("TILECAST_TRACE") && viol > opt.feasibility_tol)
    std::fprintf(stderr, "  CV violfam time=%.3e rate=%.3e box=%.3e eq=%.3e qual=%.3e\n",
                 viol_time, viol_rate, viol_box, viol_eq, viol);

  // ---- unscale and report ----
  for (int j = 0; j < np; ++j) {
    const int orig = ps.keep_pairs[j];
    for (int s = 0; s < ns; ++s) {
      sol.allocation.time[orig][s] = T * bb.x[bb.it_t(j, s)];
      sol.allocation.energy[orig][s] = e_ref * bb.x[bb.it_e(j, s)];
    }
  }
  for (int i = 0; i < ny; ++i) sol.y[ps.free_y[i]] = bb.x[bb.it_y(i)];

  double objective = pinned_cost;
  for (int j = 0; j < np; ++j)
    for (int s = 0; s < ns; ++s)
      objective += sp.state_prob[s] * sol.allocation.energy[ps.keep_pairs[j]][s];
  for (int i = 0; i < ny; ++i) objective += sp.y_cost[ps.free_y[i]] * sol.y[ps.free_y[i]];

  if (std::getenv("TILECAST_TRACE"))
    std::fprintf(stderr,
                 "  CV final cert_tau=%.3e gap_final=%.3e f0abs=%.3e gap_ok=%d viol=%.3e kkt=%.3e "
                 "steps=%d stalled=%d\n",
                 cert_tau, gap_final, bb.f0_abs(bb.x), gap_ok ? 1 : 0, viol, kkt,
                 rep.newton_steps, stalled ? 1 : 0);
  rep.objective = objective;
  rep.max_primal_violation = viol;
  rep.kkt_residual = kkt;
  // the stationarity residual carries the units of f0, so it is held to the
  // same term-magnitude anchor as the gap
  if (gap_ok && viol <= opt.feasibility_tol && kkt <= opt.stationarity_tol * f0_scale)
    rep.status = SolveStatus::optimal;
  else
    rep.status = SolveStatus::max_iterations;
  if (stalled && rep.status != SolveStatus::optimal) rep.detail = "line search stalled";
  return sol;
}

}  // namespace tilecast
