#include "tilecast/experiments.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "tilecast/baselines.hpp"
#include "tilecast/rng.hpp"

namespace tilecast {

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::users: return "K";
    case SweepParam::zipf_gamma: return "gamma";
    case SweepParam::mean_quality: return "rbar";
  }
  throw std::invalid_argument("unknown sweep parameter");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::proposed_wo: return "proposed_wo";
    case Scheme::proposed_w: return "proposed_w";
    case Scheme::baseline_wo: return "baseline_wo";
    case Scheme::baseline_w: return "baseline_w";
  }
  throw std::invalid_argument("unknown scheme");
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "K") return SweepParam::users;
  if (name == "gamma") return SweepParam::zipf_gamma;
  if (name == "rbar") return SweepParam::mean_quality;
  throw std::invalid_argument("unknown sweep parameter: " + name);
}

Scheme parse_scheme(const std::string& name) {
  if (name == "proposed_wo") return Scheme::proposed_wo;
  if (name == "proposed_w") return Scheme::proposed_w;
  if (name == "baseline_wo") return Scheme::baseline_wo;
  if (name == "baseline_w") return Scheme::baseline_w;
  throw std::invalid_argument("unknown scheme: " + name);
}

std::vector<Scheme> all_schemes() {
  return {Scheme::proposed_wo, Scheme::proposed_w, Scheme::baseline_wo, Scheme::baseline_w};
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepParam param, double value) {
  ScenarioConfig cfg = base;
  switch (param) {
    case SweepParam::users:
      cfg.users = static_cast<int>(std::llround(value));
      break;
    case SweepParam::zipf_gamma:
      cfg.zipf_gamma = value;
      break;
    case SweepParam::mean_quality: {
      const int rbar = static_cast<int>(std::llround(value));
      cfg.r_lb = rbar - 1;
      cfg.r_ub = rbar + 1;
      break;
    }
  }
  return cfg;
}

namespace {

int thread_count() {
  if (const char* env = std::getenv("TILECAST_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct Slot {
  double energy = 0.0;
  bool ok = false;
};

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  const int nv = static_cast<int>(spec.values.size());
  const int ns = static_cast<int>(spec.schemes.size());
  const int nr = spec.base.realizations;
  if (nv == 0 || ns == 0) throw std::invalid_argument("run_sweep: empty values or schemes");
  if (nr < 1) throw std::invalid_argument("run_sweep: realizations must be positive");

  std::vector<ScenarioConfig> configs;
  configs.reserve(nv);
  for (double v : spec.values) configs.push_back(apply_sweep_value(spec.base, spec.param, v));

  std::vector<Slot> slots(static_cast<size_t>(nv) * ns * nr);
  const auto slot_at = [&](int vi, int si, int i) -> Slot& {
    return slots[(static_cast<size_t>(vi) * ns + si) * nr + i];
  };

  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const int total = nv * nr;

  const auto worker = [&] {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= total) return;
      const int vi = task / nr;
      const int i = task % nr;
      try {
        const Realization real = sample_realization(configs[vi], i);
        const Instance& inst = real.instance;
        for (int si = 0; si < ns; ++si) {
          Slot& slot = slot_at(vi, si, i);
          switch (spec.schemes[si]) {
            case Scheme::proposed_wo: {
              const auto sol = solve_no_transcode(inst, spec.dc.solver);
              slot = {sol.objective, sol.report.status == SolveStatus::optimal};
              break;
            }
            case Scheme::proposed_w: {
              DcOptions dc = spec.dc;
              // keyed by realization only, so restart noise pairs across cells
              dc.seed = Rng::stream(spec.base.seed,
                                    {static_cast<uint64_t>(StreamTag::dc_restart),
                                     static_cast<uint64_t>(i)})
                            .next_u64();
              const auto sol = solve_transcode_dc(inst, dc);
              slot = {sol.objective, sol.report.status == SolveStatus::optimal};
              break;
            }
            case Scheme::baseline_wo: {
              const auto sol = solve_baseline_unicast(inst, spec.dc.solver);
              slot = {sol.objective, sol.report.status == SolveStatus::optimal};
              break;
            }
            case Scheme::baseline_w: {
              const auto sol = solve_baseline_max_quality(inst, spec.dc.solver);
              slot = {sol.objective, sol.report.status == SolveStatus::optimal};
              break;
            }
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(total);  // drain remaining tasks
        return;
      }
    }
  };

  const int threads = std::min(thread_count(), total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepResult out;
  out.param = spec.param;
  out.cells.reserve(static_cast<size_t>(nv) * ns);
  for (int vi = 0; vi < nv; ++vi) {
    for (int si = 0; si < ns; ++si) {
      SweepCell cell;
      cell.value = spec.values[vi];
      cell.scheme = spec.schemes[si];
      cell.n_total = nr;
      double sum = 0.0;
      for (int i = 0; i < nr; ++i) {
        const Slot& slot = slot_at(vi, si, i);
        if (slot.ok) {
          ++cell.n_ok;
          sum += slot.energy;
        }
      }
      if (cell.n_ok > 0) {
        cell.mean_energy_j = sum / cell.n_ok;
        if (cell.n_ok > 1) {
          double ss = 0.0;
          for (int i = 0; i < nr; ++i) {
            const Slot& slot = slot_at(vi, si, i);
            if (slot.ok) {
              const double d = slot.energy - cell.mean_energy_j;
              ss += d * d;
            }
          }
          cell.stderr_j = std::sqrt(ss / (cell.n_ok - 1) / cell.n_ok);
        }
      }
      out.cells.push_back(cell);
    }
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_csv(const SweepResult& result) {
  std::string out = "param,value,scheme,mean_energy_j,stderr_j,n_ok,n_total\n";
  const std::string param = to_string(result.param);
  for (const SweepCell& cell : result.cells) {
    out += param;
    out += ',';
    out += format_double(cell.value);
    out += ',';
    out += to_string(cell.scheme);
    out += ',';
    out += format_double(cell.mean_energy_j);
    out += ',';
    out += format_double(cell.stderr_j);
    out += ',';
    out += std::to_string(cell.n_ok);
    out += ',';
    out += std::to_string(cell.n_total);
    out += '\n';
  }
  return out;
}

}  // namespace tilecast
