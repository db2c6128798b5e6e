#include "tilecast/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace tilecast::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

std::atomic<Isa> g_isa{detect()};

}  // namespace

bool isa_supported(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument("kernels: ISA not supported on this host");
  g_isa.store(isa, std::memory_order_relaxed);
}

void reset_isa() { g_isa.store(detect(), std::memory_order_relaxed); }

double rate_terms(std::size_t n, const double* t, const double* e, const double* h,
                  const double* q, double* gt, double* ge, double* curv) {
  return active_isa() == Isa::avx2 ? detail::rate_terms_avx2(n, t, e, h, q, gt, ge, curv)
                                   : detail::rate_terms_scalar(n, t, e, h, q, gt, ge, curv);
}

double rate_value(std::size_t n, const double* t, const double* e, const double* h,
                  const double* q) {
  return active_isa() == Isa::avx2 ? detail::rate_value_avx2(n, t, e, h, q)
                                   : detail::rate_value_scalar(n, t, e, h, q);
}

}  // namespace tilecast::kernels
