// Plain cACG mixture with a time-varying component prior pi_lt. Used on its
// own as a spatial-only baseline and as the warmup stage of the spatial
// initializer.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "diasep/cacg.hpp"
#include "diasep/observation.hpp"
#include "diasep/tensor.hpp"

namespace diasep {

struct CacgmmState {
  CacgParams cacg;            // [L,F]
  Tensor<double> pi;          // [L,T]
  Tensor<double> eta;         // [L,T,F], component posterior
  std::vector<double> loglik; // one entry per E-step
  bool underflow = false;

  std::size_t L() const { return pi.dim(0); }
  std::size_t T() const { return pi.dim(1); }
};

struct CacgmmEStep {
  Tensor<double> eta;   // [L,T,F]
  Tensor<double> quad;  // [L,T,F]
  double loglik = 0.0;
  bool underflow = false;
};

inline CacgmmEStep cacgmm_e_step(const ObservationSet& obs, const CacgmmState& state) {
  const std::size_t T = obs.T(), F = obs.F(), L = state.L();
  check(state.T() == T, "cacgmm_e_step: state/observation frame mismatch");
  CacgLik lik = cacg_log_pdf_field(obs.y, state.cacg, &obs.degenerate);

  CacgmmEStep out{Tensor<double>({L, T, F}), std::move(lik.quad), 0.0, false};
  std::vector<double> logits(L);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t l = 0; l < L; ++l) {
        const double p = state.pi(l, t);
        logits[l] =
            (p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity()) +
            lik.logp(l, t, f);
      }
      const double lse = detail::logsumexp(logits.data(), L);
      if (!(lse > -std::numeric_limits<double>::infinity())) {
        for (std::size_t l = 0; l < L; ++l) out.eta(l, t, f) = 1.0 / static_cast<double>(L);
        out.underflow = true;
        continue;
      }
      for (std::size_t l = 0; l < L; ++l) out.eta(l, t, f) = std::exp(logits[l] - lse);
      out.loglik += lse;
    }
  }
  return out;
}

inline void cacgmm_m_step(const ObservationSet& obs, const Tensor<double>& eta,
                          CacgmmState& state, const Tensor<double>* quad = nullptr) {
  const std::size_t T = obs.T(), F = obs.F(), L = eta.dim(0);
  check(eta.rank() == 3 && eta.dim(1) == T && eta.dim(2) == F, "cacgmm_m_step: eta shape");
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t f = 0; f < F; ++f) s += eta(l, t, f);
      state.pi(l, t) = s / static_cast<double>(F);
    }
  Tensor<double> eta_tfl({T, F, L});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) eta_tfl(t, f, l) = eta(l, t, f);
  state.cacg = cacg_m_step(obs.y, eta_tfl, state.cacg, quad);
}

// Starts with an M-step from the initial posterior, then alternates E/M.
inline CacgmmState cacgmm_fit(const ObservationSet& obs, const Tensor<double>& eta0,
                              std::size_t iters) {
  obs.validate();
  check(eta0.rank() == 3 && eta0.dim(1) == obs.T() && eta0.dim(2) == obs.F(),
        "cacgmm_fit: init posterior must be [L,T,F]");
  const std::size_t L = eta0.dim(0);

  CacgmmState state{CacgParams::identity(L, obs.F(), obs.C()),
                    Tensor<double>({L, obs.T()}), eta0, {}, false};
  cacgmm_m_step(obs, eta0, state);
  for (std::size_t i = 0; i < iters; ++i) {
    CacgmmEStep e = cacgmm_e_step(obs, state);
    check(std::isfinite(e.loglik),
          "cacgmm_fit: non-finite log-likelihood at iteration " + std::to_string(i));
    state.loglik.push_back(e.loglik);
    state.underflow = state.underflow || e.underflow;
    state.eta = std::move(e.eta);
    cacgmm_m_step(obs, state.eta, state, &e.quad);
  }
  return state;
}

}  // namespace diasep
