// Tightly integrated spectral-spatial mixture: one shared latent activity
// variable per (k,t,f), so each speaker owns exactly one spatial component.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "diasep/cacg.hpp"
#include "diasep/observation.hpp"
#include "diasep/tensor.hpp"
#include "diasep/vmf.hpp"

namespace diasep {

struct TightState {
  VmfParams vmf;              // [K]
  CacgParams cacg;            // [K,F]
  Tensor<double> pi;          // [K,T]
  Tensor<double> posterior;   // [K,T,F]
  std::vector<double> loglik; // one entry per E-step
  bool underflow = false;

  std::size_t K() const { return pi.dim(0); }
  std::size_t T() const { return pi.dim(1); }
};

struct TightEStep {
  Tensor<double> posterior;  // [K,T,F]
  Tensor<double> quad;       // [K,T,F]
  double loglik = 0.0;
  bool underflow = false;
};

inline TightEStep tight_e_step(const ObservationSet& obs, const TightState& state) {
  const std::size_t T = obs.T(), F = obs.F(), K = state.K();
  check(state.T() == T, "tight_e_step: state/observation frame mismatch");
  const Tensor<double> vmflog = vmf_log_pdf_all(obs.e, state.vmf);
  CacgLik lik = cacg_log_pdf_field(obs.y, state.cacg, &obs.degenerate);

  TightEStep out{Tensor<double>({K, T, F}), std::move(lik.quad), 0.0, false};
  std::vector<double> logits(K);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t k = 0; k < K; ++k) {
        const double p = state.pi(k, t);
        logits[k] =
            (p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity()) +
            vmflog(k, t) + lik.logp(k, t, f);
      }
      const double lse = detail::logsumexp(logits.data(), K);
      if (!(lse > -std::numeric_limits<double>::infinity())) {
        for (std::size_t k = 0; k < K; ++k)
          out.posterior(k, t, f) = 1.0 / static_cast<double>(K);
        out.underflow = true;
        continue;
      }
      for (std::size_t k = 0; k < K; ++k) out.posterior(k, t, f) = std::exp(logits[k] - lse);
      out.loglik += lse;
    }
  }
  return out;
}

inline void tight_m_step(const ObservationSet& obs, const Tensor<double>& posterior,
                         TightState& state, const Tensor<double>* quad = nullptr) {
  const std::size_t T = obs.T(), F = obs.F(), K = posterior.dim(0);
  check(posterior.rank() == 3 && posterior.dim(1) == T && posterior.dim(2) == F,
        "tight_m_step: posterior must be [K,T,F]");

  Tensor<double> gamma_tk({T, K});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t f = 0; f < F; ++f) s += posterior(k, t, f);
      const double g = s / static_cast<double>(F);
      state.pi(k, t) = g;
      gamma_tk(t, k) = g;
    }
  state.vmf = vmf_m_step(obs.e, gamma_tk, state.vmf);

  Tensor<double> post_tfk({T, F, K});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) post_tfk(t, f, k) = posterior(k, t, f);
  state.cacg = cacg_m_step(obs.y, post_tfk, state.cacg, quad);
}

// Starts with an M-step from the initial posterior, then alternates E/M for
// `iters` iterations, recording the total log-likelihood at every E-step.
inline TightState tight_fit(const ObservationSet& obs, const Tensor<double>& init_posterior,
                            std::size_t iters) {
  obs.validate();
  check(init_posterior.rank() == 3 && init_posterior.dim(1) == obs.T() &&
            init_posterior.dim(2) == obs.F(),
        "tight_fit: init posterior must be [K,T,F]");
  const std::size_t K = init_posterior.dim(0);
  for (std::size_t t = 0; t < obs.T(); ++t)
    for (std::size_t f = 0; f < obs.F(); ++f) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += init_posterior(k, t, f);
      check(std::abs(s - 1.0) <= 1e-6, "tight_fit: init posterior not normalized over k");
    }

  TightState state{VmfParams::defaults(K, obs.D()),
                   CacgParams::identity(K, obs.F(), obs.C()),
                   Tensor<double>({K, obs.T()}),
                   init_posterior,
                   {},
                   false};
  tight_m_step(obs, init_posterior, state);
  for (std::size_t i = 0; i < iters; ++i) {
    TightEStep e = tight_e_step(obs, state);
    check(std::isfinite(e.loglik),
          "tight_fit: non-finite log-likelihood at iteration " + std::to_string(i));
    state.loglik.push_back(e.loglik);
    state.underflow = state.underflow || e.underflow;
    state.posterior = std::move(e.posterior);
    tight_m_step(obs, state.posterior, state, &e.quad);
  }
  return state;
}

}  // namespace diasep
