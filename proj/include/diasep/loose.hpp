// Loosely coupled spectral-spatial mixture: separate latent variables for
// speaker activity (z_kt) and spatial class activity (z_ltf), linked by
// per-frequency coupling weights alpha_klf. The joint posterior factorizes
// exactly as delta_kltf = gamma_kt * rho_klf|t, which is what both the E-step
// and the sufficient statistics below exploit; the full delta tensor is only
// materialized when mask extraction needs it.
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

struct LooseState {
  VmfParams vmf;             // [K]
  CacgParams cacg;           // [L,F]
  Tensor<double> pi;         // [K]
  Tensor<double> alpha;      // [K,L,F], rows over l on the simplex
  Tensor<double> gamma;      // [K,T]
  Tensor<double> eta;        // [L,T,F]
  Tensor<double> delta;      // [K,L,T,F], from the final E-step (init when iters=0)
  std::vector<double> loglik;
  bool underflow = false;
  bool alpha_reset = false;

  std::size_t K() const { return alpha.dim(0); }
  std::size_t L() const { return alpha.dim(1); }
  std::size_t F() const { return alpha.dim(2); }
  std::size_t T() const { return gamma.dim(1); }
};

struct LooseEStep {
  Tensor<double> gamma;      // [K,T]
  Tensor<double> eta;        // [L,T,F]
  Tensor<double> alpha_num;  // [K,L,F] = sum_t gamma_kt * rho_klf|t
  Tensor<double> gsum;       // [K]     = sum_t gamma_kt
  Tensor<double> quad;       // [L,T,F]
  Tensor<double> delta;      // [K,L,T,F] if materialized, else empty
  double loglik = 0.0;
  bool underflow = false;
};

// E-step via the exact factorization:
//   s_ktf   = sum_l alpha_klf p(y_tf|l)
//   gamma_kt ∝ pi_k p(e_t|k) prod_f s_ktf
//   rho_klf|t = alpha_klf p(y_tf|l) / s_ktf
//   delta_kltf = gamma_kt rho_klf|t,  eta_ltf = sum_k delta_kltf
// Everything runs in the log domain until the final exponentials.
inline LooseEStep loose_e_step(const ObservationSet& obs, const LooseState& state,
                               bool materialize_delta = false) {
  const std::size_t T = obs.T(), F = obs.F();
  const std::size_t K = state.K(), L = state.L();
  check(state.F() == F, "loose_e_step: state/observation bin mismatch");
  const double neg_inf = -std::numeric_limits<double>::infinity();

  const Tensor<double> vmflog = vmf_log_pdf_all(obs.e, state.vmf);
  CacgLik lik = cacg_log_pdf_field(obs.y, state.cacg, &obs.degenerate);

  Tensor<double> log_alpha({K, L, F});
  for (std::size_t i = 0; i < log_alpha.size(); ++i)
    log_alpha[i] = state.alpha[i] > 0.0 ? std::log(state.alpha[i]) : neg_inf;
  std::vector<double> log_pi(K);
  for (std::size_t k = 0; k < K; ++k)
    log_pi[k] = state.pi(k) > 0.0 ? std::log(state.pi(k)) : neg_inf;

  LooseEStep out;
  out.gamma = Tensor<double>({K, T});
  out.eta = Tensor<double>({L, T, F});
  out.eta.fill(0.0);
  out.alpha_num = Tensor<double>({K, L, F});
  out.alpha_num.fill(0.0);
  out.gsum = Tensor<double>({K});
  out.gsum.fill(0.0);
  if (materialize_delta) {
    out.delta = Tensor<double>({K, L, T, F});
    out.delta.fill(0.0);
  }

  std::vector<double> log_s(K * F), logits(L), glogit(K);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t l = 0; l < L; ++l)
          logits[l] = log_alpha(k, l, f) + lik.logp(l, t, f);
        const double ls = detail::logsumexp(logits.data(), L);
        log_s[k * F + f] = ls;
        acc += ls;
      }
      glogit[k] = log_pi[k] + vmflog(k, t) + acc;
    }
    const double lse = detail::logsumexp(glogit.data(), K);
    if (!(lse > neg_inf)) {
      for (std::size_t k = 0; k < K; ++k) out.gamma(k, t) = 1.0 / static_cast<double>(K);
      out.underflow = true;
    } else {
      out.loglik += lse;
      for (std::size_t k = 0; k < K; ++k) out.gamma(k, t) = std::exp(glogit[k] - lse);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double g = out.gamma(k, t);
      out.gsum(k) += g;
      if (g <= 0.0) continue;
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t f = 0; f < F; ++f) {
          const double la = log_alpha(k, l, f);
          if (la == neg_inf) continue;
          const double rho = std::exp(la + lik.logp(l, t, f) - log_s[k * F + f]);
          const double d = g * rho;
          out.alpha_num(k, l, f) += d;
          out.eta(l, t, f) += d;
          if (materialize_delta) out.delta(k, l, t, f) = d;
        }
      }
    }
  }
  out.quad = std::move(lik.quad);
  return out;
}

// Total log-likelihood sum_t log sum_k pi_k p(e_t|k) prod_f sum_l alpha_klf p(y_tf|l).
inline double loose_loglik(const ObservationSet& obs, const LooseState& state) {
  return loose_e_step(obs, state).loglik;
}

namespace detail {

inline void loose_update_vmf_pi(const ObservationSet& obs, const Tensor<double>& gamma,
                                LooseState& state) {
  const std::size_t T = obs.T(), K = state.K();
  Tensor<double> gamma_tk({T, K});
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      gamma_tk(t, k) = gamma(k, t);
      s += gamma(k, t);
    }
    state.pi(k) = s / static_cast<double>(T);
  }
  state.vmf = vmf_m_step(obs.e, gamma_tk, state.vmf);
}

inline void loose_update_cacg(const ObservationSet& obs, const Tensor<double>& eta,
                              LooseState& state, const Tensor<double>* quad) {
  const std::size_t T = obs.T(), F = obs.F(), L = state.L();
  Tensor<double> eta_tfl({T, F, L});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) eta_tfl(t, f, l) = eta(l, t, f);
  state.cacg = cacg_m_step(obs.y, eta_tfl, state.cacg, quad);
}

}  // namespace detail

// M-step from an explicit joint posterior (the general Eq.-(6)-style update:
// the alpha denominator is taken per (k,f), so this also accepts posteriors
// that do not factorize, e.g. the initializer's outer product).
inline void loose_m_step(const ObservationSet& obs, const Tensor<double>& delta,
                         const Tensor<double>& gamma, const Tensor<double>& eta,
                         LooseState& state, const Tensor<double>* quad = nullptr) {
  const std::size_t T = obs.T(), F = obs.F();
  const std::size_t K = state.K(), L = state.L();
  check(delta.rank() == 4 && delta.dim(0) == K && delta.dim(1) == L && delta.dim(2) == T &&
            delta.dim(3) == F,
        "loose_m_step: delta must be [K,L,T,F]");

  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t f = 0; f < F; ++f) {
      double denom = 0.0;
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < T; ++t) denom += delta(k, l, t, f);
      if (denom < 1e-300) {
        for (std::size_t l = 0; l < L; ++l) state.alpha(k, l, f) = 1.0 / static_cast<double>(L);
        state.alpha_reset = true;
        continue;
      }
      for (std::size_t l = 0; l < L; ++l) {
        double num = 0.0;
        for (std::size_t t = 0; t < T; ++t) num += delta(k, l, t, f);
        state.alpha(k, l, f) = num / denom;
      }
    }
  }
  detail::loose_update_vmf_pi(obs, gamma, state);
  detail::loose_update_cacg(obs, eta, state, quad);
}

// M-step from E-step sufficient statistics; exploits that the exact posterior
// has sum_l delta_kltf = gamma_kt for every f, so the alpha denominator is
// just sum_t gamma_kt.
inline void loose_m_step_stats(const ObservationSet& obs, const LooseEStep& es,
                               LooseState& state) {
  const std::size_t F = obs.F();
  const std::size_t K = state.K(), L = state.L();
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = es.gsum(k);
    if (denom < 1e-300) {
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t f = 0; f < F; ++f) state.alpha(k, l, f) = 1.0 / static_cast<double>(L);
      state.alpha_reset = true;
      continue;
    }
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t f = 0; f < F; ++f)
        state.alpha(k, l, f) = es.alpha_num(k, l, f) / denom;
  }
  detail::loose_update_vmf_pi(obs, es.gamma, state);
  detail::loose_update_cacg(obs, es.eta, state, &es.quad);
}

// Starts with an M-step from delta0, then alternates E/M for `iters`
// iterations. The final E-step materializes delta for mask extraction.
inline LooseState loose_fit(const ObservationSet& obs, const Tensor<double>& delta0,
                            std::size_t iters) {
  obs.validate();
  const std::size_t T = obs.T(), F = obs.F();
  check(delta0.rank() == 4 && delta0.dim(2) == T && delta0.dim(3) == F,
        "loose_fit: delta0 must be [K,L,T,F]");
  const std::size_t K = delta0.dim(0), L = delta0.dim(1);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) s += delta0(k, l, t, f);
      check(std::abs(s - 1.0) <= 1e-6, "loose_fit: delta0 not normalized over (k,l)");
    }

  LooseState state;
  state.vmf = VmfParams::defaults(K, obs.D());
  state.cacg = CacgParams::identity(L, F, obs.C());
  state.pi = Tensor<double>({K});
  state.alpha = Tensor<double>({K, L, F});
  state.gamma = Tensor<double>({K, T});
  state.eta = Tensor<double>({L, T, F});
  state.eta.fill(0.0);

  // Marginals of the initial joint posterior.
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t f = 0; f < F; ++f) s += delta0(k, l, t, f);
      state.gamma(k, t) = s / static_cast<double>(F);
    }
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += delta0(k, l, t, f);
        state.eta(l, t, f) = s;
      }
  state.delta = delta0;
  loose_m_step(obs, delta0, state.gamma, state.eta, state);

  for (std::size_t i = 0; i < iters; ++i) {
    const bool last = i + 1 == iters;
    LooseEStep e = loose_e_step(obs, state, last);
    check(std::isfinite(e.loglik),
          "loose_fit: non-finite log-likelihood at iteration " + std::to_string(i));
    state.loglik.push_back(e.loglik);
    state.underflow = state.underflow || e.underflow;
    state.gamma = e.gamma;
    state.eta = e.eta;
    if (last) state.delta = std::move(e.delta);
    loose_m_step_stats(obs, e, state);
  }
  return state;
}

}  // namespace diasep
