// Shared construction utilities for the test suite: random observation sets,
// random model states, and tiny scenario configs. Oracle computations stay in
// the individual test files so each check remains independent.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "diasep/cacg.hpp"
#include "diasep/loose.hpp"
#include "diasep/observation.hpp"
#include "diasep/rng.hpp"
#include "diasep/tensor.hpp"
#include "diasep/tight.hpp"
#include "diasep/vmf.hpp"

namespace testutil {

using diasep::cdouble;
using diasep::Rng;
using diasep::Tensor;

inline Tensor<double> random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Tensor<double> m({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      m(i, j) = rng.normal();
      norm += m(i, j) * m(i, j);
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < d; ++j) m(i, j) /= norm;
  }
  return m;
}

inline diasep::ObservationSet random_obs(std::size_t T, std::size_t F, std::size_t C,
                                         std::size_t D, Rng& rng) {
  Tensor<cdouble> y({T, F, C});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.cnormal();
  Tensor<double> e({T, D});
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = rng.normal();
  return diasep::make_observation_set(y, e, diasep::StftConfig{});
}

// Random positive-definite Hermitian matrix with trace C.
inline Eigen::MatrixXcd random_spd(std::size_t C, Rng& rng) {
  Eigen::MatrixXcd A(C, C);
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = 0; j < C; ++j) A(i, j) = rng.cnormal();
  Eigen::MatrixXcd B = A * A.adjoint() +
                       0.1 * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(C),
                                                        static_cast<Eigen::Index>(C));
  B *= static_cast<double>(C) / B.real().trace();
  return B;
}

inline diasep::CacgParams random_cacg(std::size_t L, std::size_t F, std::size_t C, Rng& rng) {
  diasep::CacgParams p = diasep::CacgParams::identity(L, F, C);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t f = 0; f < F; ++f) p.set_matrix(l, f, random_spd(C, rng));
  return p;
}

inline diasep::VmfParams random_vmf(std::size_t K, std::size_t D, Rng& rng) {
  diasep::VmfParams p = diasep::VmfParams::defaults(K, D);
  p.mu = random_unit_rows(K, D, rng);
  for (std::size_t k = 0; k < K; ++k) p.kappa(k) = 0.5 + 5.0 * rng.uniform();
  return p;
}

// Random simplex rows over the trailing dimension of a [.., n] layout.
inline void random_simplex_fill(Tensor<double>& t, std::size_t n, Rng& rng) {
  const std::size_t rows = t.size() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      t[r * n + i] = 0.05 + rng.uniform();
      sum += t[r * n + i];
    }
    for (std::size_t i = 0; i < n; ++i) t[r * n + i] /= sum;
  }
}

inline diasep::LooseState random_loose_state(std::size_t K, std::size_t L, std::size_t F,
                                             std::size_t C, std::size_t D, Rng& rng) {
  diasep::LooseState st;
  st.vmf = random_vmf(K, D, rng);
  st.cacg = random_cacg(L, F, C, rng);
  st.pi = Tensor<double>({K});
  random_simplex_fill(st.pi, K, rng);
  st.alpha = Tensor<double>({K, L, F});
  // normalize over l per (k,f): fill then fix
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      double sum = 0.0;
      std::vector<double> v(L);
      for (std::size_t l = 0; l < L; ++l) {
        v[l] = 0.05 + rng.uniform();
        sum += v[l];
      }
      for (std::size_t l = 0; l < L; ++l) st.alpha(k, l, f) = v[l] / sum;
    }
  return st;
}

inline diasep::TightState random_tight_state(std::size_t K, std::size_t T, std::size_t F,
                                             std::size_t C, std::size_t D, Rng& rng) {
  diasep::TightState st;
  st.vmf = random_vmf(K, D, rng);
  st.cacg = random_cacg(K, F, C, rng);
  st.pi = Tensor<double>({K, T});
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    std::vector<double> v(K);
    for (std::size_t k = 0; k < K; ++k) {
      v[k] = 0.05 + rng.uniform();
      sum += v[k];
    }
    for (std::size_t k = 0; k < K; ++k) st.pi(k, t) = v[k] / sum;
  }
  return st;
}

// Random normalized joint init posterior [K,L,T,F].
inline Tensor<double> random_delta0(std::size_t K, std::size_t L, std::size_t T, std::size_t F,
                                    Rng& rng) {
  Tensor<double> d({K, L, T, F});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) {
          d(k, l, t, f) = 0.05 + rng.uniform();
          sum += d(k, l, t, f);
        }
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) d(k, l, t, f) /= sum;
    }
  return d;
}

inline Tensor<double> random_posterior0(std::size_t K, std::size_t T, std::size_t F, Rng& rng) {
  Tensor<double> p({K, T, F});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        p(k, t, f) = 0.05 + rng.uniform();
        sum += p(k, t, f);
      }
      for (std::size_t k = 0; k < K; ++k) p(k, t, f) /= sum;
    }
  return p;
}

}  // namespace testutil
