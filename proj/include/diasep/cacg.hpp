// Complex Angular Central Gaussian on the complex unit sphere, with batched
// per-frequency log-density evaluation and the standard fixed-point M-step
// (one sweep per EM iteration).
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "diasep/tensor.hpp"

namespace diasep {

constexpr double kEigFloor = 1e-6;

namespace detail {

inline double logsumexp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace detail

inline double cacg_log_normalizer(std::size_t C) {
  check(C >= 1, "cacg: channel count must be >= 1");
  return std::lgamma(static_cast<double>(C)) - std::log(2.0) -
         static_cast<double>(C) * std::log(M_PI);
}

struct CacgParams {
  Tensor<cdouble> B;             // [L,F,C,C], Hermitian PD, trace C
  Tensor<std::uint8_t> dormant;  // [L,F]

  static CacgParams identity(std::size_t L, std::size_t F, std::size_t C) {
    CacgParams p{Tensor<cdouble>({L, F, C, C}), Tensor<std::uint8_t>({L, F})};
    p.B.fill(cdouble(0.0, 0.0));
    p.dormant.fill(0);
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t c = 0; c < C; ++c) p.B(l, f, c, c) = cdouble(1.0, 0.0);
    return p;
  }

  std::size_t L() const { return B.dim(0); }
  std::size_t F() const { return B.dim(1); }
  std::size_t C() const { return B.dim(2); }

  Eigen::MatrixXcd matrix(std::size_t l, std::size_t f) const {
    const std::size_t n = C();
    Eigen::MatrixXcd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = B(l, f, i, j);
    return m;
  }

  void set_matrix(std::size_t l, std::size_t f, const Eigen::MatrixXcd& m) {
    const std::size_t n = C();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) B(l, f, i, j) = m(i, j);
  }
};

inline double cacg_log_pdf(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& B) {
  const std::size_t C = static_cast<std::size_t>(y.size());
  check(B.rows() == y.size() && B.cols() == y.size(), "cacg_log_pdf: shape mismatch");
  Eigen::LLT<Eigen::MatrixXcd> llt(B);
  check(llt.info() == Eigen::Success, "cacg_log_pdf: B numerically singular");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i).real());
  const Eigen::VectorXcd x = llt.matrixL().solve(y);
  const double quad = std::max(x.squaredNorm(), 1e-300);
  return cacg_log_normalizer(C) - logdet - static_cast<double>(C) * std::log(quad);
}

struct CacgLik {
  Tensor<double> logp;  // [L,T,F]
  Tensor<double> quad;  // [L,T,F], y^H B^-1 y (kept for the M-step)
};

// Batched log-density of every (t,f) vector under every component. Degenerate
// bins (all-zero raw slices) carry no spatial information; their log-density
// is set to 0 for all components so posteriors there reduce to the prior.
inline CacgLik cacg_log_pdf_field(const Tensor<cdouble>& y, const CacgParams& p,
                                  const Tensor<std::uint8_t>* degenerate = nullptr) {
  check(y.rank() == 3, "cacg_log_pdf_field: y must be [T,F,C]");
  const std::size_t T = y.dim(0), F = y.dim(1), C = y.dim(2);
  const std::size_t L = p.L();
  check(p.F() == F && p.C() == C, "cacg_log_pdf_field: parameter shape mismatch");
  const double logc = cacg_log_normalizer(C);

  CacgLik out{Tensor<double>({L, T, F}), Tensor<double>({L, T, F})};
  Eigen::MatrixXcd Yf(C, T);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        Yf(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = y(t, f, c);
    for (std::size_t l = 0; l < L; ++l) {
      Eigen::LLT<Eigen::MatrixXcd> llt(p.matrix(l, f));
      check(llt.info() == Eigen::Success, "cacg: B numerically singular after flooring");
      double logdet = 0.0;
      for (std::size_t i = 0; i < C; ++i)
        logdet += 2.0 * std::log(llt.matrixL()(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(i))
                                     .real());
      const Eigen::MatrixXcd X = llt.matrixL().solve(Yf);
      for (std::size_t t = 0; t < T; ++t) {
        const double q = std::max(X.col(static_cast<Eigen::Index>(t)).squaredNorm(), 1e-300);
        out.quad(l, t, f) = q;
        out.logp(l, t, f) = logc - logdet - static_cast<double>(C) * std::log(q);
      }
    }
  }
  if (degenerate != nullptr) {
    check(degenerate->rank() == 2 && degenerate->dim(0) == T && degenerate->dim(1) == F,
          "cacg_log_pdf_field: degeneracy mask shape mismatch");
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f)
        if ((*degenerate)(t, f))
          for (std::size_t l = 0; l < L; ++l) out.logp(l, t, f) = 0.0;
  }
  return out;
}

// One fixed-point sweep: B <- C * sum_t w_t y y^H / (y^H B_prev^-1 y) / sum_t w_t,
// followed by Hermitian symmetrization, eigenvalue flooring, and trace
// renormalization to C. Components with total weight below 1e-8*T*F are frozen
// at their previous value.
inline CacgParams cacg_m_step(const Tensor<cdouble>& y, const Tensor<double>& eta,
                              const CacgParams& prev,
                              const Tensor<double>* quad_cache = nullptr) {
  check(y.rank() == 3 && eta.rank() == 3, "cacg_m_step: bad ranks");
  const std::size_t T = y.dim(0), F = y.dim(1), C = y.dim(2);
  const std::size_t L = eta.dim(2);
  check(eta.dim(0) == T && eta.dim(1) == F, "cacg_m_step: weight shape mismatch");
  check(prev.L() == L && prev.F() == F && prev.C() == C, "cacg_m_step: prev shape mismatch");
  for (std::size_t i = 0; i < eta.size(); ++i)
    check(eta[i] >= -1e-12, "cacg_m_step: negative weight");

  Tensor<double> quad_local;
  const Tensor<double>* quad = quad_cache;
  if (quad == nullptr) {
    quad_local = cacg_log_pdf_field(y, prev).quad;
    quad = &quad_local;
  }
  check(quad->rank() == 3 && quad->dim(0) == L && quad->dim(1) == T && quad->dim(2) == F,
        "cacg_m_step: quad cache shape mismatch");

  const double w_floor = 1e-8 * static_cast<double>(T) * static_cast<double>(F);
  const double Cd = static_cast<double>(C);
  CacgParams out{Tensor<cdouble>({L, F, C, C}), Tensor<std::uint8_t>({L, F})};
  out.dormant.fill(0);

  Eigen::MatrixXcd Yf(C, T), Z(C, T);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        Yf(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = y(t, f, c);
    for (std::size_t l = 0; l < L; ++l) {
      double wsum = 0.0;
      for (std::size_t t = 0; t < T; ++t) wsum += eta(t, f, l);
      if (wsum < w_floor) {
        out.dormant(l, f) = 1;
        for (std::size_t i = 0; i < C; ++i)
          for (std::size_t j = 0; j < C; ++j) out.B(l, f, i, j) = prev.B(l, f, i, j);
        continue;
      }
      for (std::size_t t = 0; t < T; ++t) {
        const double s = eta(t, f, l) / (*quad)(l, t, f);
        Z.col(static_cast<Eigen::Index>(t)) = Yf.col(static_cast<Eigen::Index>(t)) * s;
      }
      Eigen::MatrixXcd A = (Cd / wsum) * (Z * Yf.adjoint());
      A = 0.5 * (A + A.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
      check(es.info() == Eigen::Success, "cacg_m_step: eigendecomposition failed");
      Eigen::VectorXd ev = es.eigenvalues();
      const double tr = ev.sum();
      check(std::isfinite(tr) && tr > 0.0, "cacg_m_step: non-finite or zero accumulation");
      const double floor_val = kEigFloor * tr / Cd;
      for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor_val);
      Eigen::MatrixXcd Bn =
          es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
      Bn *= Cd / ev.sum();
      out.set_matrix(l, f, Bn);
    }
  }
  return out;
}

}  // namespace diasep
