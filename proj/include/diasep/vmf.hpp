// von-Mises-Fisher density on the real unit sphere: log-density with a
// log-domain Bessel normalizer, moment-based M-step, and a rejection sampler.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "diasep/rng.hpp"
#include "diasep/tensor.hpp"

namespace diasep {

constexpr double kKappaMax = 5e3;

namespace detail {

inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// log I_nu(x) for nu >= 0, x >= 0. Power series in log domain below nu = 50
// (stable for any x in our kappa range); Olver's uniform asymptotic expansion
// above, where the series would need too many terms and lgamma cancellation
// starts to bite.
inline double log_bessel_i(double nu, double x) {
  check(nu >= 0.0 && x >= 0.0, "log_bessel_i: domain error");
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (nu < 50.0) {
    const double lh = std::log(0.5 * x);
    double term = nu * lh - std::lgamma(nu + 1.0);
    double acc = term;
    for (std::size_t m = 1; m < 200000; ++m) {
      term += 2.0 * lh - std::log(static_cast<double>(m)) - std::log(nu + static_cast<double>(m));
      acc = logaddexp(acc, term);
      if (term < acc - 40.0 && static_cast<double>(m) > 0.5 * x) break;
    }
    return acc;
  }
  const double z = x / nu;
  const double s = std::sqrt(1.0 + z * z);
  const double t = 1.0 / s;
  const double eta = s + std::log(z / (1.0 + s));
  const double t2 = t * t;
  const double u1 = (3.0 * t - 5.0 * t * t2) / 24.0;
  const double u2 = (81.0 * t2 - 462.0 * t2 * t2 + 385.0 * t2 * t2 * t2) / 1152.0;
  const double u3 = (30375.0 * t * t2 - 369603.0 * t * t2 * t2 +
                     765765.0 * t * t2 * t2 * t2 - 425425.0 * t * t2 * t2 * t2 * t2) /
                    414720.0;
  const double corr = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu);
  return nu * eta - 0.5 * std::log(2.0 * M_PI * nu) - 0.25 * std::log1p(z * z) +
         std::log(corr);
}

}  // namespace detail

// log of the vMF normalizer C_D(kappa) = kappa^{D/2-1} / ((2pi)^{D/2} I_{D/2-1}(kappa)).
inline double vmf_log_normalizer(std::size_t D, double kappa) {
  check(D >= 2, "vmf: dimension must be >= 2");
  check(kappa >= 0.0, "vmf: kappa must be nonnegative");
  check(kappa <= kKappaMax * (1.0 + 1e-12), "vmf: kappa exceeds kappa_max");
  const double hd = 0.5 * static_cast<double>(D);
  if (kappa == 0.0) return std::lgamma(hd) - std::log(2.0) - hd * std::log(M_PI);
  return (hd - 1.0) * std::log(kappa) - hd * std::log(2.0 * M_PI) -
         detail::log_bessel_i(hd - 1.0, kappa);
}

struct VmfParams {
  Tensor<double> mu;                  // [K,D], unit rows
  Tensor<double> kappa;               // [K]
  std::vector<std::uint8_t> dormant;  // per component: weight fell below floor

  static VmfParams defaults(std::size_t K, std::size_t D) {
    VmfParams p{Tensor<double>({K, D}), Tensor<double>({K}),
                std::vector<std::uint8_t>(K, 0)};
    p.mu.fill(0.0);
    for (std::size_t k = 0; k < K; ++k) p.mu(k, 0) = 1.0;
    p.kappa.fill(0.0);
    return p;
  }

  std::size_t K() const { return mu.dim(0); }
  std::size_t D() const { return mu.dim(1); }

  void validate() const {
    check(mu.rank() == 2 && kappa.rank() == 1 && kappa.dim(0) == mu.dim(0),
          "VmfParams: inconsistent shapes");
    for (std::size_t k = 0; k < K(); ++k) {
      double n2 = 0.0;
      for (std::size_t d = 0; d < D(); ++d) n2 += mu(k, d) * mu(k, d);
      check(std::abs(std::sqrt(n2) - 1.0) <= 1e-9, "VmfParams: mu row not unit norm");
      check(kappa(k) >= 0.0 && kappa(k) <= kKappaMax * (1.0 + 1e-12),
            "VmfParams: kappa out of range");
    }
  }
};

inline double vmf_log_pdf(const double* e, const double* mu, std::size_t D, double kappa) {
  double dot = 0.0;
  for (std::size_t d = 0; d < D; ++d) dot += mu[d] * e[d];
  return vmf_log_normalizer(D, kappa) + kappa * dot;
}

// [K,T] matrix of log-densities for all components against all frames.
inline Tensor<double> vmf_log_pdf_all(const Tensor<double>& e, const VmfParams& p) {
  check(e.rank() == 2 && e.dim(1) == p.D(), "vmf_log_pdf_all: embedding shape mismatch");
  const std::size_t T = e.dim(0), D = e.dim(1), K = p.K();
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> E(e.data(), static_cast<Eigen::Index>(T),
                             static_cast<Eigen::Index>(D));
  Eigen::Map<const RowMat> M(p.mu.data(), static_cast<Eigen::Index>(K),
                             static_cast<Eigen::Index>(D));
  RowMat dots = M * E.transpose();  // [K,T]
  Tensor<double> out({K, T});
  for (std::size_t k = 0; k < K; ++k) {
    const double logc = vmf_log_normalizer(D, p.kappa(k));
    const double kap = p.kappa(k);
    for (std::size_t t = 0; t < T; ++t)
      out(k, t) = logc + kap * dots(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
  }
  return out;
}

// Weighted moment estimator (Banerjee closed form for kappa). Components whose
// total weight drops below 1e-8*T keep their previous parameters and are
// marked dormant.
inline VmfParams vmf_m_step(const Tensor<double>& e, const Tensor<double>& gamma,
                            const VmfParams& prev) {
  check(e.rank() == 2 && gamma.rank() == 2, "vmf_m_step: bad ranks");
  const std::size_t T = e.dim(0), D = e.dim(1), K = gamma.dim(1);
  check(gamma.dim(0) == T, "vmf_m_step: weight rows must match frames");
  check(prev.K() == K && prev.D() == D, "vmf_m_step: prev shape mismatch");
  for (std::size_t t = 0; t < T; ++t) {
    double row = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      check(gamma(t, k) >= -1e-12, "vmf_m_step: negative weight");
      row += gamma(t, k);
    }
    check(row <= 1.0 + 1e-9, "vmf_m_step: weight row exceeds 1");
  }

  const double w_floor = 1e-8 * static_cast<double>(T);
  VmfParams out = prev;
  out.dormant.assign(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    double w = 0.0;
    std::vector<double> r(D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double g = gamma(t, k);
      w += g;
      for (std::size_t d = 0; d < D; ++d) r[d] += g * e(t, d);
    }
    if (w < w_floor) {
      out.dormant[k] = 1;
      continue;
    }
    double rn = 0.0;
    for (std::size_t d = 0; d < D; ++d) rn += r[d] * r[d];
    rn = std::sqrt(rn);
    if (rn < 1e-300) {
      out.kappa(k) = 0.0;
      continue;
    }
    for (std::size_t d = 0; d < D; ++d) out.mu(k, d) = r[d] / rn;
    const double rbar = rn / w;
    double kap;
    if (rbar >= 1.0 - 1e-12) {
      kap = kKappaMax;
    } else {
      kap = rbar * (static_cast<double>(D) - rbar * rbar) / (1.0 - rbar * rbar);
    }
    out.kappa(k) = std::clamp(kap, 0.0, kKappaMax);
  }
  return out;
}

// Wood's rejection sampler; kappa = 0 falls back to the uniform sphere.
inline Tensor<double> sample_vmf(const std::vector<double>& mu, double kappa, std::size_t n,
                                 Rng& rng) {
  const std::size_t D = mu.size();
  check(D >= 2, "sample_vmf: dimension must be >= 2");
  check(kappa >= 0.0, "sample_vmf: kappa must be nonnegative");
  Tensor<double> out({n, D});
  if (n == 0) return out;

  if (kappa == 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double n2 = 0.0;
      std::vector<double> g(D);
      do {
        n2 = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          g[d] = rng.normal();
          n2 += g[d] * g[d];
        }
      } while (n2 <= 0.0);
      const double inv = 1.0 / std::sqrt(n2);
      for (std::size_t d = 0; d < D; ++d) out(i, d) = g[d] * inv;
    }
    return out;
  }

  const double p = static_cast<double>(D - 1);
  const double b = p / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + p * p));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + p * std::log(1.0 - x0 * x0);

  // Householder direction mapping the first basis vector onto mu.
  std::vector<double> u(D);
  u[0] = 1.0 - mu[0];
  for (std::size_t d = 1; d < D; ++d) u[d] = -mu[d];
  double un2 = 0.0;
  for (double v : u) un2 += v * v;

  std::vector<double> v(D - 1), s(D);
  for (std::size_t i = 0; i < n; ++i) {
    double w;
    for (;;) {
      const double z = rng.beta(0.5 * p, 0.5 * p);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double uu = std::max(rng.uniform(), 1e-300);
      if (kappa * w + p * std::log(1.0 - x0 * w) - c >= std::log(uu)) break;
    }
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (std::size_t d = 0; d + 1 < D; ++d) {
        v[d] = rng.normal();
        n2 += v[d] * v[d];
      }
    } while (n2 <= 0.0);
    const double scale = std::sqrt(std::max(0.0, 1.0 - w * w) / n2);
    s[0] = w;
    for (std::size_t d = 1; d < D; ++d) s[d] = v[d - 1] * scale;
    if (un2 < 1e-24) {
      for (std::size_t d = 0; d < D; ++d) out(i, d) = s[d];
    } else {
      double us = 0.0;
      for (std::size_t d = 0; d < D; ++d) us += u[d] * s[d];
      const double f = 2.0 * us / un2;
      for (std::size_t d = 0; d < D; ++d) out(i, d) = s[d] - f * u[d];
    }
  }
  return out;
}

}  // namespace diasep
