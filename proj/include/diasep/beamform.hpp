// Mask-driven MVDR extraction: masked covariance estimates per frequency and
// the Souden-style weight rule w = (Phi_n^-1 Phi_s / tr(Phi_n^-1 Phi_s)) u_ref.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "diasep/tensor.hpp"

namespace diasep {

struct CovPair {
  Tensor<cdouble> phi_s;              // [F,C,C]
  Tensor<cdouble> phi_n;              // [F,C,C], diagonally loaded
  Tensor<std::uint8_t> s_fallback;    // [F], speech side had no mass
  Tensor<std::uint8_t> n_fallback;    // [F], noise side had no mass
};

inline CovPair estimate_covariances(const Tensor<cdouble>& y, const Tensor<double>& mask) {
  check(y.rank() == 3, "estimate_covariances: y must be [T,F,C]");
  check(mask.rank() == 2 && mask.dim(0) == y.dim(0) && mask.dim(1) == y.dim(1),
        "estimate_covariances: mask must be [T,F]");
  const std::size_t T = y.dim(0), F = y.dim(1), C = y.dim(2);
  for (std::size_t i = 0; i < mask.size(); ++i)
    check(mask[i] >= -1e-12 && mask[i] <= 1.0 + 1e-12,
          "estimate_covariances: mask entries must lie in [0,1]");

  CovPair out{Tensor<cdouble>({F, C, C}), Tensor<cdouble>({F, C, C}),
              Tensor<std::uint8_t>({F}), Tensor<std::uint8_t>({F})};
  out.s_fallback.fill(0);
  out.n_fallback.fill(0);

  Eigen::MatrixXcd Yf(C, T);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        Yf(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = y(t, f, c);

    for (int side = 0; side < 2; ++side) {
      double wsum = 0.0;
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(C),
                                                    static_cast<Eigen::Index>(C));
      for (std::size_t t = 0; t < T; ++t) {
        const double m = side == 0 ? mask(t, f) : 1.0 - mask(t, f);
        if (m <= 0.0) continue;
        acc.noalias() += m * (Yf.col(static_cast<Eigen::Index>(t)) *
                              Yf.col(static_cast<Eigen::Index>(t)).adjoint());
        wsum += m;
      }
      Eigen::MatrixXcd phi;
      if (wsum <= 1e-12) {
        // empty side: fall back to the uniform time average
        phi = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(C),
                                     static_cast<Eigen::Index>(C));
        for (std::size_t t = 0; t < T; ++t)
          phi.noalias() += Yf.col(static_cast<Eigen::Index>(t)) *
                           Yf.col(static_cast<Eigen::Index>(t)).adjoint();
        phi /= static_cast<double>(T);
        if (side == 0)
          out.s_fallback(f) = 1;
        else
          out.n_fallback(f) = 1;
      } else {
        phi = acc / wsum;
      }
      phi = 0.5 * (phi + phi.adjoint()).eval();
      if (side == 1) {
        const double load = 1e-6 * phi.real().trace() / static_cast<double>(C);
        phi += load * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(C),
                                                 static_cast<Eigen::Index>(C));
      }
      for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < C; ++j)
          (side == 0 ? out.phi_s : out.phi_n)(f, i, j) =
              phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

struct MvdrWeights {
  Eigen::VectorXcd w;
  bool zeroed = false;  // tr(Phi_n^-1 Phi_s) vanished
};

inline MvdrWeights mvdr_weights(const Eigen::MatrixXcd& phi_s, const Eigen::MatrixXcd& phi_n,
                                std::size_t ref_channel) {
  const Eigen::Index C = phi_s.rows();
  check(phi_n.rows() == C && static_cast<Eigen::Index>(ref_channel) < C,
        "mvdr_weights: shape or reference channel out of range");
  MvdrWeights out;
  Eigen::LDLT<Eigen::MatrixXcd> dec(phi_n);
  if (dec.info() != Eigen::Success) {
    out.w = Eigen::VectorXcd::Zero(C);
    out.zeroed = true;
    return out;
  }
  const Eigen::MatrixXcd M = dec.solve(phi_s);
  const cdouble tr = M.trace();
  if (std::abs(tr) <= 1e-12) {
    out.w = Eigen::VectorXcd::Zero(C);
    out.zeroed = true;
    return out;
  }
  out.w = M.col(static_cast<Eigen::Index>(ref_channel)) / tr;
  return out;
}

struct BeamformOutput {
  Tensor<cdouble> stft;  // [T,F]
  bool zero_mask = false;
  std::size_t zeroed_bins = 0;  // frequencies where weights were zeroed
};

// Applies w_f^H y_tf per bin using covariances from this speaker's mask.
inline BeamformOutput extract_speaker(const Tensor<cdouble>& y, const Tensor<double>& masks,
                                      std::size_t k, std::size_t ref_channel) {
  check(y.rank() == 3 && masks.rank() == 3, "extract_speaker: bad ranks");
  const std::size_t T = y.dim(0), F = y.dim(1), C = y.dim(2);
  check(masks.dim(1) == T && masks.dim(2) == F, "extract_speaker: mask shape mismatch");
  check(k < masks.dim(0), "extract_speaker: speaker index out of range");
  check(ref_channel < C, "extract_speaker: reference channel out of range");

  BeamformOutput out;
  out.stft = Tensor<cdouble>({T, F});
  Tensor<double> mask_k({T, F});
  double mass = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      mask_k(t, f) = masks(k, t, f);
      mass += mask_k(t, f);
    }
  if (mass <= 0.0) {
    out.stft.fill(cdouble(0.0, 0.0));
    out.zero_mask = true;
    return out;
  }

  const CovPair cov = estimate_covariances(y, mask_k);
  Eigen::MatrixXcd ps(C, C), pn(C, C);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t j = 0; j < C; ++j) {
        ps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov.phi_s(f, i, j);
        pn(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov.phi_n(f, i, j);
      }
    const MvdrWeights mw = mvdr_weights(ps, pn, ref_channel);
    if (mw.zeroed) ++out.zeroed_bins;
    for (std::size_t t = 0; t < T; ++t) {
      cdouble s(0.0, 0.0);
      for (std::size_t c = 0; c < C; ++c)
        s += std::conj(mw.w(static_cast<Eigen::Index>(c))) * y(t, f, c);
      out.stft(t, f) = s;
    }
  }
  return out;
}

}  // namespace diasep
