// Speaker mask extraction from the joint posterior: drop the location with
// the highest overall activity (taken to be noise), estimate the reverse
// coupling beta_klf = p(speaker k | location l, f), threshold it, and
// marginalize the remaining posterior mass per speaker.
#pragma once

#include <cstdint>
#include <vector>

#include "diasep/tensor.hpp"

namespace diasep {

constexpr double kTauThDefault = 0.55;

// argmax_l of total posterior mass; ties go to the lowest index.
inline std::size_t identify_noise_location(const Tensor<double>& delta) {
  check(delta.rank() == 4, "identify_noise_location: delta must be [K,L,T,F]");
  const std::size_t K = delta.dim(0), L = delta.dim(1), T = delta.dim(2), F = delta.dim(3);
  check(L >= 2, "identify_noise_location: need at least two locations");
  std::size_t best = 0;
  double best_mass = -1.0;
  for (std::size_t l = 0; l < L; ++l) {
    double mass = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f) mass += delta(k, l, t, f);
    if (mass > best_mass) {
      best_mass = mass;
      best = l;
    }
  }
  return best;
}

struct BetaEstimate {
  Tensor<double> beta;  // [K,L',F]
  Tensor<std::uint8_t> uniform_column;  // [L',F], 1 where the denominator was zero
};

// beta_klf = sum_t delta~ / sum_t sum_k delta~ on the noise-removed posterior.
inline BetaEstimate estimate_beta(const Tensor<double>& delta_reduced) {
  check(delta_reduced.rank() == 4, "estimate_beta: input must be [K,L',T,F]");
  const std::size_t K = delta_reduced.dim(0), L = delta_reduced.dim(1);
  const std::size_t T = delta_reduced.dim(2), F = delta_reduced.dim(3);
  BetaEstimate out{Tensor<double>({K, L, F}), Tensor<std::uint8_t>({L, F})};
  out.uniform_column.fill(0);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t f = 0; f < F; ++f) {
      double denom = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t < T; ++t) num += delta_reduced(k, l, t, f);
        out.beta(k, l, f) = num;
        denom += num;
      }
      if (denom < 1e-300) {
        for (std::size_t k = 0; k < K; ++k) out.beta(k, l, f) = 1.0 / static_cast<double>(K);
        out.uniform_column(l, f) = 1;
      } else {
        for (std::size_t k = 0; k < K; ++k) out.beta(k, l, f) /= denom;
      }
    }
  }
  return out;
}

// Entries below tau_th are zeroed; the rule at the boundary is >= (kept).
inline Tensor<double> threshold_beta(const Tensor<double>& beta, double tau_th = kTauThDefault) {
  check(tau_th > 0.0 && tau_th <= 1.0, "threshold_beta: tau_th must be in (0,1]");
  Tensor<double> out = beta;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] < tau_th) out[i] = 0.0;
  return out;
}

struct MaskWeights {
  Tensor<double> beta;              // [K,L-1,F]
  Tensor<double> beta_thresholded;  // [K,L-1,F]
  double tau_th = kTauThDefault;
  std::size_t noise_location = 0;
};

struct MaskResult {
  MaskWeights weights;
  Tensor<double> m;  // [K,T,F]
  std::vector<std::uint8_t> speaker_lost;  // per k: nonzero mass but all-zero mask
};

// m_ktf = sum_l beta~_klf * delta~_kltf over the noise-removed (NOT
// renormalized) posterior.
inline MaskResult extract_masks(const Tensor<double>& delta, double tau_th = kTauThDefault) {
  check(delta.rank() == 4, "extract_masks: delta must be [K,L,T,F]");
  const std::size_t K = delta.dim(0), L = delta.dim(1), T = delta.dim(2), F = delta.dim(3);
  const std::size_t noise = identify_noise_location(delta);

  Tensor<double> reduced({K, L - 1, T, F});
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t lr = 0;
    for (std::size_t l = 0; l < L; ++l) {
      if (l == noise) continue;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f) reduced(k, lr, t, f) = delta(k, l, t, f);
      ++lr;
    }
  }

  BetaEstimate be = estimate_beta(reduced);
  MaskResult out;
  out.weights.beta = be.beta;
  out.weights.beta_thresholded = threshold_beta(be.beta, tau_th);
  out.weights.tau_th = tau_th;
  out.weights.noise_location = noise;
  out.m = Tensor<double>({K, T, F});
  out.speaker_lost.assign(K, 0);

  for (std::size_t k = 0; k < K; ++k) {
    double mask_mass = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) {
        double m = 0.0;
        for (std::size_t l = 0; l + 1 < L; ++l)
          m += out.weights.beta_thresholded(k, l, f) * reduced(k, l, t, f);
        out.m(k, t, f) = m;
        mask_mass += m;
      }
    }
    if (mask_mass <= 0.0) {
      double total = 0.0;
      for (std::size_t l = 0; l + 1 < L; ++l)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t f = 0; f < F; ++f) total += reduced(k, l, t, f);
      if (total > 1e-12) out.speaker_lost[k] = 1;
    }
  }
  return out;
}

}  // namespace diasep
