// Observation container shared by the models: length-normalized multichannel
// STFT vectors plus per-frame embedding directions. The per-bin norms are kept
// so the beamformer can reconstruct unnormalized spectra.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "diasep/archive.hpp"
#include "diasep/stft.hpp"
#include "diasep/tensor.hpp"

namespace diasep {

struct NormalizedObs {
  Tensor<cdouble> y;                // [T,F,C], unit norm per (t,f)
  Tensor<double> norm;              // [T,F], Euclidean norm of the raw slice
  Tensor<std::uint8_t> degenerate;  // [T,F], 1 where the raw slice was all-zero
};

// Scales every (t,f) channel vector to unit Euclidean norm. The cACG density
// is undefined at the origin, so all-zero slices become the first basis
// vector and are flagged for downstream down-weighting.
inline NormalizedObs normalize_observations(const Tensor<cdouble>& raw_y) {
  check(raw_y.rank() == 3, "normalize_observations: y must be [T,F,C]");
  const std::size_t T = raw_y.dim(0), F = raw_y.dim(1), C = raw_y.dim(2);
  NormalizedObs out{Tensor<cdouble>({T, F, C}), Tensor<double>({T, F}),
                    Tensor<std::uint8_t>({T, F})};
  out.degenerate.fill(0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      double n2 = 0.0;
      for (std::size_t c = 0; c < C; ++c) n2 += std::norm(raw_y(t, f, c));
      if (n2 > 0.0) {
        const double n = std::sqrt(n2);
        out.norm(t, f) = n;
        for (std::size_t c = 0; c < C; ++c) out.y(t, f, c) = raw_y(t, f, c) / n;
      } else {
        out.norm(t, f) = 0.0;
        for (std::size_t c = 0; c < C; ++c) out.y(t, f, c) = cdouble(c == 0 ? 1.0 : 0.0, 0.0);
        out.degenerate(t, f) = 1;
      }
    }
  }
  return out;
}

inline Tensor<double> normalize_rows(const Tensor<double>& m) {
  check(m.rank() == 2, "normalize_rows: expected a matrix");
  const std::size_t R = m.dim(0), D = m.dim(1);
  Tensor<double> out({R, D});
  for (std::size_t r = 0; r < R; ++r) {
    double n2 = 0.0;
    for (std::size_t d = 0; d < D; ++d) n2 += m(r, d) * m(r, d);
    if (n2 > 0.0) {
      const double inv = 1.0 / std::sqrt(n2);
      for (std::size_t d = 0; d < D; ++d) out(r, d) = m(r, d) * inv;
    } else {
      for (std::size_t d = 0; d < D; ++d) out(r, d) = d == 0 ? 1.0 : 0.0;
    }
  }
  return out;
}

struct ObservationSet {
  Tensor<cdouble> y;                // [T,F,C], unit norm per (t,f)
  Tensor<double> e;                 // [T,D], unit norm per row
  Tensor<double> norm;              // [T,F]
  Tensor<std::uint8_t> degenerate;  // [T,F]
  Tensor<double> log_energy;        // [T], optional (empty when unknown)
  StftConfig stft_config;

  std::size_t T() const { return y.dim(0); }
  std::size_t F() const { return y.dim(1); }
  std::size_t C() const { return y.dim(2); }
  std::size_t D() const { return e.dim(1); }

  void validate() const {
    check(y.rank() == 3, "ObservationSet: y must be [T,F,C]");
    check(e.rank() == 2, "ObservationSet: e must be [T,D]");
    check(e.dim(0) == y.dim(0), "ObservationSet: y and e frame counts differ");
    check(norm.rank() == 2 && norm.dim(0) == y.dim(0) && norm.dim(1) == y.dim(1),
          "ObservationSet: norm must be [T,F]");
    check(degenerate.rank() == 2 && degenerate.dim(0) == y.dim(0) &&
              degenerate.dim(1) == y.dim(1),
          "ObservationSet: degeneracy mask must be [T,F]");
    if (!log_energy.empty())
      check(log_energy.rank() == 1 && log_energy.dim(0) == y.dim(0),
            "ObservationSet: log_energy must be [T]");
  }
};

// Spectral-domain stand-in for the waveform frame energy, used when an
// archive predates the wave or never had one. Same -30 flooring convention.
inline Tensor<double> spectral_log_energy(const ObservationSet& obs) {
  const std::size_t T = obs.T(), F = obs.F();
  std::vector<double> energy(T, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) energy[t] += obs.norm(t, f) * obs.norm(t, f);
  const double emax = *std::max_element(energy.begin(), energy.end());
  Tensor<double> out({T});
  if (emax <= 0.0) {
    out.fill(-30.0);
    return out;
  }
  const double floor_val = std::log(emax) - 30.0;
  for (std::size_t t = 0; t < T; ++t)
    out(t) = energy[t] > 0.0 ? std::max(std::log(energy[t]), floor_val) : floor_val;
  return out;
}

inline ObservationSet make_observation_set(const Tensor<cdouble>& raw_y,
                                           const Tensor<double>& raw_e,
                                           const StftConfig& cfg) {
  NormalizedObs ny = normalize_observations(raw_y);
  ObservationSet obs;
  obs.y = std::move(ny.y);
  obs.e = normalize_rows(raw_e);
  obs.norm = std::move(ny.norm);
  obs.degenerate = std::move(ny.degenerate);
  obs.stft_config = cfg;
  obs.validate();
  return obs;
}

inline Tensor<double> stft_config_tensor(const StftConfig& cfg) {
  Tensor<double> t({4});
  t(0) = static_cast<double>(cfg.frame_length);
  t(1) = static_cast<double>(cfg.frame_shift);
  t(2) = static_cast<double>(cfg.fft_length);
  t(3) = cfg.sample_rate;
  return t;
}

inline StftConfig stft_config_from_tensor(const Tensor<double>& t) {
  check(t.size() == 4, "stft_config entry must hold [frame, shift, fft, sample_rate]");
  StftConfig cfg;
  cfg.frame_length = static_cast<std::size_t>(t[0]);
  cfg.frame_shift = static_cast<std::size_t>(t[1]);
  cfg.fft_length = static_cast<std::size_t>(t[2]);
  cfg.sample_rate = t[3];
  cfg.validate();
  return cfg;
}

inline void save_observations(const std::string& path, const ObservationSet& obs) {
  obs.validate();
  std::vector<ArchiveEntry> entries;
  entries.push_back({"y", obs.y});
  entries.push_back({"e", obs.e});
  entries.push_back({"norm", obs.norm});
  entries.push_back({"degenerate", obs.degenerate});
  if (!obs.log_energy.empty()) entries.push_back({"log_energy", obs.log_energy});
  entries.push_back({"stft_config", stft_config_tensor(obs.stft_config)});
  write_archive(path, entries);
}

inline ObservationSet load_observations(const std::string& path) {
  const auto entries = read_archive(path);
  ObservationSet obs;
  obs.y = require_entry<cdouble>(entries, "y");
  obs.e = require_entry<double>(entries, "e");
  obs.norm = require_entry<double>(entries, "norm");
  obs.degenerate = require_entry<std::uint8_t>(entries, "degenerate");
  if (find_entry(entries, "log_energy") != nullptr)
    obs.log_energy = require_entry<double>(entries, "log_energy");
  obs.stft_config = stft_config_from_tensor(require_entry<double>(entries, "stft_config"));
  obs.validate();
  return obs;
}

}  // namespace diasep
