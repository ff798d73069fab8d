// Short-time Fourier analysis/synthesis with a fixed framing definition,
// plus the frame-energy feature used by the VAD.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "diasep/tensor.hpp"

namespace diasep {

struct StftConfig {
  std::size_t frame_length = 1024;
  std::size_t frame_shift = 256;
  std::size_t fft_length = 1024;
  std::string window = "hann";  // "hann" (periodic) or "rect" (tests only)
  double sample_rate = 16000.0;

  void validate() const {
    check(frame_length > 0 && frame_shift > 0, "StftConfig: lengths must be positive");
    check(frame_shift <= frame_length, "StftConfig: frame_shift must be <= frame_length");
    check(fft_length >= frame_length, "StftConfig: fft_length must be >= frame_length");
    check((fft_length & (fft_length - 1)) == 0, "StftConfig: fft_length must be a power of two");
    check(window == "hann" || window == "rect", "StftConfig: unknown window '" + window + "'");
    check(sample_rate > 0.0, "StftConfig: sample_rate must be positive");
  }

  std::size_t bins() const { return fft_length / 2 + 1; }
  std::size_t num_frames(std::size_t samples) const {
    check(samples >= frame_length, "stft: signal shorter than one frame");
    return 1 + (samples - frame_length) / frame_shift;
  }
  std::size_t num_samples(std::size_t frames) const {
    check(frames > 0, "istft: need at least one frame");
    return frame_length + (frames - 1) * frame_shift;
  }

  std::vector<double> make_window() const {
    std::vector<double> w(frame_length, 1.0);
    if (window == "hann")
      for (std::size_t n = 0; n < frame_length; ++n)
        w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                    static_cast<double>(frame_length));
    return w;
  }

  // Overlap-add constant. The synthesis path divides by this value, so the
  // shifted window copies must sum to the same constant at every offset.
  double cola_constant() const {
    const std::vector<double> w = make_window();
    std::vector<double> sums(frame_shift, 0.0);
    for (std::size_t n = 0; n < frame_length; ++n) sums[n % frame_shift] += w[n];
    const double c0 = sums[0];
    for (double s : sums)
      check(std::abs(s - c0) <= 1e-8 * std::max(1.0, std::abs(c0)),
            "istft: window/shift pair violates the constant-overlap-add condition");
    check(c0 > 0.0, "istft: degenerate window");
    return c0;
  }
};

// wave [S,C] -> one-sided spectrum [T,F,C].
inline Tensor<cdouble> stft(const Tensor<double>& wave, const StftConfig& cfg) {
  cfg.validate();
  check(wave.rank() == 2, "stft: wave must be [S,C]");
  const std::size_t S = wave.dim(0), C = wave.dim(1);
  const std::size_t T = cfg.num_frames(S);
  const std::size_t F = cfg.bins();
  const std::vector<double> w = cfg.make_window();

  Tensor<cdouble> spec({T, F, C});
  Eigen::FFT<double> fft;
  std::vector<cdouble> buf(cfg.fft_length), out(cfg.fft_length);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t off = t * cfg.frame_shift;
      for (std::size_t n = 0; n < cfg.frame_length; ++n)
        buf[n] = cdouble(w[n] * wave(off + n, c), 0.0);
      std::fill(buf.begin() + static_cast<std::ptrdiff_t>(cfg.frame_length), buf.end(),
                cdouble(0.0, 0.0));
      fft.fwd(out, buf);
      for (std::size_t f = 0; f < F; ++f) spec(t, f, c) = out[f];
    }
  }
  return spec;
}

// One-sided spectrum [T,F,C] -> wave [S,C] by plain overlap-add divided by the
// overlap constant; exact on the fully overlapped interior, tapered at edges.
inline Tensor<double> istft(const Tensor<cdouble>& spec, const StftConfig& cfg) {
  cfg.validate();
  check(spec.rank() == 3, "istft: spec must be [T,F,C]");
  const std::size_t T = spec.dim(0), F = spec.dim(1), C = spec.dim(2);
  check(F == cfg.bins(), "istft: bin count does not match fft_length");
  const double c0 = cfg.cola_constant();
  const std::size_t S = cfg.num_samples(T);

  Tensor<double> wave({S, C});
  wave.fill(0.0);
  Eigen::FFT<double> fft;
  std::vector<cdouble> full(cfg.fft_length), frame(cfg.fft_length);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) full[f] = spec(t, f, c);
      for (std::size_t f = F; f < cfg.fft_length; ++f)
        full[f] = std::conj(full[cfg.fft_length - f]);
      fft.inv(frame, full);
      const std::size_t off = t * cfg.frame_shift;
      for (std::size_t n = 0; n < cfg.frame_length; ++n)
        wave(off + n, c) += frame[n].real() / c0;
    }
  }
  return wave;
}

// Log of the raw (unwindowed) per-frame energy summed over channels, floored
// at 30 nats below the loudest frame. All-silent input maps to a flat -30.
inline Tensor<double> frame_log_energy(const Tensor<double>& wave, const StftConfig& cfg) {
  cfg.validate();
  check(wave.rank() == 2, "frame_log_energy: wave must be [S,C]");
  const std::size_t S = wave.dim(0), C = wave.dim(1);
  const std::size_t T = cfg.num_frames(S);

  std::vector<double> energy(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t off = t * cfg.frame_shift;
    double e = 0.0;
    for (std::size_t n = 0; n < cfg.frame_length; ++n)
      for (std::size_t c = 0; c < C; ++c) e += wave(off + n, c) * wave(off + n, c);
    energy[t] = e;
  }
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

}  // namespace diasep
