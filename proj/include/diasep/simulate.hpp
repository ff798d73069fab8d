// Multichannel meeting-scene simulator: band-limited modulated-noise talkers
// placed on a circular microphone array by far-field steering vectors, with
// scheduled utterances, diffuse noise, per-frame speaker embeddings, and full
// ground truth (activity, dominance masks, clean images, location tracks).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "diasep/archive.hpp"
#include "diasep/observation.hpp"
#include "diasep/rng.hpp"
#include "diasep/stft.hpp"
#include "diasep/tensor.hpp"
#include "diasep/vmf.hpp"

namespace diasep {

struct ScenarioConfig {
  std::size_t speakers = 2;
  double duration = 30.0;        // seconds (per segment in rotate mode)
  double overlap = 0.2;          // target overlapped-to-speech ratio
  double noise = 0.1;            // diffuse noise power relative to mean speech bin power
  std::size_t embed_dim = 64;
  double embed_kappa = 100.0;
  double utterance = 2.0;        // mean utterance length, seconds
  std::uint64_t seed = 1;
  std::string relocation = "none";  // none | move | rotate
  std::size_t channels = 7;      // one center mic plus a uniform ring
  double radius = 0.0425;        // ring radius, meters
  double sound_speed = 343.0;
  std::vector<double> angles_deg;       // optional explicit source angles
  std::vector<double> move_angles_deg;  // optional second-half angle of the moved speaker
  StftConfig stft;

  void validate() const {
    check(speakers >= 1, "scenario: speakers must be >= 1");
    check(duration > 0.0, "scenario: duration must be positive");
    check(overlap >= 0.0 && overlap < 1.0, "scenario: overlap must lie in [0,1)");
    check(noise >= 0.0, "scenario: noise must be non-negative");
    check(embed_dim >= 2, "scenario: embed_dim must be >= 2");
    check(embed_kappa >= 0.0, "scenario: embed_kappa must be non-negative");
    check(utterance > 0.0, "scenario: utterance must be positive");
    check(relocation == "none" || relocation == "move" || relocation == "rotate",
          "scenario: relocation must be none, move, or rotate");
    check(channels >= 3, "scenario: channels must be >= 3");
    check(radius > 0.0 && sound_speed > 0.0, "scenario: bad array geometry");
    if (!angles_deg.empty())
      check(angles_deg.size() == speakers, "scenario: angles must list one value per speaker");
    stft.validate();
  }
};

namespace detail {

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      fail("scenario: bad numeric list for key '" + key + "'");
    }
  }
  return out;
}

}  // namespace detail

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
inline ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string v) {
      const std::size_t a = v.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = v.find_last_not_of(" \t\r");
      return v.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    check(eq != std::string::npos,
          "scenario: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    check(!key.empty() && !val.empty(),
          "scenario: empty key or value on line " + std::to_string(lineno));
    try {
      if (key == "speakers")
        cfg.speakers = static_cast<std::size_t>(std::stoul(val));
      else if (key == "duration")
        cfg.duration = std::stod(val);
      else if (key == "overlap")
        cfg.overlap = std::stod(val);
      else if (key == "noise")
        cfg.noise = std::stod(val);
      else if (key == "embed_dim")
        cfg.embed_dim = static_cast<std::size_t>(std::stoul(val));
      else if (key == "embed_kappa")
        cfg.embed_kappa = std::stod(val);
      else if (key == "utterance")
        cfg.utterance = std::stod(val);
      else if (key == "seed")
        cfg.seed = std::stoull(val);
      else if (key == "relocation")
        cfg.relocation = val;
      else if (key == "channels")
        cfg.channels = static_cast<std::size_t>(std::stoul(val));
      else if (key == "radius")
        cfg.radius = std::stod(val);
      else if (key == "sound_speed")
        cfg.sound_speed = std::stod(val);
      else if (key == "angles")
        cfg.angles_deg = detail::parse_double_list(val, key);
      else if (key == "move_angles")
        cfg.move_angles_deg = detail::parse_double_list(val, key);
      else if (key == "sample_rate")
        cfg.stft.sample_rate = static_cast<std::size_t>(std::stoul(val));
      else if (key == "frame")
        cfg.stft.frame_length = static_cast<std::size_t>(std::stoul(val));
      else if (key == "shift")
        cfg.stft.frame_shift = static_cast<std::size_t>(std::stoul(val));
      else if (key == "fft")
        cfg.stft.fft_length = static_cast<std::size_t>(std::stoul(val));
      else if (key == "window")
        cfg.stft.window = val;
      else
        fail("scenario: unknown key '" + key + "'");
    } catch (const std::runtime_error&) {
      throw;
    } catch (...) {
      fail("scenario: bad value for key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

struct GroundTruth {
  Tensor<std::uint8_t> activity;  // [K,T]
  Tensor<double> oracle_masks;    // [K,T,F]
  Tensor<cdouble> clean_stfts;    // [K,T,F], image at the center channel
  Tensor<double> location_track;  // [K,T], integer-valued location ids
  Tensor<double> mu_star;         // [K,D], true embedding directions
  double achieved_overlap = 0.0;
};

struct SimResult {
  ObservationSet obs;
  GroundTruth truth;
  Tensor<double> mix_wave;                  // [S,C]
  std::vector<Tensor<double>> clean_waves;  // K entries of [S]
};

namespace detail {

struct Utterance {
  std::size_t k;
  double a, b;  // seconds
};

// Round-robin utterance chain; consecutive utterances overlap by a fixed
// fraction of the incoming one so the overlapped-to-speech ratio approaches
// the target. With a zero target, gaps are inserted instead.
inline std::vector<Utterance> schedule_utterances(std::size_t K, double duration, double overlap,
                                                  double umean, Rng& rng) {
  std::vector<Utterance> out;
  const double c = std::min(overlap / (1.0 + overlap), 0.45);
  double prev_end = 0.15 * umean * (0.5 + rng.uniform());
  std::size_t i = 0;
  while (true) {
    const std::size_t k = i % K;
    const double u = umean * (0.6 + 0.8 * rng.uniform());
    double start;
    if (overlap > 0.0 && i > 0) {
      double o = c * u * (0.7 + 0.6 * rng.uniform());
      o = std::min(o, 0.9 * u);
      if (!out.empty()) o = std::min(o, 0.9 * (out.back().b - out.back().a));
      start = prev_end - o;
    } else {
      start = i == 0 ? prev_end : prev_end + umean * (0.1 + 0.3 * rng.uniform());
    }
    start = std::max(start, 0.0);
    const double end = std::min(start + u, duration);
    if (end - start < 0.05 || start >= duration - 0.05) break;
    out.push_back({k, start, end});
    prev_end = end;
    if (end >= duration - 0.05) break;
    ++i;
  }
  check(!out.empty(), "simulate: duration too short for any utterance");
  std::vector<char> seen(K, 0);
  for (const auto& u : out) seen[u.k] = 1;
  for (std::size_t k = 0; k < K; ++k)
    check(seen[k], "simulate: duration too short to place all speakers");
  return out;
}

// Windowed-sinc bandpass covering roughly the middle of the band; the top and
// bottom bins stay noise-dominated, which keeps the noise component visible.
inline std::vector<double> bandpass_taps(std::size_t ntaps) {
  const double f1 = 0.05, f2 = 0.425;  // cycles per sample
  const std::size_t M = (ntaps - 1) / 2;
  std::vector<double> h(ntaps);
  const double pi = 3.14159265358979323846;
  double sum_check = 0.0;
  for (std::size_t i = 0; i < ntaps; ++i) {
    const double n = static_cast<double>(i) - static_cast<double>(M);
    const auto sinc = [&](double f) {
      if (n == 0.0) return 2.0 * f;
      return std::sin(2.0 * pi * f * n) / (pi * n);
    };
    const double w = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(i) /
                                            static_cast<double>(ntaps - 1));
    h[i] = (sinc(f2) - sinc(f1)) * w;
    sum_check += std::abs(h[i]);
  }
  check(sum_check > 0.0, "simulate: degenerate bandpass");
  return h;
}

// One modulated-noise utterance written additively into dry[ia..ib).
inline void render_utterance(std::vector<double>& dry, std::size_t ia, std::size_t ib,
                             const std::vector<double>& taps, std::size_t sr, Rng& rng) {
  const std::size_t n = ib - ia;
  if (n == 0) return;
  std::vector<double> white(n + taps.size());
  for (double& v : white) v = rng.normal();
  const double fmod = 2.0 + 4.0 * rng.uniform();
  const double phase = 2.0 * 3.14159265358979323846 * rng.uniform();
  std::vector<double> seg(n, 0.0);
  double power = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t m = 0; m < taps.size(); ++m) acc += taps[m] * white[j + taps.size() - 1 - m];
    seg[j] = acc;
    power += acc * acc;
  }
  const double rms = std::sqrt(power / static_cast<double>(n));
  const double gain = rms > 0.0 ? 1.0 / rms : 0.0;
  const double pi = 3.14159265358979323846;
  const std::size_t taper = std::min<std::size_t>(n / 2, sr / 100);  // 10 ms edges
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(sr);
    double env = 1.0 + 0.8 * std::sin(2.0 * pi * fmod * t + phase);
    if (j < taper) env *= 0.5 * (1.0 - std::cos(pi * static_cast<double>(j) / taper));
    if (n - 1 - j < taper)
      env *= 0.5 * (1.0 - std::cos(pi * static_cast<double>(n - 1 - j) / taper));
    dry[ia + j] += gain * seg[j] * env;
  }
}

// Far-field steering vectors for a center mic plus uniform ring.
// d[f][c] = exp(-i 2 pi f_hz tau_c), tau scaled so the center mic has zero delay.
inline Tensor<cdouble> steering_for_angle(double theta_rad, const ScenarioConfig& cfg) {
  const std::size_t F = cfg.stft.bins(), C = cfg.channels;
  Tensor<cdouble> d({F, C});
  const double pi = 3.14159265358979323846;
  const double ux = std::cos(theta_rad), uy = std::sin(theta_rad);
  for (std::size_t c = 0; c < C; ++c) {
    double px = 0.0, py = 0.0;
    if (c > 0) {
      const double phi = 2.0 * pi * static_cast<double>(c - 1) / static_cast<double>(C - 1);
      px = cfg.radius * std::cos(phi);
      py = cfg.radius * std::sin(phi);
    }
    const double tau = -(px * ux + py * uy) / cfg.sound_speed;
    for (std::size_t f = 0; f < F; ++f) {
      const double f_hz = static_cast<double>(f) * static_cast<double>(cfg.stft.sample_rate) /
                          static_cast<double>(cfg.stft.fft_length);
      const double arg = -2.0 * pi * f_hz * tau;
      d(f, c) = cdouble(std::cos(arg), std::sin(arg));
    }
  }
  return d;
}

struct SceneCore {
  Tensor<cdouble> x;              // [T,F,C] raw mixture
  Tensor<cdouble> clean;          // [K,T,F] center-channel images
  Tensor<std::uint8_t> activity;  // [K,T]
  Tensor<double> masks;           // [K,T,F]
  Tensor<double> location;       // [K,T]
  std::vector<Tensor<double>> dry;  // K waves [S]
};

// Static or single-move scene over one contiguous duration.
inline SceneCore simulate_core(const ScenarioConfig& cfg, Rng& rng, bool move,
                               std::size_t location_offset) {
  const std::size_t K = cfg.speakers;
  const std::size_t sr = cfg.stft.sample_rate;
  std::size_t S = static_cast<std::size_t>(std::llround(cfg.duration * static_cast<double>(sr)));
  S = std::max(S, cfg.stft.frame_length);
  const std::size_t T = cfg.stft.num_frames(S);
  const std::size_t F = cfg.stft.bins();
  const std::size_t C = cfg.channels;

  Rng rng_sched = rng.split(1);
  Rng rng_speech = rng.split(2);
  Rng rng_noise = rng.split(3);
  Rng rng_geom = rng.split(4);

  const auto utts = schedule_utterances(K, cfg.duration, cfg.overlap, cfg.utterance, rng_sched);

  // dry waves
  const auto taps = bandpass_taps(101);
  std::vector<std::vector<double>> dry(K, std::vector<double>(S, 0.0));
  for (const auto& u : utts) {
    const std::size_t ia = static_cast<std::size_t>(std::llround(u.a * static_cast<double>(sr)));
    std::size_t ib = static_cast<std::size_t>(std::llround(u.b * static_cast<double>(sr)));
    ib = std::min(ib, S);
    if (ib > ia) render_utterance(dry[u.k], ia, ib, taps, sr, rng_speech);
  }

  // frame activity from the schedule (center sample of each frame)
  Tensor<std::uint8_t> activity({K, T});
  activity.fill(0);
  for (std::size_t t = 0; t < T; ++t) {
    const double tc = (static_cast<double>(t) * static_cast<double>(cfg.stft.frame_shift) +
                       0.5 * static_cast<double>(cfg.stft.frame_length)) /
                      static_cast<double>(sr);
    for (const auto& u : utts)
      if (tc >= u.a && tc < u.b) activity(u.k, t) = 1;
  }

  // source angles and location ids
  std::vector<double> theta(K);
  const double pi = 3.14159265358979323846;
  if (!cfg.angles_deg.empty()) {
    for (std::size_t k = 0; k < K; ++k) theta[k] = cfg.angles_deg[k] * pi / 180.0;
  } else {
    for (std::size_t k = 0; k < K; ++k)
      theta[k] = 2.0 * pi * static_cast<double>(k) / static_cast<double>(K) +
                 (rng_geom.uniform() - 0.5) * (pi / 18.0);
  }
  double theta_move = theta[0] + 2.0 * pi / 3.0;
  if (!cfg.move_angles_deg.empty()) theta_move = cfg.move_angles_deg[0] * pi / 180.0;

  std::vector<Tensor<cdouble>> steer;
  steer.reserve(K + 1);
  for (std::size_t k = 0; k < K; ++k) steer.push_back(steering_for_angle(theta[k], cfg));
  if (move) steer.push_back(steering_for_angle(theta_move, cfg));

  Tensor<double> location({K, T});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t loc = k;
      if (move && k == 0 && t >= T / 2) loc = K;  // speaker 0 jumps at mid-scene
      location(k, t) = static_cast<double>(loc + location_offset);
    }

  // per-speaker STFTs (center-channel images, since the center mic has zero delay)
  SceneCore out;
  out.clean = Tensor<cdouble>({K, T, F});
  out.dry.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    Tensor<double> wave({S, 1});
    for (std::size_t s = 0; s < S; ++s) wave(s, 0) = dry[k][s];
    const Tensor<cdouble> spec = stft(wave, cfg.stft);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) out.clean(k, t, f) = spec(t, f, 0);
    Tensor<double> mono({S});
    for (std::size_t s = 0; s < S; ++s) mono(s) = dry[k][s];
    out.dry.push_back(std::move(mono));
  }

  // spatial mixing
  out.x = Tensor<cdouble>({T, F, C});
  out.x.fill(cdouble(0.0, 0.0));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t loc =
          static_cast<std::size_t>(location(k, t)) - location_offset;
      const Tensor<cdouble>& d = steer[loc];
      for (std::size_t f = 0; f < F; ++f) {
        const cdouble s = out.clean(k, t, f);
        if (s == cdouble(0.0, 0.0)) continue;
        for (std::size_t c = 0; c < C; ++c) out.x(t, f, c) += s * d(f, c);
      }
    }

  // diffuse noise, power relative to the mean active source bin power
  double mean_power = 0.0;
  std::size_t n_active = 0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        const double p = std::norm(out.clean(k, t, f));
        if (p > 0.0) {
          mean_power += p;
          ++n_active;
        }
      }
  if (n_active > 0) mean_power /= static_cast<double>(n_active);
  const double sigma2 = cfg.noise * mean_power;
  const double sigma = std::sqrt(sigma2);
  if (sigma > 0.0)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t c = 0; c < C; ++c) out.x(t, f, c) += sigma * rng_noise.cnormal();

  // dominance masks: a bin belongs to k when its image power beats everything
  // else (other speakers plus noise floor) by at least 3 dB
  out.masks = Tensor<double>({K, T, F});
  out.masks.fill(0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) total += std::norm(out.clean(k, t, f));
      for (std::size_t k = 0; k < K; ++k) {
        const double pk = std::norm(out.clean(k, t, f));
        const double rest = total - pk + sigma2;
        if (pk >= 2.0 * rest && pk > 0.0) out.masks(k, t, f) = 1.0;
      }
    }

  out.activity = std::move(activity);
  out.location = std::move(location);
  return out;
}

inline Tensor<double> embeddings_for_activity(const Tensor<std::uint8_t>& activity,
                                              const Tensor<double>& mu_star,
                                              const std::vector<double>& mu_noise, double kappa,
                                              Rng& rng) {
  const std::size_t K = activity.dim(0), T = activity.dim(1), D = mu_star.dim(1);
  Tensor<double> e({T, D});
  std::vector<double> dir(D);
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t n_active = 0;
    for (std::size_t k = 0; k < K; ++k) n_active += activity(k, t);
    double kap = kappa;
    if (n_active == 0) {
      dir = mu_noise;
    } else if (n_active == 1) {
      for (std::size_t k = 0; k < K; ++k)
        if (activity(k, t))
          for (std::size_t d = 0; d < D; ++d) dir[d] = mu_star(k, d);
    } else {
      std::fill(dir.begin(), dir.end(), 0.0);
      for (std::size_t k = 0; k < K; ++k)
        if (activity(k, t))
          for (std::size_t d = 0; d < D; ++d) dir[d] += mu_star(k, d);
      double nrm = 0.0;
      for (double v : dir) nrm += v * v;
      nrm = std::sqrt(nrm);
      if (nrm > 0.0)
        for (double& v : dir) v /= nrm;
      else
        dir[0] = 1.0;
      kap = 0.5 * kappa;  // overlapped frames are less peaked
    }
    const Tensor<double> s = sample_vmf(dir, kap, 1, rng);
    for (std::size_t d = 0; d < D; ++d) e(t, d) = s(0, d);
  }
  return e;
}

}  // namespace detail

// Cyclically permutes the non-center channels of the second temporal half of
// an observation set, mimicking a rotation of the array relative to the room.
inline ObservationSet rotate_channels(const ObservationSet& obs, std::size_t k_positions,
                                      std::size_t center_channel = 0) {
  const std::size_t C = obs.C();
  check(C >= 3, "rotate_channels: needs at least 3 channels");
  check(center_channel < C, "rotate_channels: center channel out of range");
  std::vector<std::size_t> ring;
  for (std::size_t c = 0; c < C; ++c)
    if (c != center_channel) ring.push_back(c);
  const std::size_t R = ring.size();
  std::vector<std::size_t> dest(C);
  dest[center_channel] = center_channel;
  for (std::size_t i = 0; i < R; ++i) dest[ring[i]] = ring[(i + k_positions) % R];

  ObservationSet out = obs;
  const std::size_t T = obs.T(), F = obs.F();
  for (std::size_t t = T / 2; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t c = 0; c < C; ++c) out.y(t, f, dest[c]) = obs.y(t, f, c);
  return out;
}

inline ObservationSet concat_segments(const ObservationSet& a, const ObservationSet& b) {
  check(a.F() == b.F() && a.C() == b.C() && a.D() == b.D(),
        "concat_segments: incompatible shapes");
  check(a.stft_config.frame_length == b.stft_config.frame_length &&
            a.stft_config.frame_shift == b.stft_config.frame_shift &&
            a.stft_config.fft_length == b.stft_config.fft_length &&
            a.stft_config.sample_rate == b.stft_config.sample_rate &&
            a.stft_config.window == b.stft_config.window,
        "concat_segments: analysis settings differ");
  const std::size_t Ta = a.T(), Tb = b.T(), F = a.F(), C = a.C(), D = a.D();
  ObservationSet out;
  out.stft_config = a.stft_config;
  out.y = Tensor<cdouble>({Ta + Tb, F, C});
  out.e = Tensor<double>({Ta + Tb, D});
  out.norm = Tensor<double>({Ta + Tb, F});
  out.degenerate = Tensor<std::uint8_t>({Ta + Tb, F});
  for (std::size_t t = 0; t < Ta + Tb; ++t) {
    const bool first = t < Ta;
    const std::size_t s = first ? t : t - Ta;
    const ObservationSet& src = first ? a : b;
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t c = 0; c < C; ++c) out.y(t, f, c) = src.y(s, f, c);
      out.norm(t, f) = src.norm(s, f);
      out.degenerate(t, f) = src.degenerate(s, f);
    }
    for (std::size_t d = 0; d < D; ++d) out.e(t, d) = src.e(s, d);
  }
  out.validate();
  return out;
}

inline SimResult simulate(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  const std::size_t K = cfg.speakers, D = cfg.embed_dim, C = cfg.channels;
  const std::size_t F = cfg.stft.bins();

  // true embedding directions, shared across segments
  Rng rng_embed_dirs = root.split(100);
  Tensor<double> mu_star({K, D});
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> v(D);
    double nrm = 0.0;
    do {
      nrm = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        v[d] = rng_embed_dirs.normal();
        nrm += v[d] * v[d];
      }
      nrm = std::sqrt(nrm);
    } while (nrm < 1e-12);
    for (std::size_t d = 0; d < D; ++d) mu_star(k, d) = v[d] / nrm;
  }
  std::vector<double> mu_noise(D);
  {
    double nrm = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      mu_noise[d] = rng_embed_dirs.normal();
      nrm += mu_noise[d] * mu_noise[d];
    }
    nrm = std::sqrt(nrm);
    for (std::size_t d = 0; d < D; ++d) mu_noise[d] /= nrm;
  }

  std::vector<detail::SceneCore> cores;
  if (cfg.relocation == "rotate") {
    Rng r1 = root.split(200), r2 = root.split(201);
    cores.push_back(detail::simulate_core(cfg, r1, false, 0));
    cores.push_back(detail::simulate_core(cfg, r2, false, K));
    // apply the array rotation to the raw mixture of the second segment
    detail::SceneCore& sc = cores[1];
    const std::size_t T2 = sc.x.dim(0);
    std::vector<std::size_t> ring;
    for (std::size_t c = 0; c < C; ++c)
      if (c != 0) ring.push_back(c);
    const std::size_t R = ring.size();
    Tensor<cdouble> rotated({T2, F, C});
    for (std::size_t t = 0; t < T2; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        rotated(t, f, 0) = sc.x(t, f, 0);
        for (std::size_t i = 0; i < R; ++i)
          rotated(t, f, ring[(i + 2) % R]) = sc.x(t, f, ring[i]);
      }
    sc.x = std::move(rotated);
  } else {
    Rng r1 = root.split(200);
    cores.push_back(detail::simulate_core(cfg, r1, cfg.relocation == "move", 0));
  }

  // stitch segments
  const std::size_t T = cores.size() == 1 ? cores[0].x.dim(0)
                                          : cores[0].x.dim(0) + cores[1].x.dim(0);
  Tensor<cdouble> x({T, F, C});
  Tensor<cdouble> clean({K, T, F});
  Tensor<std::uint8_t> activity({K, T});
  Tensor<double> masks({K, T, F});
  Tensor<double> location({K, T});
  std::size_t t0 = 0;
  for (const auto& sc : cores) {
    const std::size_t Ts = sc.x.dim(0);
    for (std::size_t t = 0; t < Ts; ++t)
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t c = 0; c < C; ++c) x(t0 + t, f, c) = sc.x(t, f, c);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t t = 0; t < Ts; ++t) {
        activity(k, t0 + t) = sc.activity(k, t);
        location(k, t0 + t) = sc.location(k, t);
        for (std::size_t f = 0; f < F; ++f) {
          clean(k, t0 + t, f) = sc.clean(k, t, f);
          masks(k, t0 + t, f) = sc.masks(k, t, f);
        }
      }
    t0 += Ts;
  }

  Rng rng_embed = root.split(300);
  const Tensor<double> e =
      detail::embeddings_for_activity(activity, mu_star, mu_noise, cfg.embed_kappa, rng_embed);

  SimResult out;
  out.obs = make_observation_set(x, e, cfg.stft);
  out.truth.activity = std::move(activity);
  out.mix_wave = istft(x, cfg.stft);
  out.obs.log_energy = frame_log_energy(out.mix_wave, cfg.stft);
  out.truth.oracle_masks = std::move(masks);
  out.truth.clean_stfts = std::move(clean);
  out.truth.location_track = std::move(location);
  out.truth.mu_star = std::move(mu_star);

  std::size_t any = 0, multi = 0;
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < K; ++k) n += out.truth.activity(k, t);
    if (n >= 1) ++any;
    if (n >= 2) ++multi;
  }
  out.truth.achieved_overlap = any > 0 ? static_cast<double>(multi) / static_cast<double>(any) : 0.0;

  out.clean_waves.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t total = 0;
    for (const auto& sc : cores) total += sc.dry[k].size();
    Tensor<double> wave({total});
    std::size_t off = 0;
    for (const auto& sc : cores) {
      for (std::size_t s = 0; s < sc.dry[k].size(); ++s) wave(off + s) = sc.dry[k](s);
      off += sc.dry[k].size();
    }
    out.clean_waves.push_back(std::move(wave));
  }
  return out;
}

inline void save_truth(const std::string& path, const GroundTruth& truth) {
  std::vector<ArchiveEntry> entries;
  entries.push_back({"activity", truth.activity});
  entries.push_back({"oracle_masks", truth.oracle_masks});
  entries.push_back({"clean_stfts", truth.clean_stfts});
  entries.push_back({"location_track", truth.location_track});
  entries.push_back({"mu_star", truth.mu_star});
  Tensor<double> ov({1});
  ov(0) = truth.achieved_overlap;
  entries.push_back({"achieved_overlap", ov});
  write_archive(path, entries);
}

inline GroundTruth load_truth(const std::string& path) {
  const auto entries = read_archive(path);
  GroundTruth truth;
  truth.activity = require_entry<std::uint8_t>(entries, "activity");
  truth.oracle_masks = require_entry<double>(entries, "oracle_masks");
  truth.clean_stfts = require_entry<cdouble>(entries, "clean_stfts");
  truth.location_track = require_entry<double>(entries, "location_track");
  truth.mu_star = require_entry<double>(entries, "mu_star");
  truth.achieved_overlap = require_entry<double>(entries, "achieved_overlap")(0);
  return truth;
}

}  // namespace diasep
