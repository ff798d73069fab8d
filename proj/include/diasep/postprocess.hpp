// Turns soft speaker activity into diarization output: thresholding with
// morphological cleanup, duplicate-component merging, and segment/RTTM
// conversion.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diasep/stft.hpp"
#include "diasep/tensor.hpp"

namespace diasep {

struct SmoothConfig {
  double on_thresh = 0.5;
  double min_on_s = 0.3;
  double min_off_s = 0.3;
};

// Threshold, then fill interior gaps shorter than min_off, then drop bursts
// shorter than min_on. Idempotent: surviving runs and gaps satisfy both
// minima, so a second pass changes nothing.
inline Tensor<std::uint8_t> smooth_activity(const Tensor<double>& gamma,
                                            const StftConfig& stft_cfg,
                                            const SmoothConfig& cfg = {}) {
  check(gamma.rank() == 2, "smooth_activity: gamma must be [K,T]");
  const std::size_t K = gamma.dim(0), T = gamma.dim(1);
  const double frames_per_s = stft_cfg.sample_rate / static_cast<double>(stft_cfg.frame_shift);
  const std::size_t min_on =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.min_on_s * frames_per_s)));
  const std::size_t min_off =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.min_off_s * frames_per_s)));

  Tensor<std::uint8_t> act({K, T});
  std::vector<std::uint8_t> row(T);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < T; ++t) row[t] = gamma(k, t) >= cfg.on_thresh ? 1 : 0;

    // closing: fill interior off-runs shorter than min_off
    std::size_t t = 0;
    while (t < T) {
      if (row[t]) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < T && !row[end]) ++end;
      const bool interior = t > 0 && end < T;
      if (interior && end - t < min_off)
        for (std::size_t i = t; i < end; ++i) row[i] = 1;
      t = end;
    }
    // opening: drop on-runs shorter than min_on
    t = 0;
    while (t < T) {
      if (!row[t]) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < T && row[end]) ++end;
      if (end - t < min_on)
        for (std::size_t i = t; i < end; ++i) row[i] = 0;
      t = end;
    }
    for (std::size_t i = 0; i < T; ++i) act(k, i) = row[i];
  }
  return act;
}

struct DuplicateResult {
  std::vector<std::size_t> kept;      // surviving original component indices
  Tensor<std::uint8_t> activity;     // [K',T], activities of survivors (unions)
};

// Components whose mean directions nearly coincide and whose activities
// largely overlap are the same speaker split in two; merge the less active
// one into the more active one, repeating until stable.
inline DuplicateResult remove_duplicates(const Tensor<std::uint8_t>& activity,
                                         const Tensor<double>& mu,
                                         double cos_thresh = 0.9,
                                         double overlap_thresh = 0.5) {
  check(activity.rank() == 2 && mu.rank() == 2, "remove_duplicates: bad ranks");
  const std::size_t K = activity.dim(0), T = activity.dim(1), D = mu.dim(1);
  check(mu.dim(0) == K, "remove_duplicates: activity/mu component counts differ");

  std::vector<std::vector<std::uint8_t>> act(K, std::vector<std::uint8_t>(T));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) act[k][t] = activity(k, t);
  std::vector<std::uint8_t> alive(K, 1);

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < K && !merged; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < K && !merged; ++j) {
        if (!alive[j]) continue;
        double cs = 0.0;
        for (std::size_t d = 0; d < D; ++d) cs += mu(i, d) * mu(j, d);
        if (cs <= cos_thresh) continue;
        std::size_t ai = 0, aj = 0, inter = 0;
        for (std::size_t t = 0; t < T; ++t) {
          ai += act[i][t];
          aj += act[j][t];
          inter += act[i][t] && act[j][t] ? 1 : 0;
        }
        const std::size_t mn = std::min(ai, aj);
        if (mn == 0 || static_cast<double>(inter) / static_cast<double>(mn) <= overlap_thresh)
          continue;
        const std::size_t winner = ai >= aj ? i : j;
        const std::size_t loser = winner == i ? j : i;
        for (std::size_t t = 0; t < T; ++t)
          act[winner][t] = act[winner][t] || act[loser][t] ? 1 : 0;
        alive[loser] = 0;
        merged = true;
      }
    }
  }

  DuplicateResult out;
  for (std::size_t k = 0; k < K; ++k)
    if (alive[k]) out.kept.push_back(k);
  out.activity = Tensor<std::uint8_t>({out.kept.size(), T});
  for (std::size_t r = 0; r < out.kept.size(); ++r)
    for (std::size_t t = 0; t < T; ++t) out.activity(r, t) = act[out.kept[r]][t];
  return out;
}

struct Segment {
  std::size_t speaker;
  double start;
  double end;
};

struct Diarization {
  std::vector<Segment> segments;
  std::size_t num_speakers = 0;
};

// Maximal on-runs become segments; frame i spans
// [i*shift/rate, (i+1)*shift/rate).
inline Diarization activity_to_segments(const Tensor<std::uint8_t>& activity,
                                        const StftConfig& stft_cfg,
                                        const std::vector<std::size_t>* speaker_ids = nullptr) {
  check(activity.rank() == 2, "activity_to_segments: activity must be [K,T]");
  const std::size_t K = activity.dim(0), T = activity.dim(1);
  const double spf = static_cast<double>(stft_cfg.frame_shift) / stft_cfg.sample_rate;
  Diarization d;
  d.num_speakers = K;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t id = speaker_ids != nullptr ? (*speaker_ids)[k] : k;
    std::size_t t = 0;
    while (t < T) {
      if (!activity(k, t)) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < T && activity(k, end)) ++end;
      d.segments.push_back({id, static_cast<double>(t) * spf, static_cast<double>(end) * spf});
      t = end;
    }
  }
  return d;
}

inline Tensor<std::uint8_t> segments_to_activity(const Diarization& d, std::size_t K,
                                                 std::size_t T, const StftConfig& stft_cfg) {
  const double spf = static_cast<double>(stft_cfg.frame_shift) / stft_cfg.sample_rate;
  Tensor<std::uint8_t> act({K, T});
  act.fill(0);
  for (const Segment& s : d.segments) {
    check(s.speaker < K, "segments_to_activity: speaker id out of range");
    const std::size_t lo = static_cast<std::size_t>(std::ceil(s.start / spf - 1e-9));
    const std::size_t hi = std::min(T, static_cast<std::size_t>(std::ceil(s.end / spf - 1e-9)));
    for (std::size_t t = lo; t < hi; ++t) act(s.speaker, t) = 1;
  }
  return act;
}

inline std::string to_rttm(const Diarization& d, const std::string& recording_id) {
  std::ostringstream out;
  for (const Segment& s : d.segments) {
    out << "SPEAKER " << recording_id << " 1 ";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f %.3f", s.start, s.end - s.start);
    out << buf << " <NA> <NA> spk" << s.speaker << " <NA> <NA>\n";
  }
  return out.str();
}

inline Diarization parse_rttm(const std::string& text) {
  Diarization d;
  std::istringstream in(text);
  std::string line;
  std::size_t max_spk = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, rec, chan, na1, na2, spk;
    double start = 0.0, dur = 0.0;
    ls >> kind >> rec >> chan >> start >> dur >> na1 >> na2 >> spk;
    check(!ls.fail() && kind == "SPEAKER", "parse_rttm: malformed line: " + line);
    std::size_t id = 0;
    if (spk.rfind("spk", 0) == 0)
      id = static_cast<std::size_t>(std::stoul(spk.substr(3)));
    else
      id = static_cast<std::size_t>(std::stoul(spk));
    d.segments.push_back({id, start, start + dur});
    max_spk = std::max(max_spk, id + 1);
  }
  d.num_speakers = max_spk;
  return d;
}

inline void write_rttm_file(const std::string& path, const Diarization& d,
                            const std::string& recording_id) {
  std::ofstream out(path, std::ios::trunc);
  check(out.good(), "write_rttm_file: cannot open " + path);
  out << to_rttm(d, recording_id);
  check(out.good(), "write_rttm_file: I/O failure");
}

inline Diarization read_rttm_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "read_rttm_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rttm(ss.str());
}

}  // namespace diasep
