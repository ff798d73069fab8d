// Initial joint posterior construction: energy VAD, embedding clustering with
// over-segmentation and fusion down to K speakers, per-frequency spatial
// clustering with permutation alignment and a short mixture warmup, and the
// outer-product combination delta0 = z_spec0 * z_spat0.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diasep/archive.hpp"
#include "diasep/cacgmm.hpp"
#include "diasep/observation.hpp"
#include "diasep/rng.hpp"
#include "diasep/stft.hpp"
#include "diasep/tensor.hpp"
#include "diasep/vmf.hpp"

namespace diasep {

struct InitConfig {
  double vad_percentile = 0.1;  // global quiet-frame percentile feeding the noise floor
  double vad_margin = 2.0;      // nats above the floor to call a frame speech
  std::size_t kmeans_restarts = 3;
  std::size_t spatial_warmup_iters = 30;
  std::uint64_t seed = 0;
};

// Frame is speech iff its log energy exceeds the noise floor by vad_margin.
// The floor is the lower of a sliding minimum (1.5 s window) and a global
// low percentile, so long loud stretches do not swallow their own floor.
inline Tensor<std::uint8_t> energy_vad(const Tensor<double>& log_energy, const InitConfig& cfg,
                                       const StftConfig& stft_cfg) {
  check(log_energy.rank() == 1, "energy_vad: log_energy must be [T]");
  const std::size_t T = log_energy.dim(0);
  Tensor<std::uint8_t> speech({T});
  if (T == 0) return speech;

  const double frames_per_s = stft_cfg.sample_rate / static_cast<double>(stft_cfg.frame_shift);
  const std::size_t win = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                       std::lround(1.5 * frames_per_s)));
  const std::size_t half = win / 2;

  std::vector<double> sorted(log_energy.data(), log_energy.data() + T);
  std::sort(sorted.begin(), sorted.end());
  const double q = std::clamp(cfg.vad_percentile, 0.0, 1.0);
  const double global_floor =
      sorted[static_cast<std::size_t>(q * static_cast<double>(T - 1))];

  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t > half ? t - half : 0;
    const std::size_t hi = std::min(T, t + half + 1);
    double smin = log_energy(lo);
    for (std::size_t i = lo + 1; i < hi; ++i) smin = std::min(smin, log_energy(i));
    const double floor_val = std::min(smin, global_floor);
    speech(t) = log_energy(t) > floor_val + cfg.vad_margin ? 1 : 0;
  }
  return speech;
}

namespace detail {

struct KmeansResult {
  std::vector<std::size_t> labels;
  Eigen::MatrixXd centers;  // [k, dim]
  double inertia = 0.0;
};

// k-means++ seeding; `spherical` switches to cosine geometry on unit rows
// (distance 1 - dot, centers renormalized). Empty clusters are re-seeded from
// the point farthest from its assigned center.
inline KmeansResult kmeans(const Eigen::MatrixXd& pts, std::size_t k, Rng& rng,
                           bool spherical, std::size_t max_iters = 30) {
  const std::size_t n = static_cast<std::size_t>(pts.rows());
  const std::size_t dim = static_cast<std::size_t>(pts.cols());
  check(n >= 1 && k >= 1, "kmeans: empty input");

  auto dist = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return spherical ? std::max(0.0, 1.0 - a.dot(b)) : (a - b).squaredNorm();
  };

  KmeansResult res;
  res.centers.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
  std::vector<double> d2(n);
  res.centers.row(0) = pts.row(static_cast<Eigen::Index>(rng.index(n)));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = dist(pts.row(static_cast<Eigen::Index>(i)).transpose(),
                         res.centers.row(0).transpose());
      for (std::size_t jj = 1; jj < j; ++jj)
        best = std::min(best, dist(pts.row(static_cast<Eigen::Index>(i)).transpose(),
                                   res.centers.row(static_cast<Eigen::Index>(jj)).transpose()));
      d2[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.index(n);
    } else {
      double r = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    res.centers.row(static_cast<Eigen::Index>(j)) = pts.row(static_cast<Eigen::Index>(pick));
  }

  res.labels.assign(n, 0);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = dist(pts.row(static_cast<Eigen::Index>(i)).transpose(),
                       res.centers.row(0).transpose());
      for (std::size_t j = 1; j < k; ++j) {
        const double d = dist(pts.row(static_cast<Eigen::Index>(i)).transpose(),
                              res.centers.row(static_cast<Eigen::Index>(j)).transpose());
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      if (res.labels[i] != best) {
        res.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                                 static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(res.labels[i])) += pts.row(static_cast<Eigen::Index>(i));
      ++counts[res.labels[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) {
        // farthest point from its own center takes over the empty cluster
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              dist(pts.row(static_cast<Eigen::Index>(i)).transpose(),
                   res.centers.row(static_cast<Eigen::Index>(res.labels[i])).transpose());
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        res.centers.row(static_cast<Eigen::Index>(j)) = pts.row(static_cast<Eigen::Index>(far));
        res.labels[far] = j;
        continue;
      }
      Eigen::VectorXd c = sums.row(static_cast<Eigen::Index>(j)) /
                          static_cast<double>(counts[j]);
      if (spherical) {
        const double nn = c.norm();
        if (nn > 0.0) c /= nn;
      }
      res.centers.row(static_cast<Eigen::Index>(j)) = c;
    }
  }

  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    res.inertia += dist(pts.row(static_cast<Eigen::Index>(i)).transpose(),
                        res.centers.row(static_cast<Eigen::Index>(res.labels[i])).transpose());
  return res;
}

inline KmeansResult kmeans_best_of(const Eigen::MatrixXd& pts, std::size_t k, Rng& rng,
                                   bool spherical, std::size_t restarts) {
  KmeansResult best;
  bool have = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    Rng sub = rng.split(r + 1);
    KmeansResult cur = kmeans(pts, k, sub, spherical);
    if (!have || cur.inertia < best.inertia) {
      best = std::move(cur);
      have = true;
    }
  }
  return best;
}

}  // namespace detail

// Embedding-space initial speaker activity: spherical k-means with 2K classes
// on speech frames, a 10-iteration vMF mixture refit, greedy fusion of the
// most similar mean directions down to K, softened hard labels, and nearest
// -speech-frame extension across pauses.
inline Tensor<double> spectral_init(const Tensor<double>& e, const Tensor<std::uint8_t>& speech,
                                    std::size_t K, const InitConfig& cfg) {
  check(e.rank() == 2, "spectral_init: e must be [T,D]");
  const std::size_t T = e.dim(0), D = e.dim(1);
  check(speech.rank() == 1 && speech.dim(0) == T, "spectral_init: speech flags must be [T]");
  check(K >= 1, "spectral_init: K must be >= 1");

  std::vector<std::size_t> sp_idx;
  for (std::size_t t = 0; t < T; ++t)
    if (speech(t)) sp_idx.push_back(t);
  check(sp_idx.size() >= K, "spectral_init: fewer speech frames than speakers");
  const std::size_t Ts = sp_idx.size();

  Tensor<double> z({K, T});
  if (K == 1) {
    z.fill(1.0);
    return z;
  }

  Eigen::MatrixXd pts(static_cast<Eigen::Index>(Ts), static_cast<Eigen::Index>(D));
  for (std::size_t i = 0; i < Ts; ++i)
    for (std::size_t d = 0; d < D; ++d)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = e(sp_idx[i], d);

  Rng rng = Rng(cfg.seed).split(17);
  const std::size_t J = 2 * K;
  detail::KmeansResult km =
      detail::kmeans_best_of(pts, std::min(J, Ts), rng, /*spherical=*/true,
                             cfg.kmeans_restarts);
  const std::size_t J_eff = static_cast<std::size_t>(km.centers.rows());

  // vMF mixture refit from the hard k-means labels.
  Tensor<double> e_sp({Ts, D});
  for (std::size_t i = 0; i < Ts; ++i)
    for (std::size_t d = 0; d < D; ++d) e_sp(i, d) = pts(static_cast<Eigen::Index>(i),
                                                         static_cast<Eigen::Index>(d));
  Tensor<double> resp({Ts, J_eff});
  resp.fill(0.0);
  for (std::size_t i = 0; i < Ts; ++i) resp(i, km.labels[i]) = 1.0;

  VmfParams params = VmfParams::defaults(J_eff, D);
  std::vector<double> weights(J_eff, 1.0 / static_cast<double>(J_eff));
  auto m_step = [&]() {
    params = vmf_m_step(e_sp, resp, params);
    for (std::size_t j = 0; j < J_eff; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < Ts; ++i) s += resp(i, j);
      weights[j] = s / static_cast<double>(Ts);
    }
  };
  m_step();
  for (std::size_t iter = 0; iter < 10; ++iter) {
    const Tensor<double> logp = vmf_log_pdf_all(e_sp, params);  // [J,Ts]
    std::vector<double> logits(J_eff);
    for (std::size_t i = 0; i < Ts; ++i) {
      for (std::size_t j = 0; j < J_eff; ++j)
        logits[j] = (weights[j] > 0.0 ? std::log(weights[j])
                                      : -std::numeric_limits<double>::infinity()) +
                    logp(j, i);
      const double lse = detail::logsumexp(logits.data(), J_eff);
      for (std::size_t j = 0; j < J_eff; ++j)
        resp(i, j) = lse > -std::numeric_limits<double>::infinity()
                         ? std::exp(logits[j] - lse)
                         : 1.0 / static_cast<double>(J_eff);
    }
    m_step();
  }

  // Greedy fusion: merge the pair with the highest mean-direction cosine,
  // refit, repeat until K components remain.
  std::vector<std::size_t> alive(J_eff);
  for (std::size_t j = 0; j < J_eff; ++j) alive[j] = j;
  while (alive.size() > K) {
    double best_cos = -2.0;
    std::size_t bi = 0, bj = 1;
    for (std::size_t a = 0; a < alive.size(); ++a)
      for (std::size_t b = a + 1; b < alive.size(); ++b) {
        double cs = 0.0;
        for (std::size_t d = 0; d < D; ++d) cs += params.mu(alive[a], d) * params.mu(alive[b], d);
        if (cs > best_cos) {
          best_cos = cs;
          bi = a;
          bj = b;
        }
      }
    for (std::size_t i = 0; i < Ts; ++i) {
      resp(i, alive[bi]) += resp(i, alive[bj]);
      resp(i, alive[bj]) = 0.0;
    }
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(bj));
    m_step();
  }

  // Distinctness check: duplicate or massless survivors mean the data cannot
  // support K clusters.
  std::vector<std::size_t> groups;
  for (std::size_t a = 0; a < alive.size(); ++a) {
    double mass = 0.0;
    for (std::size_t i = 0; i < Ts; ++i) mass += resp(i, alive[a]);
    if (mass < 1e-6 * static_cast<double>(Ts)) continue;
    bool dup = false;
    for (std::size_t g : groups) {
      double cs = 0.0;
      for (std::size_t d = 0; d < D; ++d) cs += params.mu(alive[a], d) * params.mu(g, d);
      if (cs > 1.0 - 1e-6) {
        dup = true;
        break;
      }
    }
    if (!dup) groups.push_back(alive[a]);
  }
  if (groups.size() < K)
    fail("spectral_init: only " + std::to_string(groups.size()) +
         " distinct clusters achievable (requested " + std::to_string(K) + ")");

  // Hard labels on speech frames, softened; pauses copy the nearest speech frame.
  std::vector<std::size_t> label(T, 0);
  std::vector<std::uint8_t> is_speech(T, 0);
  for (std::size_t i = 0; i < Ts; ++i) {
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t a = 0; a < K; ++a) {
      if (resp(i, alive[a]) > bv) {
        bv = resp(i, alive[a]);
        best = a;
      }
    }
    label[sp_idx[i]] = best;
    is_speech[sp_idx[i]] = 1;
  }
  std::vector<std::ptrdiff_t> nearest(T, -1);
  {
    std::ptrdiff_t last = -1;
    for (std::size_t t = 0; t < T; ++t) {
      if (is_speech[t]) last = static_cast<std::ptrdiff_t>(t);
      nearest[t] = last;
    }
    last = -1;
    for (std::size_t tt = T; tt-- > 0;) {
      if (is_speech[tt]) last = static_cast<std::ptrdiff_t>(tt);
      if (last >= 0) {
        const std::ptrdiff_t st = static_cast<std::ptrdiff_t>(tt);
        if (nearest[tt] < 0 || last - st < st - nearest[tt]) nearest[tt] = last;
      }
    }
  }
  const double off = 0.1 / static_cast<double>(K);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t src = static_cast<std::size_t>(nearest[t]);
    for (std::size_t k = 0; k < K; ++k) z(k, t) = off + (label[src] == k ? 0.9 : 0.0);
  }
  return z;
}

// Ground-truth-driven replacement for spectral_init: softened per-frame
// activity shares.
inline Tensor<double> oracle_spectral_init(const Tensor<std::uint8_t>& activity) {
  check(activity.rank() == 2, "oracle_spectral_init: activity must be [K,T]");
  const std::size_t K = activity.dim(0), T = activity.dim(1);
  Tensor<double> z({K, T});
  for (std::size_t t = 0; t < T; ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += activity(k, t) ? 1.0 : 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double share = s > 0.0 ? (activity(k, t) ? 1.0 / s : 0.0)
                                   : 1.0 / static_cast<double>(K);
      z(k, t) = 0.1 / static_cast<double>(K) + 0.9 * share;
    }
  }
  return z;
}

// Per-frequency clustering of phase-normalized spatial vectors, greedy
// low-to-high-frequency permutation alignment against a running activity
// centroid, then a plain mixture warmup; returns the warmup posterior.
inline Tensor<double> spatial_init(const ObservationSet& obs, std::size_t L,
                                   const InitConfig& cfg) {
  obs.validate();
  const std::size_t T = obs.T(), F = obs.F(), C = obs.C();
  check(L >= 1, "spatial_init: L must be >= 1");
  check(T * F >= L, "spatial_init: not enough bins for L classes");

  Tensor<double> z({L, T, F});
  if (L == 1) {
    z.fill(1.0);
  } else {
    Rng rng = Rng(cfg.seed).split(29);
    std::vector<std::vector<std::size_t>> labels(F, std::vector<std::size_t>(T, 0));
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(2 * C));
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t t = 0; t < T; ++t) {
        const cdouble y0 = obs.y(t, f, 0);
        const double a0 = std::abs(y0);
        const cdouble ph = a0 > 0.0 ? y0 / a0 : cdouble(1.0, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
          const cdouble v = obs.y(t, f, c) / ph;
          pts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(2 * c)) = v.real();
          pts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(2 * c + 1)) = v.imag();
        }
      }
      Rng sub = rng.split(1000 + f);
      labels[f] = detail::kmeans_best_of(pts, L, sub, /*spherical=*/false,
                                         cfg.kmeans_restarts)
                      .labels;
    }

    // Align class indices across frequencies by correlating activity profiles.
    std::vector<std::vector<double>> centroid(L, std::vector<double>(T, 0.0));
    auto profile = [&](std::size_t f, std::size_t l) {
      std::vector<double> a(T, 0.0);
      for (std::size_t t = 0; t < T; ++t) a[t] = labels[f][t] == l ? 1.0 : 0.0;
      return a;
    };
    auto corr = [&](const std::vector<double>& a, const std::vector<double>& b) {
      double ma = 0.0, mb = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        ma += a[t];
        mb += b[t];
      }
      ma /= static_cast<double>(T);
      mb /= static_cast<double>(T);
      double num = 0.0, va = 0.0, vb = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        num += (a[t] - ma) * (b[t] - mb);
        va += (a[t] - ma) * (a[t] - ma);
        vb += (b[t] - mb) * (b[t] - mb);
      }
      return va > 0.0 && vb > 0.0 ? num / std::sqrt(va * vb) : 0.0;
    };
    for (std::size_t f = 0; f < F; ++f) {
      std::vector<std::size_t> perm(L, 0);
      if (f == 0) {
        for (std::size_t l = 0; l < L; ++l) perm[l] = l;
      } else {
        std::vector<std::vector<double>> R(L, std::vector<double>(L));
        for (std::size_t ln = 0; ln < L; ++ln) {
          const std::vector<double> a = profile(f, ln);
          for (std::size_t lr = 0; lr < L; ++lr) R[ln][lr] = corr(a, centroid[lr]);
        }
        std::vector<std::uint8_t> row_used(L, 0), col_used(L, 0);
        for (std::size_t step = 0; step < L; ++step) {
          double best = -2.0;
          std::size_t bi = 0, bj = 0;
          for (std::size_t i = 0; i < L; ++i) {
            if (row_used[i]) continue;
            for (std::size_t j = 0; j < L; ++j) {
              if (col_used[j]) continue;
              if (R[i][j] > best) {
                best = R[i][j];
                bi = i;
                bj = j;
              }
            }
          }
          perm[bi] = bj;
          row_used[bi] = 1;
          col_used[bj] = 1;
        }
      }
      for (std::size_t t = 0; t < T; ++t) labels[f][t] = perm[labels[f][t]];
      const double w = static_cast<double>(f);
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < T; ++t)
          centroid[l][t] = (centroid[l][t] * w + (labels[f][t] == l ? 1.0 : 0.0)) / (w + 1.0);
    }

    const double off = 0.1 / static_cast<double>(L);
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          z(l, t, f) = off + (labels[f][t] == l ? 0.9 : 0.0);
  }

  if (cfg.spatial_warmup_iters == 0) return z;
  CacgmmState warm = cacgmm_fit(obs, z, cfg.spatial_warmup_iters);
  return warm.eta;
}

// Outer product of the two initial posteriors, renormalized per bin.
inline Tensor<double> build_delta0(const Tensor<double>& z_spec0,
                                   const Tensor<double>& z_spat0) {
  check(z_spec0.rank() == 2 && z_spat0.rank() == 3, "build_delta0: bad ranks");
  const std::size_t K = z_spec0.dim(0), T = z_spec0.dim(1);
  const std::size_t L = z_spat0.dim(0), F = z_spat0.dim(2);
  check(z_spat0.dim(1) == T, "build_delta0: frame counts differ");
  Tensor<double> delta({K, L, T, F});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) {
          const double v = z_spec0(k, t) * z_spat0(l, t, f);
          delta(k, l, t, f) = v;
          s += v;
        }
      if (s > 0.0) {
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t l = 0; l < L; ++l) delta(k, l, t, f) /= s;
      } else {
        const double u = 1.0 / static_cast<double>(K * L);
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t l = 0; l < L; ++l) delta(k, l, t, f) = u;
      }
    }
  }
  return delta;
}

// Initial posterior for the tightly coupled model: the spectral init
// broadcast over frequency.
inline Tensor<double> tight_init_posterior(const Tensor<double>& z_spec0, std::size_t F) {
  check(z_spec0.rank() == 2, "tight_init_posterior: z_spec0 must be [K,T]");
  const std::size_t K = z_spec0.dim(0), T = z_spec0.dim(1);
  Tensor<double> post({K, T, F});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) post(k, t, f) = z_spec0(k, t);
  return post;
}

struct InitPosterior {
  Tensor<double> z_spec0;  // [K,T]
  Tensor<double> z_spat0;  // [L,T,F]
  Tensor<double> delta0;   // [K,L,T,F]
};

inline InitPosterior make_init(const ObservationSet& obs, std::size_t K, std::size_t L,
                               const InitConfig& cfg, const Tensor<double>& log_energy) {
  InitPosterior ip;
  const Tensor<std::uint8_t> speech = energy_vad(log_energy, cfg, obs.stft_config);
  ip.z_spec0 = spectral_init(obs.e, speech, K, cfg);
  ip.z_spat0 = spatial_init(obs, L, cfg);
  ip.delta0 = build_delta0(ip.z_spec0, ip.z_spat0);
  return ip;
}

inline InitPosterior make_oracle_init(const ObservationSet& obs,
                                      const Tensor<std::uint8_t>& activity, std::size_t L,
                                      const InitConfig& cfg) {
  InitPosterior ip;
  ip.z_spec0 = oracle_spectral_init(activity);
  ip.z_spat0 = spatial_init(obs, L, cfg);
  ip.delta0 = build_delta0(ip.z_spec0, ip.z_spat0);
  return ip;
}

inline void save_init(const std::string& path, const InitPosterior& ip) {
  std::vector<ArchiveEntry> entries;
  entries.push_back({"z_spec0", ip.z_spec0});
  entries.push_back({"z_spat0", ip.z_spat0});
  entries.push_back({"delta0", ip.delta0});
  write_archive(path, entries);
}

inline InitPosterior load_init(const std::string& path) {
  const auto entries = read_archive(path);
  InitPosterior ip;
  ip.z_spec0 = require_entry<double>(entries, "z_spec0");
  ip.z_spat0 = require_entry<double>(entries, "z_spat0");
  ip.delta0 = require_entry<double>(entries, "delta0");
  return ip;
}

}  // namespace diasep
