// Scoring: diarization error rate with a boundary collar and optimal speaker
// mapping, best-permutation frame accuracy, scale-invariant SDR, and mask
// divergence against dominance masks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "diasep/postprocess.hpp"
#include "diasep/tensor.hpp"

namespace diasep {

// Minimum-cost assignment (potentials method). cost is n x m with n <= m;
// returns for each row the column it is assigned to.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = n == 0 ? 0 : cost[0].size();
  check(n <= m, "hungarian: need rows <= cols");
  for (const auto& row : cost)
    check(row.size() == m, "hungarian: ragged cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= m; ++j)
        if (!used[j]) {
          const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct DerBreakdown {
  double missed = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double reference_time = 0.0;
  double der = 0.0;
};

namespace detail {

// Merged closed intervals around every reference boundary.
inline std::vector<std::pair<double, double>> collar_regions(const Diarization& ref,
                                                             double collar) {
  std::vector<std::pair<double, double>> regions;
  if (collar <= 0.0) return regions;
  for (const auto& s : ref.segments) {
    regions.push_back({s.start - collar, s.start + collar});
    regions.push_back({s.end - collar, s.end + collar});
  }
  std::sort(regions.begin(), regions.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& r : regions) {
    if (!merged.empty() && r.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, r.second);
    else
      merged.push_back(r);
  }
  return merged;
}

inline bool point_excluded(const std::vector<std::pair<double, double>>& regions, double t) {
  auto it = std::upper_bound(regions.begin(), regions.end(), std::make_pair(t, 0.0),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
  if (it == regions.begin()) return false;
  --it;
  return t < it->second;
}

}  // namespace detail

// Scores hypothesis diarization against the reference. Regions within the
// collar of any reference boundary are excluded from scoring entirely. The
// speaker mapping maximizes scored overlap time (one-to-one).
inline DerBreakdown der_detail(const Diarization& ref, const Diarization& hyp,
                               double collar = 0.25) {
  check(!ref.segments.empty(), "der: empty reference");

  std::map<std::size_t, std::size_t> rid, hid;
  for (const auto& s : ref.segments)
    if (!rid.count(s.speaker)) {
      const std::size_t next = rid.size();
      rid[s.speaker] = next;
    }
  for (const auto& s : hyp.segments)
    if (!hid.count(s.speaker)) {
      const std::size_t next = hid.size();
      hid[s.speaker] = next;
    }
  const std::size_t R = rid.size();
  const std::size_t H = std::max<std::size_t>(hid.size(), 1);

  const auto excluded = detail::collar_regions(ref, collar);
  std::vector<double> times;
  for (const auto& s : ref.segments) {
    times.push_back(s.start);
    times.push_back(s.end);
  }
  for (const auto& s : hyp.segments) {
    times.push_back(s.start);
    times.push_back(s.end);
  }
  for (const auto& r : excluded) {
    times.push_back(r.first);
    times.push_back(r.second);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  // overlap time per (ref, hyp) speaker pair in scored regions
  std::vector<std::vector<double>> overlap(R, std::vector<double>(H, 0.0));
  std::vector<char> ract(R), hact(H);
  const auto fill_active = [&](double mid) {
    std::fill(ract.begin(), ract.end(), 0);
    std::fill(hact.begin(), hact.end(), 0);
    for (const auto& s : ref.segments)
      if (mid >= s.start && mid < s.end) ract[rid[s.speaker]] = 1;
    for (const auto& s : hyp.segments)
      if (mid >= s.start && mid < s.end) hact[hid[s.speaker]] = 1;
  };
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double d = times[i + 1] - times[i];
    if (d <= 0.0) continue;
    const double mid = 0.5 * (times[i] + times[i + 1]);
    if (detail::point_excluded(excluded, mid)) continue;
    fill_active(mid);
    for (std::size_t r = 0; r < R; ++r)
      if (ract[r])
        for (std::size_t h = 0; h < H; ++h)
          if (hact[h]) overlap[r][h] += d;
  }

  // map: maximize overlap == minimize negated overlap; pad to square
  const std::size_t n = std::max(R, H);
  std::vector<std::vector<double>> costm(n, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t h = 0; h < H; ++h) costm[r][h] = -overlap[r][h];
  const auto assign = hungarian(costm);
  std::vector<std::ptrdiff_t> hyp_of_ref(R, -1);
  for (std::size_t r = 0; r < R; ++r)
    if (assign[r] < H) hyp_of_ref[r] = static_cast<std::ptrdiff_t>(assign[r]);

  DerBreakdown out;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double d = times[i + 1] - times[i];
    if (d <= 0.0) continue;
    const double mid = 0.5 * (times[i] + times[i + 1]);
    if (detail::point_excluded(excluded, mid)) continue;
    fill_active(mid);
    std::size_t nr = 0, nh = 0, matched = 0;
    for (std::size_t r = 0; r < R; ++r) nr += ract[r];
    for (std::size_t h = 0; h < H; ++h) nh += hact[h];
    for (std::size_t r = 0; r < R; ++r)
      if (ract[r] && hyp_of_ref[r] >= 0 && hact[static_cast<std::size_t>(hyp_of_ref[r])])
        ++matched;
    out.reference_time += d * static_cast<double>(nr);
    if (nr > nh) out.missed += d * static_cast<double>(nr - nh);
    if (nh > nr) out.false_alarm += d * static_cast<double>(nh - nr);
    const std::size_t overlap_n = std::min(nr, nh);
    if (overlap_n > matched) out.confusion += d * static_cast<double>(overlap_n - matched);
  }
  if (out.reference_time > 0.0)
    out.der = (out.missed + out.false_alarm + out.confusion) / out.reference_time;
  else
    out.der = (out.false_alarm > 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
  return out;
}

inline double der(const Diarization& ref, const Diarization& hyp, double collar = 0.25) {
  return der_detail(ref, hyp, collar).der;
}

// Fraction of matching activity entries under the best row permutation.
// Differing speaker counts are reconciled by padding with silent rows.
inline double frame_accuracy(const Tensor<std::uint8_t>& ref_activity,
                             const Tensor<std::uint8_t>& hyp_activity) {
  check(ref_activity.rank() == 2 && hyp_activity.rank() == 2, "frame_accuracy: need [K,T]");
  check(ref_activity.dim(1) == hyp_activity.dim(1), "frame_accuracy: frame counts differ");
  const std::size_t T = ref_activity.dim(1);
  const std::size_t K = std::max(ref_activity.dim(0), hyp_activity.dim(0));
  if (T == 0 || K == 0) return 1.0;
  const auto at = [&](const Tensor<std::uint8_t>& a, std::size_t k, std::size_t t) {
    return k < a.dim(0) ? (a(k, t) != 0 ? 1 : 0) : 0;
  };
  std::vector<std::vector<double>> costm(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      std::size_t agree = 0;
      for (std::size_t t = 0; t < T; ++t)
        if (at(ref_activity, i, t) == at(hyp_activity, j, t)) ++agree;
      costm[i][j] = static_cast<double>(T - agree);
    }
  const auto assign = hungarian(costm);
  std::size_t agree_total = 0;
  for (std::size_t i = 0; i < K; ++i)
    agree_total += T - static_cast<std::size_t>(costm[i][assign[i]]);
  return static_cast<double>(agree_total) / static_cast<double>(K * T);
}

// 10 log10(|a ref|^2 / |est - a ref|^2) with a = <est,ref>/<ref,ref>, capped
// to [-60, 60] dB.
inline double si_sdr(const Tensor<double>& est, const Tensor<double>& ref) {
  check(est.rank() == 1 && ref.rank() == 1 && est.dim(0) == ref.dim(0),
        "si_sdr: need equal-length vectors");
  const std::size_t n = ref.dim(0);
  double rr = 0.0, er = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rr += ref(i) * ref(i);
    er += est(i) * ref(i);
  }
  check(rr > 0.0, "si_sdr: zero reference");
  const double alpha = er / rr;
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = alpha * ref(i);
    const double e = est(i) - s;
    sig += s * s;
    err += e * e;
  }
  // an estimate holding none of the reference scores the floor, even when the
  // residual is also zero (an all-zero estimate)
  if (sig <= 0.0 || (err > 0.0 && sig / err <= 1e-6)) return -60.0;
  if (err <= 0.0 || sig / err >= 1e6) return 60.0;
  return 10.0 * std::log10(sig / err);
}

// Best-permutation mean absolute error against 0/1 dominance masks, averaged
// over bins where the oracle declares a dominant speaker.
inline double mask_divergence(const Tensor<double>& m, const Tensor<double>& oracle) {
  check(m.rank() == 3 && oracle.rank() == 3, "mask_divergence: need [K,T,F]");
  check(m.dim(0) == oracle.dim(0) && m.dim(1) == oracle.dim(1) && m.dim(2) == oracle.dim(2),
        "mask_divergence: shape mismatch");
  const std::size_t K = m.dim(0), T = m.dim(1), F = m.dim(2);
  if (K == 0) return 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> bins;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      double tot = 0.0;
      for (std::size_t k = 0; k < K; ++k) tot += oracle(k, t, f);
      if (tot > 0.0) bins.push_back({t, f});
    }
  if (bins.empty()) return 0.0;
  std::vector<std::vector<double>> costm(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      double acc = 0.0;
      for (const auto& b : bins) acc += std::abs(m(j, b.first, b.second) - oracle(i, b.first, b.second));
      costm[i][j] = acc;
    }
  const auto assign = hungarian(costm);
  double total = 0.0;
  for (std::size_t i = 0; i < K; ++i) total += costm[i][assign[i]];
  return total / (static_cast<double>(K) * static_cast<double>(bins.size()));
}

}  // namespace diasep
