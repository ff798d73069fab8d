#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "diasep/rng.hpp"
#include "diasep/stft.hpp"

using namespace diasep;

namespace {

StftConfig small_cfg() {
  StftConfig cfg;
  cfg.frame_length = 512;
  cfg.frame_shift = 256;
  cfg.fft_length = 512;
  cfg.sample_rate = 16000.0;
  return cfg;
}

Tensor<double> random_wave(std::size_t S, std::size_t C, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> w({S, C});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal();
  return w;
}

}  // namespace

TEST_CASE("stft framing arithmetic") {
  StftConfig cfg = small_cfg();
  Tensor<double> w({1024, 1});
  const Tensor<cdouble> s = stft(w, cfg);
  CHECK(s.dim(0) == 3);    // T = 1 + (1024-512)/256
  CHECK(s.dim(1) == 257);  // F = 512/2 + 1
  CHECK(s.dim(2) == 1);
  CHECK_THROWS_WITH(stft(Tensor<double>({100, 1}), cfg),
                    Catch::Matchers::ContainsSubstring("shorter than one frame"));
}

TEST_CASE("stft of zero input is zero") {
  const Tensor<cdouble> s = stft(Tensor<double>({2048, 2}), small_cfg());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == cdouble(0.0, 0.0));
}

TEST_CASE("bin-centered sinusoid concentrates in one bin under a rectangular window") {
  StftConfig cfg = small_cfg();
  cfg.window = "rect";
  const std::size_t bin = 37;
  const std::size_t S = cfg.frame_length;
  Tensor<double> w({S, 1});
  for (std::size_t n = 0; n < S; ++n)
    w(n, 0) = std::cos(2.0 * M_PI * static_cast<double>(bin) * static_cast<double>(n) /
                       static_cast<double>(cfg.fft_length));
  const Tensor<cdouble> s = stft(w, cfg);
  const double peak = std::abs(s(0, bin, 0));
  REQUIRE(peak > 0.0);
  for (std::size_t f = 0; f < cfg.bins(); ++f) {
    if (f == bin) continue;
    CHECK(std::abs(s(0, f, 0)) <= 1e-8 * peak);
  }
}

TEST_CASE("istft reconstructs the interior of random signals") {
  StftConfig cfg = small_cfg();  // hann, 50% overlap
  cfg.frame_shift = cfg.frame_length / 2;
  const std::size_t S = 8192;
  const Tensor<double> w = random_wave(S, 2, 99);
  const Tensor<double> r = istft(stft(w, cfg), cfg);
  REQUIRE(r.dim(0) >= S - cfg.frame_shift);
  double max_rel = 0.0;
  for (std::size_t s = cfg.frame_length; s + cfg.frame_length < S; ++s)
    for (std::size_t c = 0; c < 2; ++c)
      max_rel = std::max(max_rel, std::abs(r(s, c) - w(s, c)) / std::max(1.0, std::abs(w(s, c))));
  CHECK(max_rel < 1e-8);
}

TEST_CASE("istft of an all-zero spectrum is silence") {
  StftConfig cfg = small_cfg();
  Tensor<cdouble> spec({4, cfg.bins(), 1});
  const Tensor<double> r = istft(spec, cfg);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == 0.0);
}

TEST_CASE("istft of a single frame returns the windowed frame over the overlap constant") {
  StftConfig cfg = small_cfg();
  const Tensor<double> w = random_wave(cfg.frame_length, 1, 3);
  const Tensor<double> r = istft(stft(w, cfg), cfg);
  REQUIRE(r.dim(0) == cfg.frame_length);
  const std::vector<double> win = cfg.make_window();
  const double c0 = cfg.cola_constant();
  for (std::size_t n = 0; n < cfg.frame_length; ++n)
    CHECK_THAT(r(n, 0), Catch::Matchers::WithinAbs(w(n, 0) * win[n] / c0, 1e-12));
}

TEST_CASE("istft rejects a window/shift pair violating constant overlap-add") {
  StftConfig cfg = small_cfg();
  cfg.frame_shift = 384;  // hann at 3/4 shift does not satisfy COLA
  Tensor<cdouble> spec({3, cfg.bins(), 1});
  CHECK_THROWS_WITH(istft(spec, cfg), Catch::Matchers::ContainsSubstring("overlap-add"));
}

TEST_CASE("stft is linear") {
  StftConfig cfg = small_cfg();
  const Tensor<double> x = random_wave(2048, 1, 1);
  const Tensor<double> z = random_wave(2048, 1, 2);
  const double a = 1.7, b = -0.4;
  Tensor<double> mix({2048, 1});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * z[i];
  const Tensor<cdouble> sx = stft(x, cfg), sz = stft(z, cfg), sm = stft(mix, cfg);
  double max_abs = 0.0, max_err = 0.0;
  for (std::size_t i = 0; i < sm.size(); ++i) {
    max_abs = std::max(max_abs, std::abs(sm[i]));
    max_err = std::max(max_err, std::abs(sm[i] - (a * sx[i] + b * sz[i])));
  }
  CHECK(max_err <= 1e-10 * max_abs);
}

TEST_CASE("two-sided spectrum energy matches windowed frame energy") {
  StftConfig cfg = small_cfg();
  const Tensor<double> w = random_wave(cfg.frame_length, 1, 8);
  const Tensor<cdouble> s = stft(w, cfg);
  const std::vector<double> win = cfg.make_window();
  double time_energy = 0.0;
  for (std::size_t n = 0; n < cfg.frame_length; ++n) {
    const double v = w(n, 0) * win[n];
    time_energy += v * v;
  }
  // one-sided spectrum: interior bins count twice in the two-sided sum
  double freq_energy = 0.0;
  for (std::size_t f = 0; f < cfg.bins(); ++f) {
    const double m2 = std::norm(s(0, f, 0));
    const bool edge = f == 0 || f == cfg.bins() - 1;
    freq_energy += edge ? m2 : 2.0 * m2;
  }
  freq_energy /= static_cast<double>(cfg.fft_length);
  CHECK_THAT(freq_energy / time_energy, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("frame energy floors silence at -30 relative to the peak") {
  StftConfig cfg = small_cfg();
  Tensor<double> w({cfg.frame_length * 4, 1});
  for (std::size_t n = 0; n < cfg.frame_length; ++n) w(n, 0) = 1.0;
  const Tensor<double> le = frame_log_energy(w, cfg);
  const double top = *std::max_element(le.data(), le.data() + le.size());
  for (std::size_t t = 0; t < le.dim(0); ++t) CHECK(le(t) >= top - 30.0 - 1e-12);
  CHECK(le(le.dim(0) - 1) == top - 30.0);
}

TEST_CASE("all-zero waveform maps to the constant energy floor") {
  const Tensor<double> le = frame_log_energy(Tensor<double>({2048, 1}), small_cfg());
  for (std::size_t t = 0; t < le.dim(0); ++t) CHECK(le(t) == -30.0);
}

TEST_CASE("doubling amplitude shifts log energy by log 4") {
  StftConfig cfg = small_cfg();
  const Tensor<double> w = random_wave(4096, 1, 21);
  Tensor<double> w2({4096, 1});
  for (std::size_t i = 0; i < w.size(); ++i) w2[i] = 2.0 * w[i];
  const Tensor<double> a = frame_log_energy(w, cfg);
  const Tensor<double> b = frame_log_energy(w2, cfg);
  for (std::size_t t = 0; t < a.dim(0); ++t)
    CHECK_THAT(b(t) - a(t), Catch::Matchers::WithinAbs(std::log(4.0), 1e-9));
}

TEST_CASE("impulse lands in the frame containing its sample") {
  StftConfig cfg = small_cfg();
  Tensor<double> w({cfg.frame_length + 7 * cfg.frame_shift, 1});
  const std::size_t hit = cfg.frame_length + 5 * cfg.frame_shift - 1;
  w(hit, 0) = 1.0;
  const Tensor<double> le = frame_log_energy(w, cfg);
  std::size_t argmax = 0;
  for (std::size_t t = 1; t < le.dim(0); ++t)
    if (le(t) > le(argmax)) argmax = t;
  // frames overlap, so several contain the sample; the argmax must be one
  const std::size_t lo = (hit >= cfg.frame_length ? hit - cfg.frame_length + 1 : 0);
  CHECK(argmax * cfg.frame_shift >= lo);
  CHECK(argmax * cfg.frame_shift <= hit);
}
