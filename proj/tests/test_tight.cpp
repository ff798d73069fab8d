#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "diasep/rng.hpp"
#include "diasep/tight.hpp"

#include "helpers.hpp"

using namespace diasep;

TEST_CASE("shared-activity posterior matches direct per-bin Bayes computation") {
  Rng rng(201);
  const std::size_t K = 3, T = 6, F = 4, C = 3, D = 5;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const TightState st = testutil::random_tight_state(K, T, F, C, D, rng);

  const TightEStep e = tight_e_step(obs, st);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      std::vector<double> joint(K);
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        Eigen::VectorXcd y(C);
        for (std::size_t c = 0; c < C; ++c) y(c) = obs.y(t, f, c);
        const Eigen::MatrixXcd B = st.cacg.matrix(k, f);
        const double spatial = cacg_log_normalizer(C) -
                               std::log(std::abs(B.determinant())) -
                               double(C) * std::log(std::real(y.dot(B.inverse() * y)));
        const double spectral = vmf_log_pdf(&obs.e(t, 0), &st.vmf.mu(k, 0), D, st.vmf.kappa(k));
        joint[k] = st.pi(k, t) * std::exp(spectral + spatial);
        total += joint[k];
      }
      for (std::size_t k = 0; k < K; ++k)
        CHECK_THAT(e.posterior(k, t, f), Catch::Matchers::WithinAbs(joint[k] / total, 1e-12));
    }
}

TEST_CASE("single-speaker posterior is identically one") {
  Rng rng(203);
  const std::size_t T = 5, F = 3, C = 2, D = 4;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  Tensor<double> init({1, T, F});
  init.fill(1.0);
  const TightState st = tight_fit(obs, init, 3);
  for (std::size_t i = 0; i < st.posterior.size(); ++i)
    CHECK_THAT(st.posterior[i], Catch::Matchers::WithinAbs(1.0, 1e-12));
  for (const double ll : st.loglik) CHECK(std::isfinite(ll));
}

TEST_CASE("zero-iteration fit performs only the initial update") {
  Rng rng(207);
  const std::size_t K = 2, T = 7, F = 4, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const Tensor<double> init = testutil::random_posterior0(K, T, F, rng);
  const TightState st = tight_fit(obs, init, 0);
  CHECK(st.loglik.empty());
  for (std::size_t i = 0; i < init.size(); ++i) CHECK(st.posterior[i] == init[i]);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t f = 0; f < F; ++f) s += init(k, t, f);
      CHECK_THAT(st.pi(k, t), Catch::Matchers::WithinAbs(s / double(F), 1e-15));
    }
}

TEST_CASE("speaker prior is the frequency average of the shared posterior") {
  Rng rng(211);
  const std::size_t K = 3, T = 5, F = 6, C = 2, D = 4;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  TightState st = testutil::random_tight_state(K, T, F, C, D, rng);
  const Tensor<double> post = testutil::random_posterior0(K, T, F, rng);
  tight_m_step(obs, post, st);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t f = 0; f < F; ++f) s += post(k, t, f);
      CHECK_THAT(st.pi(k, t), Catch::Matchers::WithinAbs(s / double(F), 1e-15));
    }
}

TEST_CASE("shared-activity fitting never decreases the log-likelihood") {
  Rng rng(213);
  const std::size_t K = 2, T = 30, F = 8, C = 3, D = 6;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const Tensor<double> init = testutil::random_posterior0(K, T, F, rng);
  const TightState st = tight_fit(obs, init, 10);
  REQUIRE(st.loglik.size() == 10);
  for (std::size_t i = 1; i < st.loglik.size(); ++i)
    CHECK(st.loglik[i] >= st.loglik[i - 1] - 1e-9 * std::abs(st.loglik[i - 1]));
}

TEST_CASE("fit rejects an unnormalized starting posterior") {
  Rng rng(217);
  const std::size_t K = 2, T = 4, F = 3, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  Tensor<double> bad({K, T, F});
  bad.fill(0.7);
  CHECK_THROWS(tight_fit(obs, bad, 1));
}
