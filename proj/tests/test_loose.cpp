#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "diasep/loose.hpp"
#include "diasep/rng.hpp"

#include "helpers.hpp"

using namespace diasep;

namespace {

// Brute-force reference: enumerate the joint assignment (speaker k, one
// spatial label per frequency) and accumulate exact posterior marginals.
struct Enumerated {
  Tensor<double> gamma;  // [K,T]
  Tensor<double> eta;    // [L,T,F]
  Tensor<double> delta;  // [K,L,T,F]
  double loglik = 0.0;
};

double spatial_logp(const ObservationSet& obs, const LooseState& st, std::size_t l,
                    std::size_t t, std::size_t f) {
  const std::size_t C = obs.C();
  Eigen::VectorXcd y(C);
  for (std::size_t c = 0; c < C; ++c) y(c) = obs.y(t, f, c);
  const Eigen::MatrixXcd B = st.cacg.matrix(l, f);
  return cacg_log_normalizer(C) - std::log(std::abs(B.determinant())) -
         double(C) * std::log(std::real(y.dot(B.inverse() * y)));
}

Enumerated enumerate_posterior(const ObservationSet& obs, const LooseState& st) {
  const std::size_t T = obs.T(), F = obs.F(), K = st.K(), L = st.L(), D = obs.D();
  Enumerated out{Tensor<double>({K, T}), Tensor<double>({L, T, F}),
                 Tensor<double>({K, L, T, F}), 0.0};
  out.gamma.fill(0.0);
  out.eta.fill(0.0);
  out.delta.fill(0.0);

  std::size_t n_cfg = 1;
  for (std::size_t f = 0; f < F; ++f) n_cfg *= L;

  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> logw;
    std::vector<std::vector<std::size_t>> labels;
    logw.reserve(K * n_cfg);
    for (std::size_t k = 0; k < K; ++k) {
      const double head = std::log(st.pi(k)) +
                          vmf_log_pdf(&obs.e(t, 0), &st.vmf.mu(k, 0), D, st.vmf.kappa(k));
      for (std::size_t cfg = 0; cfg < n_cfg; ++cfg) {
        std::vector<std::size_t> ls(F);
        std::size_t rem = cfg;
        double lw = head;
        for (std::size_t f = 0; f < F; ++f) {
          ls[f] = rem % L;
          rem /= L;
          lw += std::log(st.alpha(k, ls[f], f)) + spatial_logp(obs, st, ls[f], t, f);
        }
        logw.push_back(lw);
        labels.push_back(std::move(ls));
      }
    }
    const double lse = detail::logsumexp(logw.data(), logw.size());
    out.loglik += lse;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t cfg = 0; cfg < n_cfg; ++cfg) {
        const std::size_t idx = k * n_cfg + cfg;
        const double p = std::exp(logw[idx] - lse);
        out.gamma(k, t) += p;
        for (std::size_t f = 0; f < F; ++f) {
          out.delta(k, labels[idx][f], t, f) += p;
          out.eta(labels[idx][f], t, f) += p;
        }
      }
  }
  return out;
}

}  // namespace

TEST_CASE("factorized posterior matches exhaustive enumeration") {
  Rng rng(301);
  const std::size_t K = 2, L = 3, T = 3, F = 2, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);

  const LooseEStep e = loose_e_step(obs, st, true);
  const Enumerated want = enumerate_posterior(obs, st);

  for (std::size_t i = 0; i < want.gamma.size(); ++i)
    CHECK_THAT(e.gamma[i], Catch::Matchers::WithinAbs(want.gamma[i], 1e-10));
  for (std::size_t i = 0; i < want.eta.size(); ++i)
    CHECK_THAT(e.eta[i], Catch::Matchers::WithinAbs(want.eta[i], 1e-10));
  for (std::size_t i = 0; i < want.delta.size(); ++i)
    CHECK_THAT(e.delta[i], Catch::Matchers::WithinAbs(want.delta[i], 1e-10));
  CHECK_THAT(e.loglik,
             Catch::Matchers::WithinAbs(want.loglik, 1e-10 * std::max(1.0, std::abs(want.loglik))));
}

TEST_CASE("spatial marginals of the joint posterior reproduce speaker activity") {
  Rng rng(307);
  const std::size_t K = 3, L = 4, T = 10, F = 6, C = 3, D = 5;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);
  const LooseEStep e = loose_e_step(obs, st, true);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        double s = 0.0;
        for (std::size_t l = 0; l < L; ++l) s += e.delta(k, l, t, f);
        CHECK_THAT(s, Catch::Matchers::WithinAbs(e.gamma(k, t), 1e-10));
      }
}

TEST_CASE("all posterior quantities are normalized") {
  Rng rng(311);
  const std::size_t K = 2, L = 5, T = 12, F = 7, C = 2, D = 4;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);
  const LooseEStep e = loose_e_step(obs, st, true);

  for (std::size_t t = 0; t < T; ++t) {
    double g = 0.0;
    for (std::size_t k = 0; k < K; ++k) g += e.gamma(k, t);
    CHECK_THAT(g, Catch::Matchers::WithinAbs(1.0, 1e-9));
    for (std::size_t f = 0; f < F; ++f) {
      double h = 0.0, d = 0.0;
      for (std::size_t l = 0; l < L; ++l) h += e.eta(l, t, f);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) d += e.delta(k, l, t, f);
      CHECK_THAT(h, Catch::Matchers::WithinAbs(1.0, 1e-9));
      CHECK_THAT(d, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
  }

  loose_m_step_stats(obs, e, st);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      double a = 0.0;
      for (std::size_t l = 0; l < L; ++l) a += st.alpha(k, l, f);
      CHECK_THAT(a, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("statistics-based and joint-posterior updates agree on exact posteriors") {
  Rng rng(313);
  const std::size_t K = 2, L = 3, T = 9, F = 5, C = 2, D = 4;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const LooseState base = testutil::random_loose_state(K, L, F, C, D, rng);
  const LooseEStep e = loose_e_step(obs, base, true);

  LooseState a = base, b = base;
  loose_m_step_stats(obs, e, a);
  loose_m_step(obs, e.delta, e.gamma, e.eta, b, &e.quad);
  for (std::size_t i = 0; i < a.alpha.size(); ++i)
    CHECK_THAT(a.alpha[i], Catch::Matchers::WithinAbs(b.alpha[i], 1e-12));
  for (std::size_t i = 0; i < a.pi.size(); ++i)
    CHECK_THAT(a.pi[i], Catch::Matchers::WithinAbs(b.pi[i], 1e-15));
}

TEST_CASE("reported log-likelihood equals the factored marginal") {
  Rng rng(317);
  const std::size_t K = 2, L = 3, T = 6, F = 4, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);
  double want = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double tot = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double prod = st.pi(k) * std::exp(vmf_log_pdf(&obs.e(t, 0), &st.vmf.mu(k, 0), D,
                                                    st.vmf.kappa(k)));
      for (std::size_t f = 0; f < F; ++f) {
        double s = 0.0;
        for (std::size_t l = 0; l < L; ++l)
          s += st.alpha(k, l, f) * std::exp(spatial_logp(obs, st, l, t, f));
        prod *= s;
      }
      tot += prod;
    }
    want += std::log(tot);
  }
  const double got = loose_loglik(obs, st);
  CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-10 * std::max(1.0, std::abs(want))));
}

TEST_CASE("loosely coupled fitting never decreases the log-likelihood") {
  Rng rng(331);
  const std::size_t K = 2, L = 4, T = 25, F = 8, C = 3, D = 6;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const Tensor<double> delta0 = testutil::random_delta0(K, L, T, F, rng);
  const LooseState st = loose_fit(obs, delta0, 10);
  REQUIRE(st.loglik.size() == 10);
  for (std::size_t i = 1; i < st.loglik.size(); ++i)
    CHECK(st.loglik[i] >= st.loglik[i - 1] - 1e-9 * std::abs(st.loglik[i - 1]));
  REQUIRE(st.delta.rank() == 4);  // final E-step materializes the joint posterior
  CHECK(st.delta.dim(0) == K);
}

TEST_CASE("zero-iteration fit preserves the starting posterior") {
  Rng rng(337);
  const std::size_t K = 2, L = 3, T = 5, F = 4, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const Tensor<double> delta0 = testutil::random_delta0(K, L, T, F, rng);
  const LooseState st = loose_fit(obs, delta0, 0);
  CHECK(st.loglik.empty());
  for (std::size_t i = 0; i < delta0.size(); ++i) CHECK(st.delta[i] == delta0[i]);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t f = 0; f < F; ++f) s += delta0(k, l, t, f);
      CHECK_THAT(st.gamma(k, t), Catch::Matchers::WithinAbs(s / double(F), 1e-12));
    }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      double a = 0.0;
      for (std::size_t l = 0; l < L; ++l) a += st.alpha(k, l, f);
      CHECK_THAT(a, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("single-speaker activity is certain and spatial labels follow coupling") {
  Rng rng(341);
  const std::size_t K = 1, L = 3, T = 6, F = 4, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);
  const LooseEStep e = loose_e_step(obs, st);
  for (std::size_t t = 0; t < T; ++t) {
    CHECK_THAT(e.gamma(0, t), Catch::Matchers::WithinAbs(1.0, 1e-12));
    for (std::size_t f = 0; f < F; ++f) {
      double s = 0.0;
      std::vector<double> w(L);
      for (std::size_t l = 0; l < L; ++l) {
        w[l] = st.alpha(0, l, f) * std::exp(spatial_logp(obs, st, l, t, f));
        s += w[l];
      }
      for (std::size_t l = 0; l < L; ++l)
        CHECK_THAT(e.eta(l, t, f), Catch::Matchers::WithinAbs(w[l] / s, 1e-10));
    }
  }
}

TEST_CASE("coupling rows with no posterior mass reset to uniform") {
  Rng rng(347);
  const std::size_t K = 2, L = 3, T = 4, F = 3, C = 2, D = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);
  Tensor<double> delta({K, L, T, F}), gamma({K, T}), eta({L, T, F});
  delta.fill(0.0);
  gamma.fill(0.0);
  eta.fill(0.0);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t) {
      gamma(0, t) = 1.0;
      for (std::size_t f = 0; f < F; ++f) {
        delta(0, l, t, f) = 1.0 / double(L);
        eta(l, t, f) = 1.0 / double(L);
      }
    }
  loose_m_step(obs, delta, gamma, eta, st);
  CHECK(st.alpha_reset);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t f = 0; f < F; ++f)
      CHECK_THAT(st.alpha(1, l, f), Catch::Matchers::WithinAbs(1.0 / double(L), 1e-15));
}

TEST_CASE("posterior computation is equivariant under speaker relabeling") {
  Rng rng(353);
  const std::size_t K = 3, L = 3, T = 5, F = 4, C = 2, D = 4;
  const ObservationSet obs = testutil::random_obs(T, F, C, D, rng);
  const LooseState st = testutil::random_loose_state(K, L, F, C, D, rng);

  const std::size_t perm[3] = {1, 2, 0};
  LooseState pst = st;
  for (std::size_t k = 0; k < K; ++k) {
    pst.pi(perm[k]) = st.pi(k);
    pst.vmf.kappa(perm[k]) = st.vmf.kappa(k);
    for (std::size_t d = 0; d < D; ++d) pst.vmf.mu(perm[k], d) = st.vmf.mu(k, d);
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t f = 0; f < F; ++f) pst.alpha(perm[k], l, f) = st.alpha(k, l, f);
  }
  const LooseEStep a = loose_e_step(obs, st, true);
  const LooseEStep b = loose_e_step(obs, pst, true);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      CHECK_THAT(b.gamma(perm[k], t), Catch::Matchers::WithinAbs(a.gamma(k, t), 1e-13));
  for (std::size_t i = 0; i < a.eta.size(); ++i)
    CHECK_THAT(b.eta[i], Catch::Matchers::WithinAbs(a.eta[i], 1e-12));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          CHECK_THAT(b.delta(perm[k], l, t, f),
                     Catch::Matchers::WithinAbs(a.delta(k, l, t, f), 1e-13));
}
