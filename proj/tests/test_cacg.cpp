#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "diasep/cacg.hpp"
#include "diasep/observation.hpp"
#include "diasep/rng.hpp"

#include "helpers.hpp"

using namespace diasep;

namespace {

Eigen::VectorXcd unit_vector(std::size_t C, Rng& rng) {
  Eigen::VectorXcd v(C);
  for (std::size_t c = 0; c < C; ++c) v(c) = rng.cnormal();
  return v / v.norm();
}

}  // namespace

TEST_CASE("cacg density at the identity matches the closed form") {
  // C=2, B=I: log p = lgamma(2) - log 2 - 2 log pi, independent of y
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Identity(2, 2);
  Eigen::VectorXcd y(2);
  y << cdouble(1.0, 0.0), cdouble(0.0, 0.0);
  CHECK_THAT(cacg_log_pdf(y, B),
             Catch::Matchers::WithinAbs(-2.9826069522587457, 1e-12));
  Rng rng(5);
  CHECK_THAT(cacg_log_pdf(unit_vector(2, rng), B),
             Catch::Matchers::WithinAbs(-2.9826069522587457, 1e-12));
}

TEST_CASE("cacg density agrees with the explicit determinant formula") {
  Rng rng(17);
  for (std::size_t C : {2u, 3u, 5u}) {
    const Eigen::MatrixXcd M = testutil::random_spd(C, rng);
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXcd y = unit_vector(C, rng);
      const double quad = std::real(y.dot(M.inverse() * y));
      const double want = std::lgamma(static_cast<double>(C)) - std::log(2.0) -
                          static_cast<double>(C) * std::log(M_PI) -
                          std::log(std::abs(M.determinant())) -
                          static_cast<double>(C) * std::log(quad);
      CHECK_THAT(cacg_log_pdf(y, M), Catch::Matchers::WithinAbs(want, 1e-10));
    }
  }
}

TEST_CASE("cacg density integrates to one over the complex sphere") {
  Rng rng(31);
  const std::size_t C = 2, n = 200000;
  const Eigen::MatrixXcd B = testutil::random_spd(C, rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(cacg_log_pdf(unit_vector(C, rng), B));
  // uniform-sphere estimator: mean density times surface area 2 pi^C / (C-1)!
  const double integral = acc / static_cast<double>(n) * 2.0 * M_PI * M_PI;
  CHECK_THAT(integral, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("cacg density is invariant to a global phase") {
  Rng rng(41);
  const std::size_t C = 4;
  const Eigen::MatrixXcd B = testutil::random_spd(C, rng);
  for (double phase : {0.3, 1.7, -2.2}) {
    const Eigen::VectorXcd y = unit_vector(C, rng);
    const Eigen::VectorXcd yp = y * std::exp(cdouble(0.0, phase));
    CHECK_THAT(cacg_log_pdf(yp, B), Catch::Matchers::WithinAbs(cacg_log_pdf(y, B), 1e-10));
  }
}

TEST_CASE("field evaluation is invariant to raw-spectrum scaling and phase") {
  Rng rng(43);
  const std::size_t T = 6, F = 4, C = 3, D = 5;
  Tensor<cdouble> raw({T, F, C});
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = rng.cnormal();
  Tensor<cdouble> scaled = raw;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      const cdouble rot = 37.5 * std::exp(cdouble(0.0, 0.1 * double(t) + 0.7 * double(f)));
      for (std::size_t c = 0; c < C; ++c) scaled(t, f, c) *= rot;
    }
  const Tensor<double> emb = testutil::random_unit_rows(T, D, rng);
  const ObservationSet a = make_observation_set(raw, emb, StftConfig{});
  const ObservationSet b = make_observation_set(scaled, emb, StftConfig{});
  CacgParams p = testutil::random_cacg(2, F, C, rng);
  const CacgLik la = cacg_log_pdf_field(a.y, p);
  const CacgLik lb = cacg_log_pdf_field(b.y, p);
  for (std::size_t i = 0; i < la.logp.size(); ++i)
    CHECK_THAT(lb.logp[i], Catch::Matchers::WithinAbs(la.logp[i], 1e-10));
}

TEST_CASE("field evaluation matches the scalar density and flags nothing by default") {
  Rng rng(47);
  const std::size_t T = 5, F = 3, C = 3, L = 2;
  const ObservationSet obs = testutil::random_obs(T, F, C, 4, rng);
  CacgParams p = testutil::random_cacg(L, F, C, rng);
  const CacgLik lik = cacg_log_pdf_field(obs.y, p);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        Eigen::VectorXcd y(C);
        for (std::size_t c = 0; c < C; ++c) y(c) = obs.y(t, f, c);
        CHECK_THAT(lik.logp(l, t, f),
                   Catch::Matchers::WithinAbs(cacg_log_pdf(y, p.matrix(l, f)), 1e-12));
        const double quad_want =
            std::real(y.dot(p.matrix(l, f).llt().solve(y)));
        CHECK_THAT(lik.quad(l, t, f), Catch::Matchers::WithinAbs(quad_want, 1e-10));
      }
}

TEST_CASE("degenerate bins carry zero log-density for every component") {
  Rng rng(53);
  const std::size_t T = 4, F = 3, C = 2, L = 3;
  const ObservationSet obs = testutil::random_obs(T, F, C, 4, rng);
  Tensor<std::uint8_t> degenerate({T, F});
  degenerate.fill(0);
  degenerate(1, 2) = 1;
  degenerate(3, 0) = 1;
  CacgParams p = testutil::random_cacg(L, F, C, rng);
  const CacgLik with = cacg_log_pdf_field(obs.y, p, &degenerate);
  const CacgLik without = cacg_log_pdf_field(obs.y, p);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        if (degenerate(t, f)) {
          CHECK(with.logp(l, t, f) == 0.0);
        } else {
          CHECK(with.logp(l, t, f) == without.logp(l, t, f));
        }
      }
}

TEST_CASE("m-step keeps shape parameters hermitian with trace equal to channels") {
  Rng rng(59);
  const std::size_t T = 40, F = 3, C = 4, L = 2;
  const ObservationSet obs = testutil::random_obs(T, F, C, 4, rng);
  Tensor<double> eta({T, F, L});
  testutil::random_simplex_fill(eta, L, rng);
  const CacgParams fitted = cacg_m_step(obs.y, eta, CacgParams::identity(L, F, C));
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t f = 0; f < F; ++f) {
      const Eigen::MatrixXcd B = fitted.matrix(l, f);
      CHECK((B - B.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK_THAT(B.trace().real(), Catch::Matchers::WithinAbs(double(C), 1e-10));
      CHECK_THAT(B.trace().imag(), Catch::Matchers::WithinAbs(0.0, 1e-12));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(B);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("m-step floors the spectrum of rank-deficient accumulations") {
  Rng rng(61);
  const std::size_t T = 64, F = 1, C = 3, L = 1;
  const Eigen::VectorXcd d = unit_vector(C, rng);
  Tensor<cdouble> y({T, F, C});
  for (std::size_t t = 0; t < T; ++t) {
    const cdouble rot = std::exp(cdouble(0.0, rng.uniform() * 6.28));
    for (std::size_t c = 0; c < C; ++c) y(t, 0, c) = d(c) * rot;
  }
  Tensor<double> eta({T, F, L});
  eta.fill(1.0);
  const CacgParams fitted = cacg_m_step(y, eta, CacgParams::identity(L, F, C));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(fitted.matrix(0, 0));
  const double lo = es.eigenvalues().minCoeff();
  CHECK(lo >= 0.9 * 1e-6);
  CHECK(lo <= 1.1 * 1e-6 * double(C));
}

TEST_CASE("repeated m-step sweeps recover a fixed steering direction") {
  Rng rng(67);
  const std::size_t T = 200, F = 3, C = 4, L = 1;
  std::vector<Eigen::VectorXcd> d;
  for (std::size_t f = 0; f < F; ++f) d.push_back(unit_vector(C, rng));
  Tensor<cdouble> y({T, F, C});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      const cdouble rot = std::exp(cdouble(0.0, rng.uniform() * 6.28));
      for (std::size_t c = 0; c < C; ++c) y(t, f, c) = d[f](c) * rot;
    }
  Tensor<double> eta({T, F, L});
  eta.fill(1.0);
  CacgParams p = CacgParams::identity(L, F, C);
  for (int sweep = 0; sweep < 30; ++sweep) p = cacg_m_step(y, eta, p);
  for (std::size_t f = 0; f < F; ++f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p.matrix(0, f));
    const Eigen::VectorXcd v = es.eigenvectors().col(C - 1);  // largest eigenvalue
    CHECK(std::abs(v.dot(d[f])) > 0.99);
  }
}

TEST_CASE("m-step via cached quadratic forms matches recomputation") {
  Rng rng(71);
  const std::size_t T = 25, F = 4, C = 3, L = 2;
  const ObservationSet obs = testutil::random_obs(T, F, C, 4, rng);
  Tensor<double> eta({T, F, L});
  testutil::random_simplex_fill(eta, L, rng);
  CacgParams prev = testutil::random_cacg(L, F, C, rng);
  const Tensor<double> quad = cacg_log_pdf_field(obs.y, prev).quad;
  const CacgParams a = cacg_m_step(obs.y, eta, prev, &quad);
  const CacgParams b = cacg_m_step(obs.y, eta, prev);
  REQUIRE(a.B.size() == b.B.size());
  for (std::size_t i = 0; i < a.B.size(); ++i) CHECK(a.B[i] == b.B[i]);
}

TEST_CASE("m-step freezes components with vanishing weight") {
  Rng rng(73);
  const std::size_t T = 20, F = 2, C = 3, L = 2;
  const ObservationSet obs = testutil::random_obs(T, F, C, 4, rng);
  Tensor<double> eta({T, F, L});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      eta(t, f, 0) = 1.0;
      eta(t, f, 1) = 0.0;
    }
  CacgParams prev = testutil::random_cacg(L, F, C, rng);
  const CacgParams fitted = cacg_m_step(obs.y, eta, prev);
  for (std::size_t f = 0; f < F; ++f) {
    CHECK(fitted.dormant(1, f) == 1);
    CHECK(fitted.dormant(0, f) == 0);
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t j = 0; j < C; ++j) CHECK(fitted.B(1, f, i, j) == prev.B(1, f, i, j));
  }
}

TEST_CASE("m-step rejects negative weights and mismatched shapes") {
  Rng rng(79);
  const std::size_t T = 5, F = 2, C = 2, L = 2;
  const ObservationSet obs = testutil::random_obs(T, F, C, 3, rng);
  Tensor<double> eta({T, F, L});
  eta.fill(0.5);
  eta(1, 1, 0) = -0.01;
  CHECK_THROWS(cacg_m_step(obs.y, eta, CacgParams::identity(L, F, C)));
  Tensor<double> wrong({T, F + 1, L});
  wrong.fill(0.5);
  CHECK_THROWS(cacg_m_step(obs.y, wrong, CacgParams::identity(L, F, C)));
}
