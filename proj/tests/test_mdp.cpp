#include "doctest.h"

#include "explore/environments.hpp"
#include "explore/errors.hpp"
#include "explore/mdp.hpp"
#include "support.hpp"

#include <cmath>

using namespace explore;
using namespace testing_support;

namespace {

Matrix two_state(double a, double b) {
  Matrix p(2, 2);
  p << 1 - a, a, b, 1 - b;
  return p;
}

// TV distance of the worst deterministic start after t steps, computed directly.
double worst_tv(const Matrix& p, const Vector& d, int t) {
  Matrix pt = Matrix::Identity(p.rows(), p.cols());
  for (int k = 0; k < t; ++k) pt = pt * p;
  double worst = 0.0;
  for (int s = 0; s < p.rows(); ++s) worst = std::max(worst, 0.5 * (pt.row(s).transpose() - d).cwiseAbs().sum());
  return worst;
}

}  // namespace

TEST_CASE("tabular mdp rejects rows that are not distributions") {
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.7, 0.2;
  CHECK_THROWS_AS(TabularMdp(2, 1, p, Vector::Constant(2, 0.5)), InvalidDistributionError);
  p << 0.5, 0.5, 1.2, -0.2;
  CHECK_THROWS_AS(TabularMdp(2, 1, p, Vector::Constant(2, 0.5)), InvalidDistributionError);
  p << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(TabularMdp(2, 1, p, Vector::Constant(2, 0.4)), InvalidDistributionError);
  CHECK_THROWS_AS(TabularMdp(2, 2, p, Vector::Constant(2, 0.5)), ShapeError);
  CHECK_NOTHROW(TabularMdp(2, 1, p, Vector::Constant(2, 0.5)));
}

TEST_CASE("policy table validation and helpers") {
  Matrix bad(1, 2);
  bad << 0.6, 0.6;
  CHECK_THROWS_AS(PolicyTable{bad}, InvalidDistributionError);
  const PolicyTable u = PolicyTable::uniform(3, 4);
  CHECK(u(2, 3) == doctest::Approx(0.25));
  const PolicyTable det = PolicyTable::deterministic({1, 0, 1}, 2);
  CHECK(det(0, 1) == 1.0);
  CHECK(det(1, 0) == 1.0);
  CHECK(det.min_prob() == 0.0);
  CHECK(PolicyTable::uniform(3, 2).max_abs_diff(det) == doctest::Approx(0.5));
}

TEST_CASE("induce_chain combines action slices") {
  Rng rng(3);
  SUBCASE("identical dynamics under the uniform policy") {
    const Matrix shared = random_stochastic(4, 4, rng);
    Matrix p(8, 4);
    for (int s = 0; s < 4; ++s) p.row(2 * s) = p.row(2 * s + 1) = shared.row(s);
    const TabularMdp mdp(4, 2, p, Vector::Constant(4, 0.25));
    CHECK((induce_chain(mdp, PolicyTable::uniform(4, 2)).matrix() - shared).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("deterministic action 0 selects the slice") {
    const TabularMdp mdp = random_tabular(5, 3, rng);
    const Matrix chain = induce_chain(mdp, PolicyTable::deterministic({0, 0, 0, 0, 0}, 3)).matrix();
    for (int s = 0; s < 5; ++s) CHECK((chain.row(s) - mdp.row(s, 0)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single chain climbing policy, by explicit contraction") {
    const EnvSpec env = single_chain();
    const PolicyTable up = PolicyTable::deterministic(std::vector<int>(10, 0), 2);
    const Matrix chain = induce_chain(env.mdp, up).matrix();
    for (int s = 0; s < 10; ++s) {
      for (int t = 0; t < 10; ++t) {
        double v = 0.0;
        for (int a = 0; a < 2; ++a) v += up(s, a) * env.mdp.p(s, a, t);
        CHECK(chain(s, t) == doctest::Approx(v));
      }
    }
    CHECK(chain(0, 0) == doctest::Approx(0.1));
    CHECK(chain(0, 1) == doctest::Approx(0.9));
    CHECK(chain.row(0).tail(8).cwiseAbs().sum() == 0.0);
  }
  SUBCASE("shape mismatch") {
    const TabularMdp mdp = random_tabular(3, 2, rng);
    CHECK_THROWS_AS(induce_chain(mdp, PolicyTable::uniform(4, 2)), ShapeError);
    CHECK_THROWS_AS(induce_chain(mdp, PolicyTable::uniform(3, 3)), ShapeError);
  }
}

TEST_CASE("stationary distribution examples") {
  const Distribution flat = stationary_distribution(StateChain(Matrix::Constant(5, 5, 0.2)));
  for (int s = 0; s < 5; ++s) CHECK(flat[s] == doctest::Approx(0.2));

  // Balance d0 * 0.1 = d1 * 0.2 with d0 + d1 = 1.
  const Distribution two = stationary_distribution(StateChain(two_state(0.1, 0.2)));
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("stationary distribution on a periodic chain raises") {
  Matrix p(3, 3);
  p << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  CHECK_THROWS_AS(stationary_distribution(StateChain(p), 1e-10, 5000), NonErgodicError);
  try {
    stationary_distribution(StateChain(p), 1e-10, 5000);
  } catch (const NonErgodicError& e) {
    CHECK(e.reason() == NonErgodicError::Reason::Periodic);
    CHECK(e.residual() > 0.1);
  }
}

TEST_CASE("stationary distribution is a fixed point and matches a direct solve") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 9;
    const Matrix p = random_stochastic(n, n, rng);
    const Distribution d = stationary_distribution(StateChain(p));
    CHECK((p.transpose() * d.probs() - d.probs()).cwiseAbs().sum() <= 1e-10);
    CHECK((d.probs() - stationary_by_solve(p)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(d.entropy_normalized() >= 0.0);
    CHECK(d.entropy_normalized() <= 1.0 + 1e-9);
  }
}

TEST_CASE("doubly stochastic chains have uniform stationary distributions") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 8;
    const Matrix p = random_doubly_stochastic(n, rng);
    const Distribution d = stationary_distribution(StateChain(p));
    CHECK((d.probs().array() - 1.0 / n).abs().maxCoeff() < 1e-6);
    CHECK(d.entropy_normalized() == doctest::Approx(1.0));
  }
}

TEST_CASE("entropy examples") {
  CHECK(entropy(Vector::Constant(10, 0.1)).normalized == doctest::Approx(1.0));
  Vector point = Vector::Zero(4);
  point[2] = 1.0;
  CHECK(entropy(point).nats == 0.0);
  CHECK(entropy(point).normalized == 0.0);
  Vector half(4);
  half << 0.5, 0.5, 0, 0;
  CHECK(entropy(half).nats == doctest::Approx(std::log(2.0)));
  CHECK(entropy(half).normalized == doctest::Approx(0.5));
  CHECK(entropy(Vector::Ones(1)).normalized == 1.0);

  Vector neg(2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(entropy(neg), InvalidDistributionError);
  CHECK_THROWS_AS(entropy(Vector::Constant(3, 0.3)), InvalidDistributionError);
}

TEST_CASE("state-action distribution") {
  Rng rng(2);
  const TabularMdp mdp = random_tabular(4, 3, rng);
  const PolicyTable u = PolicyTable::uniform(4, 3);
  const Distribution w = state_action_distribution(mdp, u, Distribution(Vector::Constant(4, 0.25)));
  CHECK((w.probs().array() - 1.0 / 12).abs().maxCoeff() < 1e-15);

  const PolicyTable det = PolicyTable::deterministic({2, 0, 1, 1}, 3);
  const Distribution d = stationary_distribution(induce_chain(mdp, det));
  const Distribution wd = state_action_distribution(mdp, det, d);
  CHECK((wd.probs().array() > 0.0).count() <= 4);
  CHECK(wd.probs().sum() == doctest::Approx(1.0));
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) CHECK(wd[s * 3 + a] == doctest::Approx(d[s] * det(s, a)));
  }
}

TEST_CASE("spectral info examples") {
  const SpectralInfo flat = spectral_info(StateChain(Matrix::Constant(4, 4, 0.25)));
  CHECK(flat.slem == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(flat.spectral_gap == doctest::Approx(1.0));
  CHECK(flat.reversible);

  const SpectralInfo id = spectral_info(StateChain(Matrix::Identity(3, 3)));
  CHECK(id.slem == doctest::Approx(1.0));
  CHECK(id.spectral_gap == doctest::Approx(0.0));

  const SpectralInfo two = spectral_info(StateChain(two_state(0.3, 0.3)));
  CHECK(two.slem == doctest::Approx(0.4));
  CHECK(two.spectral_gap == doctest::Approx(0.6));
  CHECK(two.spectral_gap == 1.0 - two.slem);

  // A directed 3-cycle with laziness is not reversible; eigenvalues 1/2 + e^{2 pi i k/3}/2.
  Matrix cyc(3, 3);
  cyc << 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5, 0, 0.5;
  const SpectralInfo c = spectral_info(StateChain(cyc));
  CHECK_FALSE(c.reversible);
  CHECK(c.slem == doctest::Approx(0.5));
}

TEST_CASE("mixing time examples") {
  CHECK(mixing_time(StateChain(Matrix::Constant(6, 6, 1.0 / 6)), 0.25) == 1);
  CHECK(mixing_time(StateChain(Matrix::Constant(6, 6, 1.0 / 6)), 0.01) == 1);
  CHECK_THROWS_AS(mixing_time(StateChain(Matrix::Identity(3, 3)), 0.25, 1000), NonMixingError);

  const Matrix lazy = two_state(0.25, 0.25);
  const int t = mixing_time(StateChain(lazy), 0.25);
  const Vector d = Vector::Constant(2, 0.5);
  CHECK(worst_tv(lazy, d, t) <= 0.25);
  CHECK(worst_tv(lazy, d, t - 1) > 0.25);
  const double gap = 0.5;
  CHECK(t >= std::ceil((1 - gap) / gap * std::log(1 / (2 * 0.25)) - 1e-12));
  CHECK(t <= std::floor(1 / gap * std::log(1 / (0.5 * 0.25)) + 1e-12));
}

TEST_CASE("mixing time agrees with direct iteration on random chains") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6;
    const Matrix p = random_stochastic(n, n, rng);
    const Vector d = stationary_by_solve(p);
    const int t = mixing_time(StateChain(p), 0.1);
    CHECK(worst_tv(p, d, t) <= 0.1 + 1e-12);
    if (t > 1) {
      CHECK(worst_tv(p, d, t - 1) > 0.1);
    }
  }
}

TEST_CASE("matrix distances") {
  Rng rng(4);
  const Matrix a = random_stochastic(3, 3, rng);
  CHECK(matrix_distance(a, a, MatrixDistance::Infinity) == 0.0);
  CHECK(matrix_distance(a, a, MatrixDistance::Frobenius) == 0.0);
  const Matrix ds = random_doubly_stochastic(3, rng);
  CHECK(matrix_distance(ds, ds, MatrixDistance::ColumnSumDeficit) < 1e-12);

  Matrix x(2, 2);
  x << 0.5, 0.5, 0.5, 0.5;
  Matrix y(2, 2);
  y << 1, 0, 0, 1;
  CHECK(matrix_distance(x, y, MatrixDistance::Infinity) == doctest::Approx(1.0));
  CHECK(matrix_distance(x, y, MatrixDistance::Frobenius) == doctest::Approx(1.0));

  Matrix c(2, 2);
  c << 1, 0, 1, 0;
  CHECK(matrix_distance(c, c, MatrixDistance::ColumnSumDeficit) == doctest::Approx(2.0));
  CHECK_THROWS_AS(matrix_distance(x, Matrix::Zero(3, 3), MatrixDistance::Frobenius), ShapeError);
}

TEST_CASE("model error between tensors") {
  Rng rng(9);
  const TabularMdp a = random_tabular(3, 2, rng);
  CHECK(model_error(a, a) == 0.0);
  const TabularMdp b = random_tabular(3, 2, rng);
  CHECK(model_error(a, b) == doctest::Approx((a.transition() - b.transition()).norm()));
  CHECK_THROWS_AS(model_error(a, random_tabular(4, 2, rng)), ShapeError);
}

TEST_CASE("damped stationary handles reducible chains") {
  const Vector d = damped_stationary(StateChain(Matrix::Identity(3, 3)));
  CHECK(d.sum() == doctest::Approx(1.0));
  CHECK((d.array() - 1.0 / 3).abs().maxCoeff() < 1e-12);
  const Matrix p = two_state(0.1, 0.2);
  const Vector e = damped_stationary(StateChain(p), 1.0 - 1e-9);
  CHECK(e[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}
