#include "doctest.h"

#include "explore/agents.hpp"
#include "explore/environments.hpp"
#include "explore/errors.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace explore;
using namespace testing_support;

namespace {

// Discounted value of a deterministic policy by a direct solve.
Vector policy_value(const TabularMdp& mdp, const std::vector<int>& actions, const Vector& reward, double gamma) {
  const int n = mdp.n_states();
  const Matrix p = induce_chain(mdp, PolicyTable::deterministic(actions, mdp.n_actions())).matrix();
  return (Matrix::Identity(n, n) - gamma * p).lu().solve(reward);
}

}  // namespace

TEST_CASE("count table bookkeeping") {
  CountTable c(3, 2);
  c.add(0, 1, 2);
  c.add(0, 1, 2);
  c.add(2, 0, 0);
  CHECK(c.transitions(0, 1, 2) == 2);
  CHECK(c.pair_visits(0, 1) == 2);
  CHECK(c.state_visits(0) == 2);
  CHECK(c.state_visits(2) == 1);
  CHECK(c.total() == 3);
  CHECK(c.min_pair_visits() == 0);
  CHECK_THROWS_AS(c.add(3, 0, 0), ShapeError);
  CHECK_THROWS_AS(c.add(0, 2, 0), ShapeError);
}

TEST_CASE("model estimate from counts") {
  CountTable c(2, 2);
  for (int k = 0; k < 3; ++k) c.add(0, 0, 0);
  c.add(0, 0, 1);
  SUBCASE("uniform fallback") {
    const TabularMdp m = estimate_model(c, Fallback::Uniform);
    CHECK(m.p(0, 0, 0) == doctest::Approx(0.75));
    CHECK(m.p(0, 0, 1) == doctest::Approx(0.25));
    CHECK(m.p(1, 1, 0) == doctest::Approx(0.5));
    CHECK(m.p(0, 1, 1) == doctest::Approx(0.5));
    CHECK(m.initial_dist()[0] == doctest::Approx(0.5));
  }
  SUBCASE("self-loop fallback") {
    const TabularMdp m = estimate_model(c, Fallback::SelfLoop);
    CHECK(m.p(1, 0, 1) == 1.0);
    CHECK(m.p(1, 1, 1) == 1.0);
    CHECK(m.p(0, 1, 0) == 1.0);
    CHECK(m.p(0, 0, 0) == doctest::Approx(0.75));
  }
  SUBCASE("initial distribution override") {
    Vector d0(2);
    d0 << 1, 0;
    CHECK(estimate_model(c, Fallback::Uniform, d0).initial_dist()[0] == 1.0);
  }
  SUBCASE("empty table with self loops is the identity") {
    const TabularMdp m = estimate_model(CountTable(4, 3), Fallback::SelfLoop);
    for (int s = 0; s < 4; ++s) {
      for (int a = 0; a < 3; ++a) CHECK(m.p(s, a, s) == 1.0);
    }
  }
}

TEST_CASE("value iteration against policy enumeration") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const TabularMdp mdp = random_tabular(4, 2, rng);
    Vector reward(4);
    for (int s = 0; s < 4; ++s) reward[s] = rng.uniform01();
    const double gamma = 0.9;
    const ValueIterationResult vi = value_iteration(mdp, reward, gamma, 1e-10);
    Vector best = Vector::Constant(4, -1e300);
    for (int mask = 0; mask < 16; ++mask) {
      std::vector<int> actions(4);
      for (int s = 0; s < 4; ++s) actions[s] = (mask >> s) & 1;
      best = best.cwiseMax(policy_value(mdp, actions, reward, gamma));
    }
    CHECK((vi.values - best).cwiseAbs().maxCoeff() < 1e-7);
    std::vector<int> greedy(4);
    for (int s = 0; s < 4; ++s) greedy[s] = vi.greedy(s, 1) > 0.5 ? 1 : 0;
    CHECK((policy_value(mdp, greedy, reward, gamma) - best).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("value iteration edge cases") {
  const TabularMdp mdp = single_chain().mdp;
  const ValueIterationResult zero = value_iteration(mdp, Vector::Zero(10));
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);
  // Ties go to action 0.
  for (int s = 0; s < 10; ++s) CHECK(zero.greedy(s, 0) == 1.0);

  // A single absorbing state with reward r has value r / (1 - gamma).
  const TabularMdp absorbing(1, 1, Matrix::Ones(1, 1), Vector::Ones(1));
  const ValueIterationResult v = value_iteration(absorbing, Vector::Constant(1, 2.0), 0.9, 1e-10);
  CHECK(v.values[0] == doctest::Approx(20.0).epsilon(1e-8));
}

TEST_CASE("policy transforms") {
  Matrix q(2, 3);
  q << 1, 3, 3, 0, 0, 1;
  const PolicyTable even = greedy_even_ties(q);
  CHECK(even(0, 1) == doctest::Approx(0.5));
  CHECK(even(0, 2) == doctest::Approx(0.5));
  CHECK(even(1, 2) == 1.0);

  const PolicyTable g = PolicyTable::deterministic({1, 0}, 2);
  CHECK(epsilon_greedy(g, 0.0).probs() == g.probs());
  CHECK(epsilon_greedy(g, 1.0).max_abs_diff(PolicyTable::uniform(2, 2)) < 1e-15);
  const PolicyTable e = epsilon_greedy(g, 0.1);
  CHECK(e(0, 1) == doctest::Approx(0.95));
  CHECK(e(0, 0) == doctest::Approx(0.05));
  CHECK(e(1, 0) == doctest::Approx(0.95));
  CHECK_THROWS_AS(epsilon_greedy(g, 1.5), ParameterError);
}

TEST_CASE("mixture weights") {
  MixturePolicy m(PolicyTable::uniform(2, 2));
  m.append(PolicyTable::deterministic({0, 0}, 2), 0.5);
  m.append(PolicyTable::deterministic({1, 1}, 2), 0.5);
  REQUIRE(m.size() == 3);
  CHECK(m.weights()[0] == doctest::Approx(0.25));
  CHECK(m.weights()[1] == doctest::Approx(0.25));
  CHECK(m.weights()[2] == doctest::Approx(0.5));

  MixturePolicy geo(PolicyTable::uniform(2, 2));
  for (int k = 0; k < 5; ++k) geo.append(PolicyTable::uniform(2, 2), 0.1);
  double total = 0.0;
  for (double w : geo.weights()) total += w;
  CHECK(total == doctest::Approx(1.0));
  CHECK(geo.weights()[0] == doctest::Approx(std::pow(0.9, 5)));
  CHECK(geo.weights().back() == doctest::Approx(0.1));
  CHECK_THROWS_AS(geo.append(PolicyTable::uniform(3, 2), 0.1), ShapeError);
}

TEST_CASE("mixture state distribution") {
  const TabularMdp mdp = single_chain().mdp;
  MixturePolicy m(PolicyTable::uniform(10, 2));
  m.append(PolicyTable::deterministic(std::vector<int>(10, 0), 2), 0.5);
  const Vector d = mixture_state_distribution(mdp, m, false);
  const Vector a = stationary_distribution(induce_chain(mdp, m.components()[0])).probs();
  const Vector b = stationary_distribution(induce_chain(mdp, m.components()[1])).probs();
  CHECK((d - 0.5 * (a + b)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(mixture_state_distribution(mdp, m, true).sum() == doctest::Approx(1.0));
}

TEST_CASE("ideal loop") {
  const EnvSpec env = single_chain();
  IdealOptions opt;
  opt.max_iters = 20;
  opt.stop_on_convergence = false;
  opt.seed = 4;

  SUBCASE("oracle planning equals the exact solve") {
    opt.oracle = true;
    const IdealResult r = run_ideal(env, opt);
    const ObjectiveSolution exact = solve_objective(env.mdp, opt.kind, opt.xi, opt.zeta);
    CHECK(r.policy.max_abs_diff(exact.policy) < 1e-9);
  }
  SUBCASE("records") {
    const IdealResult r = run_ideal(env, opt);
    REQUIRE(r.record.rows.size() == 21);
    const ObjectiveSolution first =
        solve_objective(estimate_model(CountTable(10, 2), Fallback::Uniform), opt.kind, opt.xi, opt.zeta);
    const Distribution d0 = stationary_distribution(induce_chain(env.mdp, first.policy));
    CHECK(r.record.rows[0].h_state == doctest::Approx(d0.entropy_normalized()).epsilon(1e-9));
    for (std::size_t i = 0; i < r.record.rows.size(); ++i) {
      const RunRow& row = r.record.rows[i];
      CHECK(row.iter == static_cast<int>(i));
      CHECK(row.samples == static_cast<long>(i) * opt.batch_n);
      CHECK(row.h_state > 0.0);
      CHECK(row.h_state <= 1.0 + 1e-12);
      CHECK(row.min_d > 0.0);
    }
    CHECK(r.policy.min_prob() >= opt.xi - 1e-7);
    CHECK((r.policy.probs().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK(r.record.failures.empty());
  }
  SUBCASE("same seed replays") {
    const IdealResult a = run_ideal(env, opt);
    const IdealResult b = run_ideal(env, opt);
    CHECK(a.policy.probs() == b.policy.probs());
    CHECK(a.record.rows.back().model_err_f == b.record.rows.back().model_err_f);
  }
  SUBCASE("convergence stop") {
    opt.oracle = true;
    opt.stop_on_convergence = true;
    opt.max_iters = 300;
    const IdealResult r = run_ideal(env, opt);
    CHECK(r.record.converged);
    CHECK(r.record.rows.size() < 301);
  }
  SUBCASE("bad batch") {
    opt.batch_n = 0;
    CHECK_THROWS_AS(run_ideal(env, opt), ParameterError);
  }
}

TEST_CASE("count-based and maxent loops") {
  const EnvSpec env = double_chain();
  CountBasedOptions cb;
  cb.max_iters = 30;
  cb.seed = 2;
  const CountBasedResult c = run_countbased(env, cb);
  CHECK(c.record.rows.size() == 31);
  CHECK(c.policy.min_prob() >= cb.epsilon / 2 - 1e-12);
  CHECK(c.record.rows.back().samples == 300);

  MaxEntOptions me;
  me.max_iters = 30;
  me.seed = 2;
  const MaxEntResult m = run_maxent(env, me);
  CHECK(m.record.rows.size() == 31);
  CHECK(m.mixture.size() == 31);
  double total = 0.0;
  for (double w : m.mixture.weights()) total += w;
  CHECK(total == doctest::Approx(1.0));
  for (const RunRow& row : m.record.rows) {
    CHECK(row.h_state > 0.0);
    CHECK(row.h_state <= 1.0 + 1e-12);
  }
  const MaxEntResult again = run_maxent(env, me);
  CHECK(again.record.rows.back().h_state == m.record.rows.back().h_state);
}

TEST_CASE("model error shrinks with samples on average") {
  const EnvSpec env = double_chain();
  double early = 0.0;
  double late = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RunRecord r = run_random_baseline(env, 10, 200, seed);
    REQUIRE(r.rows.size() == 201);
    early += r.rows[10].model_err_f;
    late += r.rows[200].model_err_f;
  }
  CHECK(late < early);
}

TEST_CASE("run csv") {
  RunRecord r;
  r.rows.push_back(RunRow{3, 30, 0.9, 0.8, 0.05, 0.1, 1.5, 2.0});
  std::ostringstream os;
  write_run_csv(os, r);
  const std::string text = os.str();
  CHECK(text.rfind("iter,samples,h_state,h_state_action,min_d,gap,model_err_f,solve_ms\n", 0) == 0);
  CHECK(text.find("\n3,30,") != std::string::npos);
  CHECK(run_csv_header().size() == 8);
}
