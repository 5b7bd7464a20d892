#include "o2o/envs/generators.hpp"
#include "o2o/envs/reference_q.hpp"
#include "o2o/oracle/coverage.hpp"
#include "o2o/oracle/hard_instance.hpp"
#include "o2o/oracle/values.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace o2o;

namespace {

LinearMdp tabular(std::size_t S, std::size_t A, std::size_t H, std::uint64_t seed) {
  TabularParams p;
  p.S = S;
  p.A = A;
  p.H = H;
  p.seed = seed;
  return make_tabular_random(p);
}

/// One-hot MDP with explicit tables: next[h] is (S*A) x S, reward[h] has S*A entries.
LinearMdp explicit_mdp(std::size_t S, std::size_t A, std::vector<Matrix> next, std::vector<Vector> reward, Vector init) {
  std::vector<std::string> states, actions;
  for (std::size_t s = 0; s < S; ++s) states.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < A; ++a) actions.push_back("a" + std::to_string(a));
  const auto d = static_cast<Eigen::Index>(S * A);
  const auto H = next.size();
  return LinearMdp(S * A, H, states, actions, std::move(init), Matrix::Identity(d, d), std::move(next), std::move(reward));
}

Policy random_policy(const LinearMdp& m, std::uint64_t seed) {
  Rng rng(seed, streams::kPolicy);
  Policy pi;
  for (std::size_t h = 0; h < m.horizon(); ++h) {
    Matrix p(static_cast<Eigen::Index>(m.num_states()), static_cast<Eigen::Index>(m.num_actions()));
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
      const auto w = rng.simplex(m.num_actions());
      for (Eigen::Index a = 0; a < p.cols(); ++a) p(s, a) = w[static_cast<std::size_t>(a)];
    }
    pi.probs.push_back(p);
  }
  return pi;
}

std::vector<Matrix> single_mask(const LinearMdp& m, const Triple& t) {
  std::vector<Matrix> mask(m.horizon(), Matrix::Zero(static_cast<Eigen::Index>(m.num_states()),
                                                     static_cast<Eigen::Index>(m.num_actions())));
  mask[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a)) = 1.0;
  return mask;
}

}  // namespace

TEST(SolveOptimal, DeterministicChainSumsRewards) {
  const std::vector<Matrix> next(3, Matrix::Ones(1, 1));
  const std::vector<Vector> reward(3, Vector::Ones(1));
  const auto m = explicit_mdp(1, 1, next, reward, Vector::Ones(1));
  const auto v = solve_optimal(m);
  EXPECT_DOUBLE_EQ(v.v[0][0], 3.0);
  EXPECT_DOUBLE_EQ(v.v[3][0], 0.0);
}

TEST(SolveOptimal, UnperturbedHardInstanceIsActionSymmetric) {
  const auto m = make_hard_instance(make_hard_params(2, 3, 0.01, 4, false));
  const auto v = solve_optimal(m);
  for (std::size_t h = 0; h < 3; ++h)
    for (Eigen::Index s = 0; s < v.q[h].rows(); ++s) EXPECT_EQ(v.q[h](s, 0), v.q[h](s, 1));
}

TEST(SolveOptimal, MatchesEnumeration) {
  const auto m = tabular(3, 2, 3, 1);
  const auto v = solve_optimal(m);
  const auto brute = oracles::brute_force_q_star(m);
  for (std::size_t h = 0; h < 3; ++h) EXPECT_LE((v.q[h] - brute[h]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SolveOptimal, ValuesBoundedByRemainingStages) {
  const auto m = tabular(5, 3, 6, 2);
  const auto v = solve_optimal(m);
  for (std::size_t h = 0; h < 6; ++h) {
    EXPECT_GE(v.q[h].minCoeff(), 0.0);
    EXPECT_LE(v.q[h].maxCoeff(), static_cast<double>(6 - h));
    EXPECT_EQ(v.v[h], Vector(v.q[h].rowwise().maxCoeff()));
  }
}

TEST(PolicyEval, GreedyPolicyAttainsOptimum) {
  const auto m = tabular(4, 3, 5, 3);
  const auto star = solve_optimal(m);
  const auto val = policy_eval(m, greedy_policy(star.q));
  for (std::size_t h = 0; h <= 5; ++h) EXPECT_LE((val.v[h] - star.v[h]).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PolicyEval, UniformPolicyAveragesRewards) {
  Vector r(2);
  r << 1.0, 0.0;
  const auto m = explicit_mdp(1, 2, {Matrix::Ones(2, 1)}, {r}, Vector::Ones(1));
  EXPECT_DOUBLE_EQ(policy_eval(m, Policy::uniform(m)).v[0][0], 0.5);
}

TEST(PolicyEval, MatchesMonteCarlo) {
  const auto m = tabular(4, 3, 4, 6);
  const auto pi = random_policy(m, 2);
  const double exact = initial_value(m, policy_eval(m, pi));
  const auto mc = oracles::mc_policy_value(m, pi.probs, 100000, 99);
  EXPECT_NEAR(mc.mean, exact, 3.0 * mc.stderr_);
}

TEST(Occupancy, UniformSingleStateSplitsEvenly) {
  const auto m = explicit_mdp(1, 2, {Matrix::Ones(2, 1)}, {Vector::Zero(2)}, Vector::Ones(1));
  const auto occ = occupancy(m, Policy::uniform(m));
  EXPECT_DOUBLE_EQ(occ.d[0](0, 0), 0.5);
  EXPECT_DOUBLE_EQ(occ.d[0](0, 1), 0.5);
}

TEST(Occupancy, DeterministicChainIsAnIndicatorPath) {
  // s0 -> s1 -> s2 deterministically under the single action.
  Matrix p0 = Matrix::Zero(3, 3), p1 = Matrix::Zero(3, 3), p2 = Matrix::Zero(3, 3);
  for (int s = 0; s < 3; ++s) {
    p0(s, std::min(s + 1, 2)) = 1.0;
    p1(s, std::min(s + 1, 2)) = 1.0;
    p2(s, 2) = 1.0;
  }
  Vector init = Vector::Zero(3);
  init[0] = 1.0;
  const auto m = explicit_mdp(3, 1, {p0, p1, p2}, {Vector::Zero(3), Vector::Zero(3), Vector::Zero(3)}, init);
  const auto occ = occupancy(m, Policy::uniform(m));
  for (std::size_t h = 0; h < 3; ++h)
    for (Eigen::Index s = 0; s < 3; ++s) EXPECT_EQ(occ.d[h](s, 0), s == static_cast<Eigen::Index>(h) ? 1.0 : 0.0);
}

TEST(Occupancy, MatchesEmpiricalFrequencies) {
  const auto m = tabular(3, 2, 3, 8);
  const auto pi = random_policy(m, 5);
  const auto occ = occupancy(m, pi);
  const std::size_t n = 100000;
  const auto freq = oracles::mc_occupancy(m, pi.probs, n, 123);
  for (std::size_t h = 0; h < 3; ++h)
    for (Eigen::Index s = 0; s < 3; ++s)
      for (Eigen::Index a = 0; a < 2; ++a) {
        const double p = occ.d[h](s, a);
        EXPECT_NEAR(freq[h](s, a), p, 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
      }
}

TEST(Occupancy, FlowsForward) {
  const auto m = tabular(5, 3, 4, 1);
  const auto pi = random_policy(m, 1);
  const auto occ = occupancy(m, pi);
  for (std::size_t h = 0; h + 1 < 4; ++h) {
    Vector next = Vector::Zero(5);
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t a = 0; a < 3; ++a)
        next += occ.d[h](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) * m.transition_row(h, s, a).transpose();
    EXPECT_LE((occ.state_marginal(h + 1) - next).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BellmanResidual, ExactForOptimalAndPolicyValues) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = tabular(4, 3, 5, seed);
    EXPECT_LE(bellman_residual(m, solve_optimal(m)), 1e-10);
    EXPECT_LE(bellman_residual(m, policy_eval(m, random_policy(m, seed))), 1e-10);
  }
}

TEST(BellmanResidual, OptimalDominatesEveryPolicy) {
  const auto m = tabular(4, 2, 4, 11);
  const auto star = solve_optimal(m);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto val = policy_eval(m, random_policy(m, seed));
    for (std::size_t h = 0; h < 4; ++h) EXPECT_TRUE(((star.v[h] - val.v[h]).array() >= -1e-10).all());
  }
}

TEST(Rho, EmptyAndFullSets) {
  const auto m = tabular(3, 2, 3, 1);
  const auto star = solve_optimal(m);
  std::vector<Matrix> none(3, Matrix::Zero(3, 2)), all(3, Matrix::Ones(3, 2));
  EXPECT_EQ(max_occupancy_mass(m, none), 0.0);
  EXPECT_DOUBLE_EQ(max_occupancy_mass(m, all), 1.0);
  EXPECT_EQ(compute_rho(m, make_reference_q(m, star.q, {}, 0.5), star), 0.0);
}

TEST(Rho, SingleTripleEqualsBestReachProbability) {
  const auto m = tabular(3, 2, 3, 1);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        const auto mask = single_mask(m, {s, a, h});
        EXPECT_NEAR(max_occupancy_mass(m, mask), oracles::brute_force_rho(m, mask), 1e-12);
      }
}

TEST(Rho, ArbitraryMasksMatchEnumeration) {
  const auto m = tabular(3, 2, 3, 4);
  Rng rng(4, streams::kPolicy);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Matrix> mask(3, Matrix::Zero(3, 2));
    for (auto& mm : mask)
      for (Eigen::Index i = 0; i < mm.size(); ++i) mm.data()[i] = rng.uniform() < 0.25 ? 1.0 : 0.0;
    EXPECT_NEAR(max_occupancy_mass(m, mask), oracles::brute_force_rho(m, mask), 1e-12);
  }
}

TEST(Rho, MonotoneInPlantedSet) {
  const auto m = tabular(4, 3, 4, 5);
  Rng rng(1, streams::kPolicy);
  std::vector<Matrix> mask(4, Matrix::Zero(4, 3));
  double prev = 0.0;
  for (int step = 0; step < 48; ++step) {
    const auto h = rng.index(4), s = rng.index(4), a = rng.index(3);
    mask[h](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = 1.0;
    const double rho = max_occupancy_mass(m, mask);
    EXPECT_GE(rho + 1e-12, prev);
    prev = rho;
  }
}

TEST(Rho, RefusesMisspecifiedReference) {
  const auto m = tabular(3, 2, 3, 1);
  const auto star = solve_optimal(m);
  const auto noisy = make_misspecified_reference(make_reference_q(m, star.q, {}, 1.0), 0.1, 1);
  EXPECT_THROW(compute_rho(m, noisy, star), MisspecifiedInput);
  EXPECT_THROW(verify_beta_separation(noisy, star, 1.0), MisspecifiedInput);
}

TEST(Separation, GeneratorOutputHolds) {
  const auto m = tabular(4, 2, 3, 2);
  const auto star = solve_optimal(m);
  const auto q = make_reference_q(m, star.q, {{0, 0, 0}, {1, 1, 2}}, 0.5);
  const auto rep = verify_beta_separation(q, star, 0.5);
  EXPECT_TRUE(rep.holds);
  EXPECT_NEAR(rep.min_nonzero_gap, 0.5, 1e-12);
  EXPECT_TRUE(rep.violating_triples.empty());
}

TEST(Separation, SmallGapIsReported) {
  const auto m = tabular(4, 2, 3, 2);
  const auto star = solve_optimal(m);
  ReferenceQ q;
  q.values = star.q;
  q.beta = 0.5;
  q.values[1](2, 1) += q.values[1](2, 1) > 1.5 ? -0.3 : 0.3;
  const auto rep = verify_beta_separation(q, star, 0.5);
  EXPECT_FALSE(rep.holds);
  ASSERT_EQ(rep.violating_triples.size(), 1u);
  EXPECT_EQ(rep.violating_triples[0], (Triple{2, 1, 1}));
  EXPECT_NEAR(rep.min_nonzero_gap, 0.3, 1e-12);
}

TEST(Separation, ExactReferenceHoldsVacuously) {
  const auto m = tabular(3, 2, 3, 2);
  const auto star = solve_optimal(m);
  ReferenceQ q;
  q.values = star.q;
  for (double beta : {1e-6, 0.5, 3.0}) {
    const auto rep = verify_beta_separation(q, star, beta);
    EXPECT_TRUE(rep.holds);
    EXPECT_TRUE(std::isinf(rep.min_nonzero_gap));
  }
}

TEST(HardInstanceCheck, DeviationWithinEpsilon) {
  const auto rep = check_hard_instance(make_hard_params(3, 4, 0.01, 0), 0.1);
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.max_deviation, 0.01);
  EXPECT_GT(rep.max_deviation, 0.0);
  EXPECT_TRUE(rep.rows_valid);
}

TEST(HardInstanceCheck, ReferenceMemberAgainstItself) {
  const auto p = make_hard_params(3, 4, 0.01, 0, false);
  const auto a = solve_optimal(make_hard_instance(p));
  const auto b = solve_optimal(make_hard_instance(p));
  for (std::size_t h = 0; h < 4; ++h) EXPECT_EQ((a.q[h] - b.q[h]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HardInstanceCheck, RejectsEpsilonAboveZetaH) {
  EXPECT_THROW(check_hard_instance(make_hard_params(2, 3, 0.5, 0), 0.1), HypothesisViolation);
  EXPECT_THROW(check_hard_instance(make_hard_params(2, 3, 0.01, 0), 0.5), HypothesisViolation);
}

TEST(LbDecomposition, OptimalPolicyHasZeroBothSides) {
  const auto p = make_hard_params(3, 4, 0.01, 2);
  const auto rep = lb_decomposition_check(p, hard_sign_policy(p, false));
  EXPECT_NEAR(rep.lhs, 0.0, 1e-9);
  EXPECT_NEAR(rep.rhs, 0.0, 1e-15);
  EXPECT_TRUE(rep.holds);
}

TEST(LbDecomposition, AntiOptimalPolicyClosedForm) {
  for (std::size_t d : {2, 3, 5}) {
    const auto p = make_hard_params(d, 5, 0.05, 7);
    const auto rep = lb_decomposition_check(p, hard_sign_policy(p, true));
    const double expected = p.gamma * 5.0 / 10.0 * 2.0 * (2.0 * static_cast<double>(d - 1) * p.delta());
    EXPECT_NEAR(rep.rhs, expected, 1e-15);
    EXPECT_GE(rep.lhs, rep.rhs);
  }
}

TEST(LbDecomposition, UniformPolicyClosedForm) {
  for (std::size_t d : {2, 3, 5}) {
    const auto p = make_hard_params(d, 4, 0.05, 3);
    const auto rep = lb_decomposition_check(p, Policy::uniform(make_hard_instance(p)));
    const double expected = p.gamma * 4.0 / 10.0 * 2.0 * (static_cast<double>(d - 1) * p.delta());
    EXPECT_NEAR(rep.rhs, expected, 1e-15);
    EXPECT_GE(rep.lhs, rep.rhs);
  }
}

TEST(LbDecomposition, RandomPoliciesSatisfyTheBound) {
  for (std::size_t d : {2, 3, 4})
    for (std::size_t H : {3, 4, 6}) {
      const auto p = make_hard_params(d, H, 0.05, d * 10 + H);
      for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto rep = lb_decomposition_check(p, random_hard_policy(p, seed, seed % 2 == 0));
        EXPECT_TRUE(rep.holds) << "d=" << d << " H=" << H << " seed=" << seed << " lhs=" << rep.lhs << " rhs=" << rep.rhs;
      }
    }
}
