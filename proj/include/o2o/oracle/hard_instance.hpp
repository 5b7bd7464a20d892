#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/generators.hpp"
#include "o2o/oracle/values.hpp"
#include "o2o/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace o2o {

struct HardInstanceReport {
  double delta = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  double zeta = 0.0;
  /// max over (s,a,h) of |Q*(M_ref) - Q*(M)|.
  double max_deviation = 0.0;
  /// Worst |row sum - 1| over both members; every entry is checked to lie in [0,1].
  double worst_row_error = 0.0;
  bool rows_valid = false;
  bool within_epsilon = false;
  bool passed = false;
};

namespace detail {

inline double worst_row_error(const LinearMdp& m, bool& in_range) {
  double worst = 0.0;
  for (std::size_t h = 0; h < m.horizon(); ++h) {
    const auto& p = m.transition(h);
    if (p.minCoeff() < 0.0 || p.maxCoeff() > 1.0) in_range = false;
    worst = std::max(worst, (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return worst;
}

}  // namespace detail

/// Builds the gamma = 0 reference member and the gamma = 6*eps member on the
/// same sign vectors, and measures how far Q*(M_ref) sits from Q*(M).
inline HardInstanceReport check_hard_instance(const HardInstanceParams& p, double zeta) {
  if (!(zeta > 0.0 && zeta < 0.5)) throw HypothesisViolation("zeta must lie in (0, 1/2)");
  if (!(p.epsilon <= zeta * static_cast<double>(p.H)))
    throw HypothesisViolation("epsilon = " + std::to_string(p.epsilon) + " exceeds zeta*H = " +
                              std::to_string(zeta * static_cast<double>(p.H)));
  HardInstanceParams ref = p;
  ref.gamma = 0.0;
  HardInstanceParams member = p;
  member.gamma = 6.0 * p.epsilon;
  const LinearMdp m_ref = make_hard_instance(ref);
  const LinearMdp m = make_hard_instance(member);

  HardInstanceReport r;
  r.delta = p.delta();
  r.gamma = member.gamma;
  r.epsilon = p.epsilon;
  r.zeta = zeta;
  bool in_range = true;
  r.worst_row_error = std::max(detail::worst_row_error(m_ref, in_range), detail::worst_row_error(m, in_range));
  r.rows_valid = in_range && r.worst_row_error <= 1e-12;

  const auto q_ref = solve_optimal(m_ref);
  const auto q_star = solve_optimal(m);
  for (std::size_t h = 0; h < p.H; ++h)
    r.max_deviation = std::max(r.max_deviation, (q_ref.q[h] - q_star.q[h]).cwiseAbs().maxCoeff());
  r.within_epsilon = r.max_deviation <= p.epsilon + 1e-12;
  r.passed = r.rows_valid && r.within_epsilon;
  return r;
}

struct LbDecompositionReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Suboptimality of `pi` from x_1 against the per-stage action-alignment
/// lower bound (gamma*H/10) * sum_{h <= H/2} (max_a <mu_h,a> - <mu_h, abar_h>).
inline LbDecompositionReport lb_decomposition_check(const HardInstanceParams& p, const Policy& pi) {
  validate(p);
  const LinearMdp mdp = make_hard_instance(p);
  if (pi.probs.size() != p.H) throw InvalidArgument("policy must define every stage");
  const auto opt = solve_optimal(mdp);
  const auto val = policy_eval(mdp, pi);
  const auto occ = occupancy(mdp, pi);

  LbDecompositionReport r;
  r.lhs = opt.v[0][0] - val.v[0][0];
  const auto A = p.num_actions();
  double total = 0.0;
  for (std::size_t h = 0; h < p.H / 2; ++h) {
    const auto x = static_cast<Eigen::Index>(h);
    // Conditional action law at x_h; the policy row itself if x_h is unreachable.
    Vector weights = occ.d[h].row(x).transpose();
    if (weights.sum() <= 0.0) weights = pi.probs[h].row(x).transpose();
    weights /= weights.sum();
    Vector abar = Vector::Zero(static_cast<Eigen::Index>(p.d - 1));
    for (std::size_t a = 0; a < A; ++a) abar += weights[static_cast<Eigen::Index>(a)] * hard_action_vector(p.d, a);
    const double best = p.mu_signs[h].cwiseAbs().sum();
    total += best - p.mu_signs[h].dot(abar);
  }
  r.rhs = p.gamma * static_cast<double>(p.H) / 10.0 * total;
  r.holds = r.lhs >= r.rhs - 1e-9;
  return r;
}

/// Action index of a sign pattern (+1 -> bit set).
inline std::size_t hard_action_index(const Vector& signs) {
  std::size_t a = 0;
  for (Eigen::Index j = 0; j < signs.size(); ++j)
    if (signs[j] > 0.0) a |= std::size_t{1} << j;
  return a;
}

/// Same action in every state of a stage; `flip` picks the anti-aligned action.
inline Policy hard_sign_policy(const HardInstanceParams& p, bool flip) {
  const std::size_t S = p.H + 2;
  std::vector<std::vector<std::size_t>> actions;
  for (std::size_t h = 0; h < p.H; ++h) {
    const Vector signs = flip ? Vector(-p.mu_signs[h]) : p.mu_signs[h];
    actions.emplace_back(S, hard_action_index(signs));
  }
  return Policy::deterministic(actions, p.num_actions());
}

/// Seeded random policy: deterministic random actions, or (stochastic) a
/// flat-Dirichlet action law per (state, stage).
inline Policy random_hard_policy(const HardInstanceParams& p, std::uint64_t seed, bool stochastic) {
  Rng rng(seed, streams::kPolicy);
  const auto S = static_cast<Eigen::Index>(p.H + 2);
  const auto A = p.num_actions();
  Policy pi;
  for (std::size_t h = 0; h < p.H; ++h) {
    Matrix m = Matrix::Zero(S, static_cast<Eigen::Index>(A));
    for (Eigen::Index s = 0; s < S; ++s) {
      if (stochastic) {
        const auto w = rng.simplex(A);
        for (std::size_t a = 0; a < A; ++a) m(s, static_cast<Eigen::Index>(a)) = w[a];
      } else {
        m(s, static_cast<Eigen::Index>(rng.index(A))) = 1.0;
      }
    }
    pi.probs.push_back(std::move(m));
  }
  return pi;
}

}  // namespace o2o
