#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace o2o {

enum class InitMode { Uniform, FirstState, Random };

struct TabularParams {
  std::size_t S = 1;
  std::size_t A = 1;
  std::size_t H = 1;
  std::uint64_t seed = 0;
  /// Probability that an individual reward r_h(s,a) is exactly zero.
  double reward_sparsity = 0.0;
  /// When set, every reward equals this value instead of being sampled.
  std::optional<double> constant_reward;
  InitMode init = InitMode::Uniform;
};

/// Random tabular MDP as a one-hot linear MDP (d = S*A). Transition rows are
/// flat-Dirichlet draws, rewards are Uniform[0,1] zeroed with probability
/// `reward_sparsity`. Deterministic in `p.seed`.
inline LinearMdp make_tabular_random(const TabularParams& p) {
  if (p.S == 0 || p.A == 0 || p.H == 0) throw InvalidArgument("tabular instance needs S, A, H >= 1");
  if (!(p.reward_sparsity >= 0.0 && p.reward_sparsity <= 1.0))
    throw InvalidArgument("reward_sparsity must lie in [0, 1]");
  if (p.constant_reward && !(*p.constant_reward >= 0.0 && *p.constant_reward <= 1.0))
    throw InvalidArgument("constant_reward must lie in [0, 1]");

  const std::size_t S = p.S, A = p.A, H = p.H, d = S * A;
  Rng rng(p.seed, streams::kEnvGen);

  std::vector<Matrix> next(H, Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(S)));
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = rng.simplex(S);
      for (std::size_t j = 0; j < S; ++j) next[h](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }

  std::vector<Vector> theta(H, Vector::Zero(static_cast<Eigen::Index>(d)));
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < d; ++i) {
      const double gate = rng.uniform();
      const double value = rng.uniform();
      if (p.constant_reward)
        theta[h][static_cast<Eigen::Index>(i)] = *p.constant_reward;
      else
        theta[h][static_cast<Eigen::Index>(i)] = gate < p.reward_sparsity ? 0.0 : value;
    }

  Vector init = Vector::Zero(static_cast<Eigen::Index>(S));
  switch (p.init) {
    case InitMode::Uniform:
      init.setConstant(1.0 / static_cast<double>(S));
      break;
    case InitMode::FirstState:
      init[0] = 1.0;
      break;
    case InitMode::Random: {
      const auto w = rng.simplex(S);
      for (std::size_t s = 0; s < S; ++s) init[static_cast<Eigen::Index>(s)] = w[s];
      init /= init.sum();
      break;
    }
  }

  std::vector<std::string> states, actions;
  for (std::size_t s = 0; s < S; ++s) states.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < A; ++a) actions.push_back("a" + std::to_string(a));

  return LinearMdp(d, H, std::move(states), std::move(actions), std::move(init),
                   Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)),
                   std::move(next), std::move(theta));
}

// ---------------------------------------------------------------------------
// Lower-bound hard instance family.
//
// States x_1..x_H (indices 0..H-1), the trap x_B (index H) and the goal x_G
// (index H+1). Actions are the sign vectors {-1,+1}^(d-1); action index i has
// a_j = +1 iff bit j of i is set. Features live in R^(d+2):
//   phi(x_h, a) = (1, a, 0, 0),  phi(x_G, .) = (0, 0, 1, 0),  phi(x_B, .) = (0, 0, 0, 1).
// From a chain state at stage h the walk reaches x_G with probability
// 1/(2H) + gamma <mu_h, a> and otherwise continues to x_{h+1} (x_B after the
// last stage). Reward 1 on x_G only; x_G and x_B are absorbing.

inline constexpr std::size_t kMaxHardInstanceDim = 11;

inline double hard_instance_delta(std::size_t d, std::size_t H) {
  return 1.0 / (6.0 * static_cast<double>(d - 1) * static_cast<double>(H) * static_cast<double>(H));
}

struct HardInstanceParams {
  std::size_t d = 2;
  std::size_t H = 3;
  double epsilon = 0.01;
  /// Per stage, a vector in {-Delta, +Delta}^(d-1).
  std::vector<Vector> mu_signs;
  double gamma = 0.0;

  double delta() const { return hard_instance_delta(d, H); }
  std::size_t num_actions() const { return std::size_t{1} << (d - 1); }
};

/// Action vector in {-1,+1}^(d-1) for action index `a`.
inline Vector hard_action_vector(std::size_t d, std::size_t a) {
  Vector v(static_cast<Eigen::Index>(d - 1));
  for (std::size_t j = 0; j + 1 < d; ++j) v[static_cast<Eigen::Index>(j)] = ((a >> j) & 1U) ? 1.0 : -1.0;
  return v;
}

inline void validate(const HardInstanceParams& p) {
  if (p.d < 2) throw HypothesisViolation("hard instance needs d >= 2");
  if (p.d > kMaxHardInstanceDim) throw HypothesisViolation("hard instance caps d at 11 (A = 2^(d-1) <= 1024)");
  if (p.H < 3) throw HypothesisViolation("hard instance needs H >= 3");
  if (!(p.epsilon > 0.0)) throw HypothesisViolation("epsilon must be positive");
  if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma)) throw HypothesisViolation("gamma must be a nonnegative number");
  if (p.mu_signs.size() != p.H) throw HypothesisViolation("mu_signs needs one vector per stage");
  const double delta = p.delta();
  for (const auto& mu : p.mu_signs) {
    if (static_cast<std::size_t>(mu.size()) != p.d - 1) throw HypothesisViolation("mu_h must have d-1 entries");
    for (Eigen::Index j = 0; j < mu.size(); ++j)
      if (mu[j] != delta && mu[j] != -delta) throw HypothesisViolation("mu_h entries must be exactly +-Delta");
  }
  const double lhs = 3.0 * p.gamma * static_cast<double>(p.d - 1) * delta;
  if (lhs > 1.0 / (2.0 * static_cast<double>(p.H)))
    throw HypothesisViolation("probability validity 3*gamma*(d-1)*Delta <= 1/(2H) fails (" +
                              std::to_string(lhs) + ")");
}

/// Parameters with seeded sign vectors. `perturbed` selects gamma = 6*eps
/// (the member M) versus gamma = 0 (the reference member M_ref).
inline HardInstanceParams make_hard_params(std::size_t d, std::size_t H, double epsilon, std::uint64_t seed,
                                           bool perturbed = true) {
  HardInstanceParams p;
  p.d = d;
  p.H = H;
  p.epsilon = epsilon;
  p.gamma = perturbed ? 6.0 * epsilon : 0.0;
  if (d < 2 || H == 0) throw HypothesisViolation("hard instance needs d >= 2 and H >= 3");
  const double delta = hard_instance_delta(d, H);
  Rng rng(seed, streams::kEnvGen);
  for (std::size_t h = 0; h < H; ++h) {
    Vector mu(static_cast<Eigen::Index>(d - 1));
    for (Eigen::Index j = 0; j < mu.size(); ++j) mu[j] = (rng.next_u64() & 1U) ? delta : -delta;
    p.mu_signs.push_back(std::move(mu));
  }
  return p;
}

inline LinearMdp make_hard_instance(const HardInstanceParams& p) {
  validate(p);
  const std::size_t H = p.H;
  const std::size_t A = p.num_actions();
  const std::size_t S = H + 2;
  const std::size_t D = p.d + 2;
  const std::size_t kTrap = H, kGoal = H + 1;
  const auto goal_coord = static_cast<Eigen::Index>(p.d);
  const auto trap_coord = static_cast<Eigen::Index>(p.d + 1);

  Matrix features = Matrix::Zero(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(D));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const auto i = static_cast<Eigen::Index>(s * A + a);
      if (s == kGoal) {
        features(i, goal_coord) = 1.0;
      } else if (s == kTrap) {
        features(i, trap_coord) = 1.0;
      } else {
        features(i, 0) = 1.0;
        features.row(i).segment(1, static_cast<Eigen::Index>(p.d - 1)) = hard_action_vector(p.d, a).transpose();
      }
    }

  const double base = 1.0 / (2.0 * static_cast<double>(H));
  std::vector<Matrix> next;
  std::vector<Vector> theta;
  for (std::size_t h = 0; h < H; ++h) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(S));
    const auto cont = static_cast<Eigen::Index>(h + 1 < H ? h + 1 : kTrap);
    const auto goal = static_cast<Eigen::Index>(kGoal);
    const auto tail = static_cast<Eigen::Index>(p.d - 1);
    m(0, cont) = 1.0 - base;
    m.col(cont).segment(1, tail) = -p.gamma * p.mu_signs[h];
    m(0, goal) = base;
    m.col(goal).segment(1, tail) = p.gamma * p.mu_signs[h];
    m(goal_coord, goal) = 1.0;
    m(trap_coord, static_cast<Eigen::Index>(kTrap)) = 1.0;
    next.push_back(std::move(m));

    Vector t = Vector::Zero(static_cast<Eigen::Index>(D));
    t[goal_coord] = 1.0;
    theta.push_back(std::move(t));
  }

  Vector init = Vector::Zero(static_cast<Eigen::Index>(S));
  init[0] = 1.0;

  std::vector<std::string> states, actions;
  for (std::size_t h = 0; h < H; ++h) states.push_back("x" + std::to_string(h + 1));
  states.emplace_back("xB");
  states.emplace_back("xG");
  for (std::size_t a = 0; a < A; ++a) {
    std::string name;
    for (std::size_t j = 0; j + 1 < p.d; ++j) name += ((a >> j) & 1U) ? '+' : '-';
    actions.push_back(std::move(name));
  }
  return LinearMdp(D, H, std::move(states), std::move(actions), std::move(init), std::move(features),
                   std::move(next), std::move(theta));
}

}  // namespace o2o
