#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace o2o {

/// Q and V tables per stage. `v` carries H+1 entries; v[H] is identically 0.
struct StagewiseValues {
  std::vector<Matrix> q;
  std::vector<Vector> v;

  std::size_t horizon() const noexcept { return q.size(); }
  double at(std::size_t h, std::size_t s, std::size_t a) const {
    return q[h](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
};

/// Markov policy: for each stage an S x A matrix of action probabilities.
struct Policy {
  std::vector<Matrix> probs;

  static Policy deterministic(const std::vector<std::vector<std::size_t>>& actions, std::size_t num_actions) {
    Policy p;
    for (const auto& stage : actions) {
      Matrix m = Matrix::Zero(static_cast<Eigen::Index>(stage.size()), static_cast<Eigen::Index>(num_actions));
      for (std::size_t s = 0; s < stage.size(); ++s) m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(stage[s])) = 1.0;
      p.probs.push_back(std::move(m));
    }
    return p;
  }

  static Policy uniform(const LinearMdp& mdp) {
    Policy p;
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    const auto A = static_cast<Eigen::Index>(mdp.num_actions());
    p.probs.assign(mdp.horizon(), Matrix::Constant(S, A, 1.0 / static_cast<double>(A)));
    return p;
  }
};

/// argmax over a row of Q values; ties go to the lowest action index.
template <class Row>
std::size_t argmax_lowest(const Row& row) {
  std::size_t best = 0;
  for (Eigen::Index a = 1; a < row.size(); ++a)
    if (row[a] > row[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(a);
  return best;
}

/// Deterministic policy acting greedily on the given Q tables.
inline Policy greedy_policy(const std::vector<Matrix>& q) {
  Policy p;
  for (const auto& stage : q) {
    Matrix m = Matrix::Zero(stage.rows(), stage.cols());
    for (Eigen::Index s = 0; s < stage.rows(); ++s) m(s, static_cast<Eigen::Index>(argmax_lowest(stage.row(s)))) = 1.0;
    p.probs.push_back(std::move(m));
  }
  return p;
}

namespace detail {

/// r_h + P_h v_next reshaped to S x A.
inline Matrix bellman_backup(const LinearMdp& mdp, std::size_t h, const Vector& v_next) {
  const Vector flat = mdp.reward(h) + mdp.transition(h) * v_next;
  return Eigen::Map<const Matrix>(flat.data(), static_cast<Eigen::Index>(mdp.num_states()),
                                  static_cast<Eigen::Index>(mdp.num_actions()));
}

}  // namespace detail

/// Backward induction for Q* and V*.
inline StagewiseValues solve_optimal(const LinearMdp& mdp) {
  const auto H = mdp.horizon();
  StagewiseValues out;
  out.q.resize(H);
  out.v.assign(H + 1, Vector::Zero(static_cast<Eigen::Index>(mdp.num_states())));
  for (std::size_t h = H; h-- > 0;) {
    out.q[h] = detail::bellman_backup(mdp, h, out.v[h + 1]);
    for (Eigen::Index s = 0; s < out.q[h].rows(); ++s) out.v[h][s] = out.q[h].row(s).maxCoeff();
  }
  return out;
}

inline StagewiseValues policy_eval(const LinearMdp& mdp, const Policy& pi) {
  const auto H = mdp.horizon();
  if (pi.probs.size() != H) throw InvalidArgument("policy must define every stage");
  StagewiseValues out;
  out.q.resize(H);
  out.v.assign(H + 1, Vector::Zero(static_cast<Eigen::Index>(mdp.num_states())));
  for (std::size_t h = H; h-- > 0;) {
    out.q[h] = detail::bellman_backup(mdp, h, out.v[h + 1]);
    out.v[h] = out.q[h].cwiseProduct(pi.probs[h]).rowwise().sum();
  }
  return out;
}

/// Expected initial value sum_s init(s) V_1(s).
inline double initial_value(const LinearMdp& mdp, const StagewiseValues& values) {
  return mdp.init_dist().dot(values.v[0]);
}

struct OccupancyMeasure {
  /// Per stage, S x A visit probabilities from the initial distribution.
  std::vector<Matrix> d;

  /// State marginal of stage h.
  Vector state_marginal(std::size_t h) const { return d[h].rowwise().sum(); }
};

inline OccupancyMeasure occupancy(const LinearMdp& mdp, const Policy& pi) {
  const auto H = mdp.horizon();
  if (pi.probs.size() != H) throw InvalidArgument("policy must define every stage");
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const auto A = static_cast<Eigen::Index>(mdp.num_actions());
  OccupancyMeasure out;
  Vector state = mdp.init_dist();
  for (std::size_t h = 0; h < H; ++h) {
    Matrix dh = pi.probs[h].array().colwise() * state.array();
    out.d.push_back(dh);
    const Eigen::Map<const Vector> flat(dh.data(), S * A);
    state = mdp.transition(h).transpose() * flat;
  }
  return out;
}

/// max over (s,a,h) of |Q_h - r_h - P_h V_{h+1}|.
inline double bellman_residual(const LinearMdp& mdp, const StagewiseValues& values) {
  double worst = 0.0;
  for (std::size_t h = 0; h < values.horizon(); ++h) {
    const Matrix backup = detail::bellman_backup(mdp, h, values.v[h + 1]);
    worst = std::max(worst, (values.q[h] - backup).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace o2o
