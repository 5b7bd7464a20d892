#pragma once

#include "o2o/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace o2o {

/// Finite-support episodic MDP with linear structure:
///   P_h(s'|s,a) = phi(s,a)^T M_h[:, s'],   r_h(s,a) = phi(s,a)^T theta_h.
///
/// Feature rows are indexed by s * A + a. Stages are 0-based (h = 0 .. H-1).
/// The dense transition and reward tables implied by the linear parameters
/// are computed once and validated at construction; the object is immutable.
class LinearMdp {
 public:
  static constexpr double kRowSumTol = 1e-9;
  static constexpr double kNegativeTol = 1e-12;
  static constexpr double kInitSumTol = 1e-12;
  static constexpr double kRewardTol = 1e-12;

  LinearMdp(std::size_t d, std::size_t horizon, std::vector<std::string> states,
            std::vector<std::string> actions, Vector init_dist, Matrix features,
            std::vector<Matrix> next_weights, std::vector<Vector> reward_params)
      : d_(d),
        horizon_(horizon),
        states_(std::move(states)),
        actions_(std::move(actions)),
        init_(std::move(init_dist)),
        features_(std::move(features)),
        next_weights_(std::move(next_weights)),
        reward_params_(std::move(reward_params)) {
    validate_shapes();
    build_tables();
  }

  std::size_t d() const noexcept { return d_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions() const noexcept { return actions_.size(); }
  std::size_t num_pairs() const noexcept { return states_.size() * actions_.size(); }
  std::size_t row(std::size_t s, std::size_t a) const noexcept { return s * actions_.size() + a; }

  const std::vector<std::string>& state_names() const noexcept { return states_; }
  const std::vector<std::string>& action_names() const noexcept { return actions_; }
  const Vector& init_dist() const noexcept { return init_; }
  const Matrix& features() const noexcept { return features_; }
  const Matrix& next_weights(std::size_t h) const { return next_weights_.at(h); }
  const Vector& reward_params(std::size_t h) const { return reward_params_.at(h); }

  auto phi(std::size_t s, std::size_t a) const { return features_.row(row(s, a)); }

  /// Dense (S*A) x S transition table of stage h, negatives clamped to 0.
  const Matrix& transition(std::size_t h) const { return transitions_.at(h); }
  auto transition_row(std::size_t h, std::size_t s, std::size_t a) const {
    return transitions_[h].row(row(s, a));
  }

  /// Length S*A reward table of stage h.
  const Vector& reward(std::size_t h) const { return rewards_.at(h); }
  double reward(std::size_t h, std::size_t s, std::size_t a) const { return rewards_[h][row(s, a)]; }

 private:
  void validate_shapes() const {
    if (d_ == 0) throw SchemaError("/d", "feature dimension must be positive");
    if (horizon_ == 0) throw SchemaError("/H", "horizon must be positive");
    if (states_.empty()) throw SchemaError("/states", "state list is empty");
    if (actions_.empty()) throw SchemaError("/actions", "action list is empty");
    const auto S = states_.size();
    const auto SA = S * actions_.size();
    if (static_cast<std::size_t>(init_.size()) != S)
      throw SchemaError("/init_dist", "expected " + std::to_string(S) + " entries");
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      if (!std::isfinite(init_[s]) || init_[s] < 0.0)
        throw SchemaError("/init_dist/" + std::to_string(s), "must be a nonnegative number");
      total += init_[s];
    }
    if (std::abs(total - 1.0) > kInitSumTol)
      throw SchemaError("/init_dist", "sums to " + std::to_string(total) + ", expected 1");
    if (static_cast<std::size_t>(features_.rows()) != SA || static_cast<std::size_t>(features_.cols()) != d_)
      throw SchemaError("/features", "expected shape " + std::to_string(SA) + " x " + std::to_string(d_));
    if (!features_.allFinite()) throw SchemaError("/features", "non-finite entry");
    if (next_weights_.size() != horizon_)
      throw SchemaError("/next_weights", "expected " + std::to_string(horizon_) + " stages");
    if (reward_params_.size() != horizon_)
      throw SchemaError("/reward_params", "expected " + std::to_string(horizon_) + " stages");
    for (std::size_t h = 0; h < horizon_; ++h) {
      const auto& m = next_weights_[h];
      if (static_cast<std::size_t>(m.rows()) != d_ || static_cast<std::size_t>(m.cols()) != S)
        throw SchemaError("/next_weights/" + std::to_string(h),
                          "expected shape " + std::to_string(d_) + " x " + std::to_string(S));
      if (!m.allFinite()) throw SchemaError("/next_weights/" + std::to_string(h), "non-finite entry");
      if (static_cast<std::size_t>(reward_params_[h].size()) != d_)
        throw SchemaError("/reward_params/" + std::to_string(h), "expected " + std::to_string(d_) + " entries");
      if (!reward_params_[h].allFinite())
        throw SchemaError("/reward_params/" + std::to_string(h), "non-finite entry");
    }
  }

  void build_tables() {
    const auto S = states_.size();
    const auto A = actions_.size();
    transitions_.reserve(horizon_);
    rewards_.reserve(horizon_);
    for (std::size_t h = 0; h < horizon_; ++h) {
      const std::string where = "/next_weights/" + std::to_string(h);
      Matrix p = features_ * next_weights_[h];
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
          const auto i = static_cast<Eigen::Index>(row(s, a));
          const std::string pair = " at (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
          double sum = 0.0;
          for (Eigen::Index j = 0; j < p.cols(); ++j) {
            double& x = p(i, j);
            if (x < -kNegativeTol)
              throw SchemaError(where, "negative transition probability " + std::to_string(x) + pair);
            if (x < 0.0) x = 0.0;
            sum += x;
          }
          if (std::abs(sum - 1.0) > kRowSumTol)
            throw SchemaError(where, "transition row sums to " + std::to_string(sum) + pair);
        }
      }
      transitions_.push_back(std::move(p));

      Vector r = features_ * reward_params_[h];
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (r[i] < -kRewardTol || r[i] > 1.0 + kRewardTol)
          throw SchemaError("/reward_params/" + std::to_string(h),
                            "reward " + std::to_string(r[i]) + " outside [0, 1] at row " + std::to_string(i));
        r[i] = std::clamp(r[i], 0.0, 1.0);
      }
      rewards_.push_back(std::move(r));
    }
  }

  std::size_t d_;
  std::size_t horizon_;
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  Vector init_;
  Matrix features_;
  std::vector<Matrix> next_weights_;
  std::vector<Vector> reward_params_;

  std::vector<Matrix> transitions_;
  std::vector<Vector> rewards_;
};

/// Field-by-field comparison of the defining parameters.
inline bool approx_equal(const LinearMdp& x, const LinearMdp& y, double tol) {
  if (x.d() != y.d() || x.horizon() != y.horizon() || x.state_names() != y.state_names() ||
      x.action_names() != y.action_names())
    return false;
  auto close = [tol](const auto& p, const auto& q) {
    return p.rows() == q.rows() && p.cols() == q.cols() && (p - q).cwiseAbs().maxCoeff() <= tol;
  };
  if (!close(x.init_dist(), y.init_dist()) || !close(x.features(), y.features())) return false;
  for (std::size_t h = 0; h < x.horizon(); ++h) {
    if (!close(x.next_weights(h), y.next_weights(h)) || !close(x.reward_params(h), y.reward_params(h)))
      return false;
  }
  return true;
}

}  // namespace o2o
