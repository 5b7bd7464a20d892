#pragma once

#include "o2o/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace o2o {

/// Regularized design matrix Lambda = lambda*I + sum phi phi^T with an
/// inverse maintained by Sherman-Morrison rank-one updates.
///
/// Every `kCheckPeriod` absorbs the product Lambda * Lambda_inv is compared
/// against the identity; if the max-norm drift exceeds `kDriftTol` the
/// inverse is recomputed from a Cholesky factorization.
class RidgeState {
 public:
  static constexpr std::size_t kCheckPeriod = 64;
  static constexpr double kDriftTol = 1e-8;

  RidgeState(std::size_t d, double lambda)
      : lambda_(lambda),
        gram_(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) * lambda),
        gram_inv_(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) / lambda),
        xty_(Vector::Zero(static_cast<Eigen::Index>(d))) {
    if (d == 0) throw InvalidArgument("ridge dimension must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("ridge lambda must be positive");
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(xty_.size()); }
  double lambda() const noexcept { return lambda_; }
  std::size_t count() const noexcept { return n_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Matrix& gram_inv() const noexcept { return gram_inv_; }
  const Vector& xty() const noexcept { return xty_; }

  template <class Phi>
  void absorb(const Phi& phi_in, double y = 0.0) {
    const Vector phi = phi_in;
    if (static_cast<std::size_t>(phi.size()) != dim()) throw InvalidArgument("feature has the wrong dimension");
    if (!phi.allFinite() || !std::isfinite(y)) throw InvalidArgument("non-finite sample");
    gram_.noalias() += phi * phi.transpose();
    const Vector u = gram_inv_ * phi;
    const double denom = 1.0 + phi.dot(u);
    gram_inv_.noalias() -= (u * u.transpose()) / denom;
    xty_ += y * phi;
    ++n_;
    if (++since_check_ >= kCheckPeriod) {
      since_check_ = 0;
      if (inverse_drift() > kDriftTol) refactor();
    }
  }

  /// max |Lambda * Lambda_inv - I|.
  double inverse_drift() const {
    const auto d = static_cast<Eigen::Index>(dim());
    return (gram_ * gram_inv_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }

  /// Recomputes the inverse from scratch.
  void refactor() {
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::LLT<Matrix> llt(gram_);
    if (llt.info() != Eigen::Success) throw NumericalDegeneracy("design matrix is not positive definite");
    gram_inv_ = llt.solve(Matrix::Identity(d, d));
    gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
    if (inverse_drift() > kDriftTol) throw NumericalDegeneracy("design matrix inverse is inaccurate after re-solve");
  }

  /// Lambda_inv * rhs.
  Vector solve(const Vector& rhs) const { return gram_inv_ * rhs; }

  /// Ridge weights for the absorbed targets.
  Vector weights() const { return solve(xty_); }

  template <class Phi>
  double predict(const Phi& phi) const {
    return Vector(phi).dot(weights());
  }

  /// Elliptical width sqrt(phi^T Lambda_inv phi).
  template <class Phi>
  double bonus(const Phi& phi_in) const {
    const Vector phi = phi_in;
    const double quad = phi.dot(gram_inv_ * phi);
    if (quad < -1e-10) throw NumericalDegeneracy("negative quadratic form in bonus: " + std::to_string(quad));
    return std::sqrt(std::max(quad, 0.0));
  }

 private:
  double lambda_;
  Matrix gram_;
  Matrix gram_inv_;
  Vector xty_;
  std::size_t n_ = 0;
  std::size_t since_check_ = 0;
};

enum class RadiusSchedule { Fixed, Growing };

/// Confidence radius alpha_k = c_alpha * H * sqrt(log((k+1) * H * n_eff / delta)).
/// `n_eff` stands in for the covering-number product; 0 means "use d".
struct ConfidenceConfig {
  double c_alpha = 0.25;
  double delta = 0.05;
  double n_eff = 0.0;
  RadiusSchedule schedule = RadiusSchedule::Growing;
};

inline void validate(const ConfidenceConfig& c) {
  if (!(c.c_alpha > 0.0)) throw InvalidArgument("c_alpha must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(c.n_eff >= 1.0)) throw InvalidArgument("n_eff must be at least 1");
}

/// `K` is the total episode count, used by the fixed schedule.
inline double alpha_k(const ConfidenceConfig& cfg, std::size_t k, std::size_t H, std::size_t K = 0) {
  if (k == 0) throw InvalidArgument("episode index starts at 1");
  const std::size_t episode = cfg.schedule == RadiusSchedule::Fixed && K > 0 ? K : k;
  const double arg = static_cast<double>(episode + 1) * static_cast<double>(H) * cfg.n_eff / cfg.delta;
  return cfg.c_alpha * static_cast<double>(H) * std::sqrt(std::log(arg));
}

/// sum_i min(H^2, phi_i^T (lambda I + sum_{l<i} phi_l phi_l^T)^{-1} phi_i) on
/// the given ordered feature sequence.
inline double realized_eluder(std::span<const Vector> points, double lambda, std::size_t H) {
  if (points.empty()) throw InvalidArgument("realized_eluder needs at least one point");
  RidgeState state(static_cast<std::size_t>(points.front().size()), lambda);
  const double cap = static_cast<double>(H) * static_cast<double>(H);
  double total = 0.0;
  for (const auto& phi : points) {
    const double b = state.bonus(phi);
    total += std::min(cap, b * b);
    state.absorb(phi);
  }
  return total;
}

}  // namespace o2o
