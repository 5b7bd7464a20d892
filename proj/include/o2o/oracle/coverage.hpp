#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/envs/reference_q.hpp"
#include "o2o/oracle/values.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace o2o {

/// Reference entries within this distance of Q* count as exact matches.
inline constexpr double kMatchTol = 1e-12;

/// Per-stage mismatch indicator 1(Q_ref != Q*).
inline std::vector<Matrix> mismatch_mask(const ReferenceQ& q_ref, const StagewiseValues& q_star) {
  std::vector<Matrix> mask;
  for (std::size_t h = 0; h < q_star.horizon(); ++h)
    mask.push_back(((q_ref.values[h] - q_star.q[h]).cwiseAbs().array() > kMatchTol).cast<double>().matrix());
  return mask;
}

/// Largest occupancy mass any policy can put on `mask` at a single stage.
///
/// For each target stage the auxiliary MDP pays 1 on masked pairs at that
/// stage only; its optimal value from the initial distribution is exactly the
/// supremum over policies of the occupancy mass on the mask.
inline double max_occupancy_mass(const LinearMdp& mdp, const std::vector<Matrix>& mask) {
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const auto A = static_cast<Eigen::Index>(mdp.num_actions());
  double rho = 0.0;
  for (std::size_t target = 0; target < mdp.horizon(); ++target) {
    if (mask[target].maxCoeff() <= 0.0) continue;
    Vector v(S);
    for (Eigen::Index s = 0; s < S; ++s) v[s] = mask[target].row(s).maxCoeff();
    for (std::size_t h = target; h-- > 0;) {
      const Vector flat = mdp.transition(h) * v;
      const Eigen::Map<const Matrix> q(flat.data(), S, A);
      v = q.rowwise().maxCoeff();
    }
    rho = std::max(rho, mdp.init_dist().dot(v));
  }
  return rho;
}

/// Accuracy-coverage coefficient rho of a well-specified reference.
inline double compute_rho(const LinearMdp& mdp, const ReferenceQ& q_ref, const StagewiseValues& q_star) {
  if (q_ref.tau > 0.0)
    throw MisspecifiedInput("rho is defined only for a well-specified reference (tau = 0)");
  return max_occupancy_mass(mdp, mismatch_mask(q_ref, q_star));
}

struct SeparationReport {
  bool holds = true;
  /// Smallest gap above the match tolerance; +inf when Q_ref == Q* everywhere.
  double min_nonzero_gap = std::numeric_limits<double>::infinity();
  std::vector<Triple> violating_triples;
};

inline SeparationReport verify_beta_separation(const ReferenceQ& q_ref, const StagewiseValues& q_star, double beta) {
  if (q_ref.tau > 0.0)
    throw MisspecifiedInput("beta-separation is checked only for a well-specified reference (tau = 0)");
  SeparationReport report;
  for (std::size_t h = 0; h < q_star.horizon(); ++h) {
    const auto& qr = q_ref.values[h];
    for (Eigen::Index s = 0; s < qr.rows(); ++s)
      for (Eigen::Index a = 0; a < qr.cols(); ++a) {
        const double gap = std::abs(qr(s, a) - q_star.q[h](s, a));
        if (gap <= kMatchTol) continue;
        report.min_nonzero_gap = std::min(report.min_nonzero_gap, gap);
        if (gap < beta - kMatchTol) {
          report.holds = false;
          report.violating_triples.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(a), h});
        }
      }
  }
  return report;
}

}  // namespace o2o
