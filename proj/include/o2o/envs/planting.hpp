#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/envs/reference_q.hpp"
#include "o2o/oracle/coverage.hpp"
#include "o2o/oracle/values.hpp"
#include "o2o/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace o2o {

struct PlantingResult {
  std::vector<Triple> planted_set;
  double rho = 0.0;
  /// Whether rho landed within the relative tolerance of the target.
  bool within_tolerance = false;
};

/// Greedy search for a planted set whose coverage coefficient is close to
/// `target`: starting from `initial`, repeatedly add the gap-feasible triple
/// that moves rho closest to the target, stopping once rho is within
/// `rel_tol * target` or no addition helps. Exact inverse control of rho is
/// not attempted; the realized value is returned.
inline PlantingResult plant_for_rho(const LinearMdp& mdp, const StagewiseValues& q_star, double beta, double target,
                                    std::uint64_t seed, double rel_tol = 0.2, std::vector<Triple> initial = {}) {
  if (!(target >= 0.0 && target <= 1.0)) throw InvalidArgument("rho target must lie in [0, 1]");
  const auto H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  const double top = static_cast<double>(H);

  std::vector<Matrix> mask(H, Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A)));
  for (const auto& t : initial) mask[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a)) = 1.0;

  std::vector<Triple> candidates;
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const Triple t{s, a, h};
        if (mask[h](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) == 0.0 &&
            gap_feasible(q_star.q, t, beta, top))
          candidates.push_back(t);
      }
  Rng rng(seed, streams::kRefGen);
  rng.shuffle(candidates);

  PlantingResult out;
  out.planted_set = std::move(initial);
  out.rho = max_occupancy_mass(mdp, mask);
  auto done = [&] { return std::abs(out.rho - target) <= rel_tol * target; };
  while (!done() && !candidates.empty()) {
    std::size_t best = candidates.size();
    double best_err = std::abs(out.rho - target);
    double best_rho = out.rho;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto& t = candidates[c];
      auto& cell = mask[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a));
      cell = 1.0;
      const double rho = max_occupancy_mass(mdp, mask);
      cell = 0.0;
      const double err = std::abs(rho - target);
      if (err < best_err) {
        best_err = err;
        best = c;
        best_rho = rho;
      }
    }
    if (best == candidates.size()) break;
    const Triple t = candidates[best];
    mask[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a)) = 1.0;
    out.planted_set.push_back(t);
    out.rho = best_rho;
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
  }
  out.within_tolerance = done();
  return out;
}

}  // namespace o2o
