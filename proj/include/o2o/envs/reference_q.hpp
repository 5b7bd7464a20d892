#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace o2o {

/// Stand-in for an offline-pretrained action-value function: one S x A table
/// per stage plus the metadata describing how it relates to Q*.
struct ReferenceQ {
  std::vector<Matrix> values;
  double beta = 0.0;
  std::vector<Triple> planted_set;
  double tau = 0.0;

  std::size_t horizon() const noexcept { return values.size(); }
  std::size_t num_states() const noexcept { return values.empty() ? 0 : static_cast<std::size_t>(values[0].rows()); }
  std::size_t num_actions() const noexcept { return values.empty() ? 0 : static_cast<std::size_t>(values[0].cols()); }
  double at(std::size_t h, std::size_t s, std::size_t a) const {
    return values[h](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
};

/// Checks shapes and the [0, H] range; throws SchemaError with a field path.
inline void validate(const ReferenceQ& q) {
  const auto H = q.horizon();
  if (H == 0) throw SchemaError("/values", "no stages");
  const auto S = q.num_states(), A = q.num_actions();
  if (S == 0 || A == 0) throw SchemaError("/values/0", "empty table");
  const double top = static_cast<double>(H);
  for (std::size_t h = 0; h < H; ++h) {
    const auto& v = q.values[h];
    if (static_cast<std::size_t>(v.rows()) != S || static_cast<std::size_t>(v.cols()) != A)
      throw SchemaError("/values/" + std::to_string(h), "inconsistent table shape");
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j)
        if (!(v(i, j) >= 0.0 && v(i, j) <= top))
          throw SchemaError("/values/" + std::to_string(h) + "/" + std::to_string(i) + "/" + std::to_string(j),
                            "value outside [0, H]");
  }
  if (!(q.beta > 0.0)) throw SchemaError("/beta", "beta must be positive");
  if (!(q.tau >= 0.0)) throw SchemaError("/tau", "tau must be nonnegative");
  for (std::size_t i = 0; i < q.planted_set.size(); ++i) {
    const auto& t = q.planted_set[i];
    if (t.s >= S || t.a >= A || t.h >= H)
      throw SchemaError("/planted_set/" + std::to_string(i), "triple out of range");
  }
}

enum class GapMode {
  /// Planted gaps equal beta exactly.
  Exact,
  /// Planted gaps drawn uniformly from [beta, 2*beta].
  Sampled,
};

struct PlantOptions {
  /// Per-triple shift direction (+1 or -1); empty means +1 everywhere.
  std::vector<int> shift_signs;
  GapMode gap_mode = GapMode::Exact;
};

/// Q_ref equal to Q* off `planted` and Q* +- gap on it. A shift that would
/// leave [0, H] is flipped; InfeasibleGap if both directions leave the range.
inline ReferenceQ make_reference_q(const LinearMdp& mdp, const std::vector<Matrix>& q_star,
                                   const std::vector<Triple>& planted, double beta,
                                   const PlantOptions& options = {}, std::uint64_t seed = 0) {
  const auto H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  const double top = static_cast<double>(H);
  if (!(beta > 0.0 && beta <= top)) throw InvalidArgument("beta must lie in (0, H]");
  if (q_star.size() != H) throw InvalidArgument("q_star has the wrong number of stages");
  if (!options.shift_signs.empty() && options.shift_signs.size() != planted.size())
    throw InvalidArgument("shift_signs must match planted_set in length");

  std::set<Triple> seen;
  for (const auto& t : planted) {
    if (t.s >= S || t.a >= A || t.h >= H) throw InvalidArgument("planted triple out of range");
    if (!seen.insert(t).second) throw InvalidArgument("planted triple listed twice");
  }

  Rng rng(seed, streams::kRefGen);
  ReferenceQ out;
  out.values = q_star;
  out.beta = beta;
  out.tau = 0.0;
  out.planted_set = planted;
  for (std::size_t i = 0; i < planted.size(); ++i) {
    const auto& t = planted[i];
    const double gap = options.gap_mode == GapMode::Exact ? beta : rng.uniform(beta, 2.0 * beta);
    int sign = options.shift_signs.empty() ? +1 : options.shift_signs[i];
    if (sign != 1 && sign != -1) throw InvalidArgument("shift sign must be +1 or -1");
    const double base = q_star[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a));
    auto fits = [&](int sg) {
      const double v = base + sg * gap;
      return v >= 0.0 && v <= top;
    };
    if (!fits(sign)) sign = -sign;
    if (!fits(sign))
      throw InfeasibleGap("gap " + std::to_string(gap) + " at (s=" + std::to_string(t.s) + ", a=" +
                          std::to_string(t.a) + ", h=" + std::to_string(t.h) +
                          ") leaves [0, H] in both directions");
    out.values[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a)) = base + sign * gap;
  }
  return out;
}

/// True when `t` can carry a gap of `gap` in at least one direction.
inline bool gap_feasible(const std::vector<Matrix>& q_star, const Triple& t, double gap, double horizon) {
  const double v = q_star[t.h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a));
  return v + gap <= horizon || v - gap >= 0.0;
}

/// Adds uniform noise on [-tau, tau] to every entry (then clips to [0, H]).
/// Outside the theory range tau <= beta/2 the call is rejected unless
/// `allow_out_of_theory` is set, in which case a warning is printed.
inline ReferenceQ make_misspecified_reference(const ReferenceQ& q_ref, double tau, std::uint64_t seed,
                                              bool allow_out_of_theory = false) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (tau > 0.5 * q_ref.beta) {
    if (!allow_out_of_theory)
      throw InvalidArgument("tau = " + std::to_string(tau) + " exceeds beta/2 = " + std::to_string(0.5 * q_ref.beta));
    std::cerr << "warning: tau exceeds beta/2; misspecification guarantees do not apply\n";
  }
  const double top = static_cast<double>(q_ref.horizon());
  Rng rng(seed, streams::kNoise);
  ReferenceQ out = q_ref;
  out.tau = tau;
  double worst = 0.0;
  for (std::size_t h = 0; h < out.horizon(); ++h) {
    auto& v = out.values[h];
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double noisy = std::clamp(v(i, j) + rng.uniform(-tau, tau), 0.0, top);
        worst = std::max(worst, std::abs(noisy - q_ref.values[h](i, j)));
        v(i, j) = noisy;
      }
  }
  if (worst > tau) throw NumericalDegeneracy("misspecification noise exceeded tau");
  return out;
}

}  // namespace o2o
