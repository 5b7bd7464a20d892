#pragma once

#include "o2o/envs/serialize.hpp"
#include "o2o/harness/run.hpp"
#include "o2o/oracle/coverage.hpp"
#include "o2o/oracle/hard_instance.hpp"
#include "o2o/oracle/values.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace o2o::harness {

/// H^3 (d-1)^2 / (24^2 eps^2): episodes below which no algorithm can be
/// eps-optimal on the whole hard family. Reported for context only.
inline double hard_instance_episode_floor(std::size_t d, std::size_t H, double epsilon) {
  const double h = static_cast<double>(H), m = static_cast<double>(d - 1);
  return h * h * h * m * m / (576.0 * epsilon * epsilon);
}

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct HardInstanceVerification {
  HardInstanceReport instance;
  std::vector<CheckLine> checks;
  double floor = 0.0;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  Json to_json() const {
    Json j;
    j["schema"] = "o2o-hard-instance-report/1";
    j["version"] = kVersion;
    j["delta"] = instance.delta;
    j["gamma"] = instance.gamma;
    j["epsilon"] = instance.epsilon;
    j["zeta"] = instance.zeta;
    j["max_deviation"] = instance.max_deviation;
    j["worst_row_error"] = instance.worst_row_error;
    j["episode_floor"] = floor;
    Json list = Json::array();
    for (const auto& c : checks) list.push_back({{"name", c.name}, {"status", c.pass ? "PASS" : "FAIL"}, {"detail", c.detail}});
    j["checks"] = list;
    j["passed"] = all_pass();
    return j;
  }
};

/// Instance validity plus the lower-bound decomposition on the optimal,
/// anti-optimal and uniform policies and five seeded random ones.
/// Throws HypothesisViolation when the parameters are outside the family.
inline HardInstanceVerification verify_hard_instance(std::size_t d, std::size_t H, double epsilon, double zeta,
                                                     std::uint64_t seed) {
  if (d < 2) throw HypothesisViolation("d must be at least 2");
  if (H < 3) throw HypothesisViolation("H must be at least 3");
  if (!(epsilon > 0.0)) throw HypothesisViolation("epsilon must be positive");
  if (!(zeta > 0.0 && zeta < 0.5)) throw HypothesisViolation("zeta must lie in (0, 1/2)");
  if (epsilon > zeta * static_cast<double>(H)) throw HypothesisViolation("epsilon exceeds zeta*H");

  HardInstanceVerification v;
  const auto p = make_hard_params(d, H, epsilon, seed, true);
  validate(p);
  v.instance = check_hard_instance(p, zeta);
  v.floor = hard_instance_episode_floor(d, H, epsilon);
  v.checks.push_back({"rows_valid", v.instance.rows_valid, "worst |row sum - 1| = " + format_double(v.instance.worst_row_error)});
  v.checks.push_back({"q_ref_within_epsilon", v.instance.within_epsilon,
                      "max |Q_ref - Q*| = " + format_double(v.instance.max_deviation) + " <= " + format_double(epsilon)});

  std::vector<std::pair<std::string, Policy>> policies;
  policies.emplace_back("lb_optimal", hard_sign_policy(p, false));
  policies.emplace_back("lb_anti_optimal", hard_sign_policy(p, true));
  policies.emplace_back("lb_uniform", Policy::uniform(make_hard_instance(p)));
  for (std::size_t i = 0; i < 5; ++i)
    policies.emplace_back("lb_random_" + std::to_string(i), random_hard_policy(p, seed + i + 1, i % 2 == 1));
  for (const auto& [name, pi] : policies) {
    const auto lb = lb_decomposition_check(p, pi);
    v.checks.push_back({name, lb.holds, "lhs = " + format_double(lb.lhs) + ", rhs = " + format_double(lb.rhs)});
  }
  return v;
}

/// Q*, V* and, with a reference, its separation and coverage.
inline Json oracle_report(const LinearMdp& mdp, const std::optional<ReferenceQ>& ref) {
  const auto values = solve_optimal(mdp);
  Json j;
  j["schema"] = "o2o-oracle-report/1";
  j["version"] = kVersion;
  j["v1"] = initial_value(mdp, values);
  Json q = Json::array(), v = Json::array();
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    q.push_back(o2o::detail::to_json(values.q[h]));
    v.push_back(o2o::detail::to_json(values.v[h]));
  }
  j["q_star"] = q;
  j["v_star"] = v;
  j["bellman_residual"] = bellman_residual(mdp, values);
  if (ref) {
    if (ref->horizon() != mdp.horizon() || ref->num_states() != mdp.num_states() ||
        ref->num_actions() != mdp.num_actions())
      throw SchemaError("/values", "reference shape does not match the environment");
    Json r;
    r["beta"] = ref->beta;
    r["tau"] = ref->tau;
    if (ref->tau == 0.0) {
      const auto sep = verify_beta_separation(*ref, values, ref->beta);
      r["separation_holds"] = sep.holds;
      r["min_nonzero_gap"] = std::isfinite(sep.min_nonzero_gap) ? Json(sep.min_nonzero_gap) : Json();
      Json bad = Json::array();
      for (const auto& t : sep.violating_triples) bad.push_back({t.s, t.a, t.h});
      r["violating_triples"] = bad;
      r["rho"] = compute_rho(mdp, *ref, values);
    } else {
      r["note"] = "separation and rho are defined only for tau = 0";
      r["rho"] = Json();
    }
    j["ref"] = r;
  }
  return j;
}

}  // namespace o2o::harness
