#pragma once

#include "o2o/agent/lsvi.hpp"
#include "o2o/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace o2o::harness {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kCsvHeader =
    "episode,inst_regret,cum_regret,ref_branch_hits,ucb_branch_hits,max_width_visited,optimism_violation";

inline std::string run_csv(const RunResult& r) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& row : r.rows) {
    out += std::to_string(row.episode);
    out += ',';
    out += format_double(row.inst_regret);
    out += ',';
    out += format_double(row.cum_regret);
    out += ',';
    out += std::to_string(row.ref_branch_hits);
    out += ',';
    out += std::to_string(row.ucb_branch_hits);
    out += ',';
    out += format_double(row.max_width_visited);
    out += ',';
    out += std::to_string(row.optimism_violation);
    out += '\n';
  }
  return out;
}

/// REF-branch share over the last quarter of episodes (at least one).
inline double final_quarter_ref_fraction(const RunResult& r) {
  if (r.rows.empty()) return 0.0;
  const std::size_t tail = std::max<std::size_t>(1, r.rows.size() / 4);
  std::size_t ref = 0, all = 0;
  for (std::size_t i = r.rows.size() - tail; i < r.rows.size(); ++i) {
    ref += r.rows[i].ref_branch_hits;
    all += r.rows[i].ref_branch_hits + r.rows[i].ucb_branch_hits;
  }
  return all == 0 ? 0.0 : static_cast<double>(ref) / static_cast<double>(all);
}

inline Json summary_json(const RunConfig& c, const Prepared& p, const RunResult& r) {
  Json s;
  s["algo"] = algo_name(c.algo);
  s["K"] = c.K;
  s["seed"] = c.seed;
  s["d"] = p.mdp.d();
  s["H"] = p.mdp.horizon();
  s["num_states"] = p.mdp.num_states();
  s["num_actions"] = p.mdp.num_actions();
  s["v_star_init"] = initial_value(p.mdp, p.q_star);
  s["cum_regret"] = r.cum_regret();
  s["mean_regret"] = r.cum_regret() / static_cast<double>(c.K);
  s["ref_fraction"] = r.ref_fraction();
  s["final_quarter_ref_fraction"] = final_quarter_ref_fraction(r);
  s["ref_counts"] = r.ref_counts;
  s["ucb_counts"] = r.ucb_counts;
  s["wide_interval_counts"] = r.m_h_counts;
  s["width_threshold"] = r.width_threshold;
  s["optimism_violations"] = r.optimism_violations;
  s["optimism_checks"] = r.optimism_checks;
  s["optimism_violation_rate"] =
      r.optimism_checks == 0 ? 0.0 : static_cast<double>(r.optimism_violations) / static_cast<double>(r.optimism_checks);
  s["sandwich_violations"] = r.sandwich_violations;
  s["interval_inversions"] = r.interval_inversions;
  s["max_inverse_error"] = r.max_inverse_error;
  s["well_specified"] = r.well_specified;
  if (p.ref) {
    s["beta"] = p.beta;
    s["tau"] = p.ref->tau;
    s["planted_size"] = p.ref->planted_set.size();
  }
  // Well-specified-only quantities are reported as null under misspecification.
  const bool ws = p.ref && r.well_specified;
  s["ref_sound_checks"] = ws ? Json(r.ref_sound_checks) : Json();
  s["ref_unsound"] = ws ? Json(r.ref_unsound) : Json();
  s["realized_rho"] = p.realized_rho ? Json(*p.realized_rho) : Json();
  s["rho_within_tolerance"] = p.rho_within_tolerance;
  if (p.separation) {
    s["separation_holds"] = p.separation->holds;
    s["min_nonzero_gap"] =
        std::isfinite(p.separation->min_nonzero_gap) ? Json(p.separation->min_nonzero_gap) : Json();
  }
  return s;
}

struct RunArtifacts {
  RunResult result;
  std::string csv;
  std::string json;
  double elapsed_seconds = 0.0;
};

/// Runs a config in memory. Timing is kept out of `json` so that the
/// document is a pure function of the config.
inline RunArtifacts execute(const RunConfig& c) {
  const Prepared p = prepare(c);
  const AgentConfig agent = agent_config(c);
  RunArtifacts out;
  out.result = c.algo == Algo::O2oLsvi ? run_o2o_lsvi(p.mdp, *p.ref, p.beta, c.K, agent, c.seed)
                                       : run_lsvi_ucb(p.mdp, c.K, agent, c.seed);
  out.csv = run_csv(out.result);
  Json doc;
  doc["schema"] = kRunSchema;
  doc["version"] = kVersion;
  doc["config"] = to_json(c);
  doc["summary"] = summary_json(c, p, out.result);
  out.json = doc.dump(1) + "\n";
  out.elapsed_seconds = out.result.elapsed_seconds;
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

/// Writes run.csv, run.json and timing.json into `c.out_dir`.
inline RunArtifacts cmd_run(const RunConfig& c) {
  RunArtifacts a = execute(c);
  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  write_text_file(dir / "run.csv", a.csv);
  write_text_file(dir / "run.json", a.json);
  Json timing{{"elapsed_seconds", a.elapsed_seconds}};
  write_text_file(dir / "timing.json", timing.dump(1) + "\n");
  return a;
}

}  // namespace o2o::harness
