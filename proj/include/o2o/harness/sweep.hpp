#pragma once

#include "o2o/harness/config.hpp"
#include "o2o/harness/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

namespace o2o::harness {

inline constexpr std::size_t kDefaultCellCap = 10000;

struct SweepAxis {
  std::string name;
  std::vector<Json> values;
};

struct SweepConfig {
  /// The base config as a document; axis values are patched into it.
  Json base;
  std::filesystem::path base_dir;
  std::vector<SweepAxis> axes;
  std::size_t replication = 1;
  std::size_t cap = kDefaultCellCap;
  std::string out_dir = "sweep";
};

inline const std::vector<std::string>& sweep_axis_names() {
  static const std::vector<std::string> names{"K", "beta", "rho-target", "tau", "d", "H", "seed"};
  return names;
}

inline std::size_t cell_count(const SweepConfig& s) {
  std::size_t n = 1;
  for (const auto& a : s.axes) n *= a.values.size();
  return n;
}

inline SweepConfig sweep_from_json(const Json& doc, const std::filesystem::path& base_dir = {}) {
  o2o::detail::expect_schema(doc, kConfigSchema);
  SweepConfig s;
  s.base_dir = base_dir;
  s.base = o2o::detail::field(doc, "", "base");
  if (!s.base.contains("schema")) s.base["schema"] = kConfigSchema;
  if (const Json* r = detail::optional_field(doc, "replication")) {
    s.replication = o2o::detail::count(*r, "/replication");
    if (s.replication == 0) throw SchemaError("/replication", "must be at least 1");
  }
  if (const Json* c = detail::optional_field(doc, "cap")) s.cap = o2o::detail::count(*c, "/cap");
  if (const Json* o = detail::optional_field(doc, "out_dir")) s.out_dir = detail::text(*o, "/out_dir");
  if (const Json* axes = detail::optional_field(doc, "axes")) {
    if (!axes->is_object()) throw SchemaError("/axes", "expected an object of named value lists");
    const auto& known = sweep_axis_names();
    for (auto it = axes->begin(); it != axes->end(); ++it) {
      const std::string at = "/axes/" + it.key();
      if (std::find(known.begin(), known.end(), it.key()) == known.end())
        throw SchemaError(at, "unknown axis (expected K, beta, rho-target, tau, d, H or seed)");
      if (!it->is_array() || it->empty()) throw SchemaError(at, "expected a non-empty array");
      SweepAxis axis{it.key(), {}};
      for (std::size_t i = 0; i < it->size(); ++i) {
        if (!(*it)[i].is_number()) throw SchemaError(at + "/" + std::to_string(i), "expected a number");
        axis.values.push_back((*it)[i]);
      }
      s.axes.push_back(std::move(axis));
    }
  }
  if (cell_count(s) > s.cap)
    throw SchemaError("/axes", "sweep has " + std::to_string(cell_count(s)) + " cells, above the cap of " +
                                   std::to_string(s.cap));
  // Fail early on a malformed base rather than once per cell.
  (void)config_from_json(s.base, s.base_dir);
  return s;
}

inline SweepConfig load_sweep(const std::string& path) {
  return sweep_from_json(parse_document(read_text_file(path)), std::filesystem::path(path).parent_path());
}

/// Axis values of cell `index`; the last axis varies fastest.
inline std::vector<Json> cell_values(const SweepConfig& s, std::size_t index) {
  std::vector<Json> out(s.axes.size());
  for (std::size_t i = s.axes.size(); i-- > 0;) {
    const auto n = s.axes[i].values.size();
    out[i] = s.axes[i].values[index % n];
    index /= n;
  }
  return out;
}

inline void apply_axis(Json& doc, const std::string& name, const Json& value) {
  auto& env = doc["env_spec"];
  auto& ref = doc["ref_spec"];
  if (name == "K") doc["K"] = value;
  else if (name == "seed") doc["seed"] = value;
  else if (name == "beta") ref["beta"] = value;
  else if (name == "tau") ref["tau"] = value;
  else if (name == "rho-target") {
    ref["kind"] = "rho_target";
    ref["rho_target"] = value;
  } else if (name == "H") env["H"] = value;
  else if (name == "d") {
    if (env.value("kind", std::string()) != "hard_instance")
      throw SchemaError("/axes/d", "the d axis needs a hard_instance environment");
    env["d"] = value;
  }
}

inline std::string cell_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%04zu", i);
  return buf;
}

inline std::string rep_name(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rep_%03zu", r);
  return buf;
}

/// Config of replicate `rep` of cell `cell`: replicate r adds r to the seed.
inline RunConfig replicate_config(const SweepConfig& s, std::size_t cell, std::size_t rep) {
  Json doc = s.base;
  const auto values = cell_values(s, cell);
  for (std::size_t i = 0; i < s.axes.size(); ++i) apply_axis(doc, s.axes[i].name, values[i]);
  RunConfig c = config_from_json(doc, s.base_dir);
  c.seed += rep;
  c.out_dir = (std::filesystem::path(s.out_dir) / cell_name(cell) / rep_name(rep)).string();
  return c;
}

/// Linear-interpolation quantile of an unsorted sample.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) return std::nan("");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct ReplicateOutcome {
  bool ok = false;
  bool skipped = false;
  std::string error;
  Json summary;
};

struct CellSummary {
  std::vector<Json> values;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::string first_error;
  std::vector<double> cum_regret, ref_fraction, optimism_violation_rate, realized_rho;
};

struct SweepOutcome {
  std::vector<CellSummary> cells;
  std::string aggregate_csv;
  std::size_t skipped = 0;
  bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellSummary& c) { return c.failed == 0; });
  }
};

namespace detail {

inline ReplicateOutcome run_replicate(const SweepConfig& s, std::size_t cell, std::size_t rep) {
  ReplicateOutcome out;
  try {
    const RunConfig c = replicate_config(s, cell, rep);
    const auto existing = std::filesystem::path(c.out_dir) / "run.json";
    if (std::filesystem::exists(existing) && std::filesystem::exists(std::filesystem::path(c.out_dir) / "run.csv")) {
      try {
        const Json doc = parse_document(read_text_file(existing.string()));
        if (doc.contains("summary")) {
          out.summary = doc["summary"];
          out.ok = out.skipped = true;
          return out;
        }
      } catch (const Error&) {
        // Unreadable leftovers are recomputed.
      }
    }
    out.summary = parse_document(cmd_run(c).json)["summary"];
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

inline std::string num_or_empty(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

}  // namespace detail

inline std::string aggregate_csv(const SweepConfig& s, const std::vector<CellSummary>& cells) {
  std::string out = "cell";
  for (const auto& a : s.axes) out += "," + a.name;
  out += ",status,replicates,succeeded,cum_regret_median,cum_regret_q1,cum_regret_q3,ref_fraction_median,"
         "ref_fraction_q1,ref_fraction_q3,optimism_violation_rate_median,optimism_violation_rate_q1,"
         "optimism_violation_rate_q3,realized_rho_median\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    out += cell_name(i);
    for (const auto& v : c.values) out += "," + (v.is_number_float() ? format_double(v.get<double>()) : v.dump());
    out += ",";
    out += c.failed == 0 ? std::string("ok") : detail::csv_field("failed: " + c.first_error);
    out += "," + std::to_string(c.succeeded + c.failed) + "," + std::to_string(c.succeeded);
    for (const auto* x : {&c.cum_regret, &c.ref_fraction, &c.optimism_violation_rate}) {
      out += "," + detail::num_or_empty(quantile(*x, 0.5));
      out += "," + detail::num_or_empty(quantile(*x, 0.25));
      out += "," + detail::num_or_empty(quantile(*x, 0.75));
    }
    out += "," + detail::num_or_empty(quantile(c.realized_rho, 0.5));
    out += "\n";
  }
  return out;
}

/// Runs every (cell, replicate) on up to `jobs` threads, then aggregates.
/// Each task writes only inside its own replicate directory.
inline SweepOutcome cmd_sweep(const SweepConfig& s, std::size_t jobs) {
  const std::size_t cells = cell_count(s);
  const std::size_t tasks = cells * s.replication;
  std::vector<ReplicateOutcome> outcomes(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks;)
      outcomes[t] = detail::run_replicate(s, t / s.replication, t % s.replication);
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, tasks));
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  SweepOutcome out;
  out.cells.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    auto& cell = out.cells[i];
    cell.values = cell_values(s, i);
    for (std::size_t r = 0; r < s.replication; ++r) {
      const auto& o = outcomes[i * s.replication + r];
      if (!o.ok) {
        if (cell.failed++ == 0) cell.first_error = o.error;
        continue;
      }
      out.skipped += o.skipped ? 1 : 0;
      ++cell.succeeded;
      const auto& sm = o.summary;
      cell.cum_regret.push_back(sm.at("cum_regret").get<double>());
      cell.ref_fraction.push_back(sm.at("ref_fraction").get<double>());
      cell.optimism_violation_rate.push_back(sm.at("optimism_violation_rate").get<double>());
      if (sm.contains("realized_rho") && sm["realized_rho"].is_number())
        cell.realized_rho.push_back(sm["realized_rho"].get<double>());
    }
  }
  out.aggregate_csv = aggregate_csv(s, out.cells);
  std::filesystem::create_directories(s.out_dir);
  write_text_file(std::filesystem::path(s.out_dir) / "aggregate.csv", out.aggregate_csv);
  return out;
}

}  // namespace o2o::harness
