#pragma once

#include "o2o/agent/lsvi.hpp"
#include "o2o/core.hpp"
#include "o2o/envs/generators.hpp"
#include "o2o/envs/planting.hpp"
#include "o2o/envs/reference_q.hpp"
#include "o2o/envs/serialize.hpp"
#include "o2o/oracle/coverage.hpp"
#include "o2o/oracle/values.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace o2o::harness {

inline constexpr const char* kConfigSchema = "o2o-config/1";
inline constexpr const char* kRunSchema = "o2o-run/1";

enum class Algo { O2oLsvi, LsviUcb };

struct EnvSpec {
  enum class Kind { TabularRandom, HardInstance, File } kind = Kind::TabularRandom;
  // tabular_random
  std::size_t S = 4, A = 3, H = 4;
  double reward_sparsity = 0.0;
  InitMode init = InitMode::Uniform;
  // hard_instance (H is shared)
  std::size_t d = 2;
  double epsilon = 0.05;
  bool perturbed = true;
  // file
  std::string path;
  /// Generator seed; falls back to the run seed.
  std::optional<std::uint64_t> seed;
};

struct RefSpec {
  enum class Kind { None, Planted, RhoTarget, File } kind = Kind::None;
  /// Separation used by the agent. For `file` an absent beta means the document's.
  std::optional<double> beta;
  std::vector<Triple> planted_set;
  std::vector<int> shift_signs;
  GapMode gap_mode = GapMode::Exact;
  double rho_target = 0.0;
  double rho_tolerance = 0.2;
  std::string path;
  double tau = 0.0;
  bool allow_out_of_theory = false;
  std::optional<std::uint64_t> seed;
};

struct RunConfig {
  EnvSpec env_spec;
  RefSpec ref_spec;
  Algo algo = Algo::O2oLsvi;
  std::size_t K = 1;
  ConfidenceConfig confidence;
  double lambda = 1.0;
  bool running_min = false;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

namespace detail {

using o2o::detail::count;
using o2o::detail::field;
using o2o::detail::number;

inline const Json* optional_field(const Json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() || it->is_null() ? nullptr : &*it;
}

inline std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

inline bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected true or false");
  return j.get<bool>();
}

inline std::uint64_t seed_of(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw SchemaError(path, "seed must be a nonnegative integer");
}

/// Relative paths are taken relative to the directory of the config file.
inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal().string();
}

inline const char* init_name(InitMode m) {
  switch (m) {
    case InitMode::Uniform: return "uniform";
    case InitMode::FirstState: return "first_state";
    case InitMode::Random: return "random";
  }
  return "uniform";
}

inline EnvSpec parse_env(const Json& j, const std::filesystem::path& base) {
  const std::string at = "/env_spec";
  if (!j.is_object()) throw SchemaError(at, "expected an object");
  EnvSpec e;
  const std::string kind = text(field(j, at, "kind"), at + "/kind");
  if (const Json* s = optional_field(j, "seed")) e.seed = seed_of(*s, at + "/seed");
  if (kind == "tabular_random") {
    e.kind = EnvSpec::Kind::TabularRandom;
    e.S = count(field(j, at, "S"), at + "/S");
    e.A = count(field(j, at, "A"), at + "/A");
    e.H = count(field(j, at, "H"), at + "/H");
    if (e.S == 0 || e.A == 0 || e.H == 0) throw SchemaError(at, "S, A and H must be at least 1");
    if (const Json* v = optional_field(j, "reward_sparsity")) {
      e.reward_sparsity = number(*v, at + "/reward_sparsity");
      if (!(e.reward_sparsity >= 0.0 && e.reward_sparsity <= 1.0))
        throw SchemaError(at + "/reward_sparsity", "must lie in [0, 1]");
    }
    if (const Json* v = optional_field(j, "init")) {
      const auto name = text(*v, at + "/init");
      if (name == "uniform") e.init = InitMode::Uniform;
      else if (name == "first_state") e.init = InitMode::FirstState;
      else if (name == "random") e.init = InitMode::Random;
      else throw SchemaError(at + "/init", "expected uniform, first_state or random");
    }
  } else if (kind == "hard_instance") {
    e.kind = EnvSpec::Kind::HardInstance;
    e.d = count(field(j, at, "d"), at + "/d");
    e.H = count(field(j, at, "H"), at + "/H");
    e.epsilon = number(field(j, at, "epsilon"), at + "/epsilon");
    if (e.d < 2 || e.d > kMaxHardInstanceDim) throw SchemaError(at + "/d", "must lie in [2, 11]");
    if (e.H < 3) throw SchemaError(at + "/H", "must be at least 3");
    if (!(e.epsilon > 0.0)) throw SchemaError(at + "/epsilon", "must be positive");
    if (const Json* v = optional_field(j, "perturbed")) e.perturbed = boolean(*v, at + "/perturbed");
  } else if (kind == "file") {
    e.kind = EnvSpec::Kind::File;
    e.path = resolve_path(text(field(j, at, "path"), at + "/path"), base);
    if (!std::filesystem::exists(e.path)) throw SchemaError(at + "/path", "file does not exist: " + e.path);
  } else {
    throw SchemaError(at + "/kind", "expected tabular_random, hard_instance or file");
  }
  return e;
}

inline RefSpec parse_ref(const Json& j, const std::filesystem::path& base) {
  const std::string at = "/ref_spec";
  if (!j.is_object()) throw SchemaError(at, "expected an object");
  RefSpec r;
  const std::string kind = text(field(j, at, "kind"), at + "/kind");
  if (const Json* s = optional_field(j, "seed")) r.seed = seed_of(*s, at + "/seed");
  if (const Json* b = optional_field(j, "beta")) {
    r.beta = number(*b, at + "/beta");
    if (!(*r.beta > 0.0)) throw SchemaError(at + "/beta", "must be positive");
  }
  if (const Json* t = optional_field(j, "tau")) {
    r.tau = number(*t, at + "/tau");
    if (!(r.tau >= 0.0)) throw SchemaError(at + "/tau", "must be nonnegative");
  }
  if (const Json* v = optional_field(j, "allow_out_of_theory")) r.allow_out_of_theory = boolean(*v, at + "/allow_out_of_theory");
  if (const Json* v = optional_field(j, "gap_mode")) {
    const auto name = text(*v, at + "/gap_mode");
    if (name == "exact") r.gap_mode = GapMode::Exact;
    else if (name == "sampled") r.gap_mode = GapMode::Sampled;
    else throw SchemaError(at + "/gap_mode", "expected exact or sampled");
  }
  auto need_beta = [&] {
    if (!r.beta) throw SchemaError(at + "/beta", "missing field");
  };
  if (kind == "none") {
    r.kind = RefSpec::Kind::None;
  } else if (kind == "planted") {
    r.kind = RefSpec::Kind::Planted;
    need_beta();
    if (const Json* set = optional_field(j, "planted_set")) {
      if (!set->is_array()) throw SchemaError(at + "/planted_set", "expected an array");
      for (std::size_t i = 0; i < set->size(); ++i) {
        const std::string p = at + "/planted_set/" + std::to_string(i);
        const Json& t = o2o::detail::array((*set)[i], p, 3);
        r.planted_set.push_back({count(t[0], p + "/0"), count(t[1], p + "/1"), count(t[2], p + "/2")});
      }
    }
    if (const Json* signs = optional_field(j, "shift_signs")) {
      if (!signs->is_array()) throw SchemaError(at + "/shift_signs", "expected an array");
      for (std::size_t i = 0; i < signs->size(); ++i) {
        const std::string p = at + "/shift_signs/" + std::to_string(i);
        const double v = number((*signs)[i], p);
        if (v != 1.0 && v != -1.0) throw SchemaError(p, "expected +1 or -1");
        r.shift_signs.push_back(v > 0 ? 1 : -1);
      }
      if (r.shift_signs.size() != r.planted_set.size())
        throw SchemaError(at + "/shift_signs", "must have one entry per planted triple");
    }
  } else if (kind == "rho_target") {
    r.kind = RefSpec::Kind::RhoTarget;
    need_beta();
    r.rho_target = number(field(j, at, "rho_target"), at + "/rho_target");
    if (!(r.rho_target >= 0.0 && r.rho_target <= 1.0)) throw SchemaError(at + "/rho_target", "must lie in [0, 1]");
    if (const Json* v = optional_field(j, "rho_tolerance")) {
      r.rho_tolerance = number(*v, at + "/rho_tolerance");
      if (!(r.rho_tolerance >= 0.0)) throw SchemaError(at + "/rho_tolerance", "must be nonnegative");
    }
  } else if (kind == "file") {
    r.kind = RefSpec::Kind::File;
    r.path = resolve_path(text(field(j, at, "path"), at + "/path"), base);
    if (!std::filesystem::exists(r.path)) throw SchemaError(at + "/path", "file does not exist: " + r.path);
  } else {
    throw SchemaError(at + "/kind", "expected none, planted, rho_target or file");
  }
  return r;
}

inline ConfidenceConfig parse_confidence(const Json* j) {
  ConfidenceConfig c;
  if (j == nullptr) return c;
  const std::string at = "/confidence";
  if (!j->is_object()) throw SchemaError(at, "expected an object");
  if (const Json* v = optional_field(*j, "c_alpha")) c.c_alpha = number(*v, at + "/c_alpha");
  if (const Json* v = optional_field(*j, "delta")) c.delta = number(*v, at + "/delta");
  if (const Json* v = optional_field(*j, "n_eff")) c.n_eff = number(*v, at + "/n_eff");
  if (const Json* v = optional_field(*j, "schedule")) {
    const auto name = text(*v, at + "/schedule");
    if (name == "growing") c.schedule = RadiusSchedule::Growing;
    else if (name == "fixed") c.schedule = RadiusSchedule::Fixed;
    else throw SchemaError(at + "/schedule", "expected growing or fixed");
  }
  if (!(c.c_alpha > 0.0)) throw SchemaError(at + "/c_alpha", "must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw SchemaError(at + "/delta", "must lie in (0, 1)");
  if (!(c.n_eff == 0.0 || c.n_eff >= 1.0)) throw SchemaError(at + "/n_eff", "must be 0 (auto) or at least 1");
  return c;
}

}  // namespace detail

/// Parses a run config. Accepts either a config document or a run.json
/// written by `run`, whose embedded config is used.
inline RunConfig config_from_json(const Json& doc_in, const std::filesystem::path& base = {}) {
  const Json* doc = &doc_in;
  if (doc_in.is_object() && doc_in.value("schema", std::string()) == kRunSchema) doc = &detail::field(doc_in, "", "config");
  o2o::detail::expect_schema(*doc, kConfigSchema);
  using namespace detail;
  RunConfig c;
  c.env_spec = parse_env(field(*doc, "", "env_spec"), base);
  if (const Json* r = optional_field(*doc, "ref_spec")) c.ref_spec = parse_ref(*r, base);
  const auto algo = text(field(*doc, "", "algo"), "/algo");
  if (algo == "O2O_LSVI") c.algo = Algo::O2oLsvi;
  else if (algo == "LSVI_UCB") c.algo = Algo::LsviUcb;
  else throw SchemaError("/algo", "expected O2O_LSVI or LSVI_UCB");
  c.K = count(field(*doc, "", "K"), "/K");
  if (c.K < 1) throw SchemaError("/K", "must be at least 1");
  c.confidence = parse_confidence(optional_field(*doc, "confidence"));
  if (const Json* v = optional_field(*doc, "lambda")) {
    c.lambda = number(*v, "/lambda");
    if (!(c.lambda > 0.0)) throw SchemaError("/lambda", "must be positive");
  }
  if (const Json* v = optional_field(*doc, "running_min")) c.running_min = boolean(*v, "/running_min");
  c.seed = seed_of(field(*doc, "", "seed"), "/seed");
  if (const Json* v = optional_field(*doc, "out_dir")) c.out_dir = text(*v, "/out_dir");
  if (c.algo == Algo::O2oLsvi && c.ref_spec.kind == RefSpec::Kind::None)
    throw SchemaError("/ref_spec", "O2O_LSVI needs a reference (kind other than none)");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  const auto doc = parse_document(read_text_file(path));
  return config_from_json(doc, std::filesystem::path(path).parent_path());
}

inline const char* algo_name(Algo a) { return a == Algo::O2oLsvi ? "O2O_LSVI" : "LSVI_UCB"; }

/// Full resolved config. Defaults and derived seeds are written out so the
/// document alone reproduces the run.
inline Json to_json(const RunConfig& c) {
  Json doc;
  doc["schema"] = kConfigSchema;
  Json env;
  const auto& e = c.env_spec;
  switch (e.kind) {
    case EnvSpec::Kind::TabularRandom:
      env["kind"] = "tabular_random";
      env["S"] = e.S;
      env["A"] = e.A;
      env["H"] = e.H;
      env["reward_sparsity"] = e.reward_sparsity;
      env["init"] = detail::init_name(e.init);
      env["seed"] = e.seed.value_or(c.seed);
      break;
    case EnvSpec::Kind::HardInstance:
      env["kind"] = "hard_instance";
      env["d"] = e.d;
      env["H"] = e.H;
      env["epsilon"] = e.epsilon;
      env["perturbed"] = e.perturbed;
      env["seed"] = e.seed.value_or(c.seed);
      break;
    case EnvSpec::Kind::File:
      env["kind"] = "file";
      env["path"] = e.path;
      break;
  }
  doc["env_spec"] = env;

  Json ref;
  const auto& r = c.ref_spec;
  switch (r.kind) {
    case RefSpec::Kind::None: ref["kind"] = "none"; break;
    case RefSpec::Kind::Planted: {
      ref["kind"] = "planted";
      Json set = Json::array();
      for (const auto& t : r.planted_set) set.push_back({t.s, t.a, t.h});
      ref["planted_set"] = set;
      if (!r.shift_signs.empty()) ref["shift_signs"] = r.shift_signs;
      ref["gap_mode"] = r.gap_mode == GapMode::Exact ? "exact" : "sampled";
      break;
    }
    case RefSpec::Kind::RhoTarget:
      ref["kind"] = "rho_target";
      ref["rho_target"] = r.rho_target;
      ref["rho_tolerance"] = r.rho_tolerance;
      break;
    case RefSpec::Kind::File:
      ref["kind"] = "file";
      ref["path"] = r.path;
      break;
  }
  if (r.beta) ref["beta"] = *r.beta;
  if (r.kind != RefSpec::Kind::None) {
    ref["tau"] = r.tau;
    ref["allow_out_of_theory"] = r.allow_out_of_theory;
    ref["seed"] = r.seed.value_or(c.seed);
  }
  doc["ref_spec"] = ref;

  doc["algo"] = algo_name(c.algo);
  doc["K"] = c.K;
  doc["confidence"] = {{"c_alpha", c.confidence.c_alpha},
                       {"delta", c.confidence.delta},
                       {"n_eff", c.confidence.n_eff},
                       {"schedule", c.confidence.schedule == RadiusSchedule::Growing ? "growing" : "fixed"}};
  doc["lambda"] = c.lambda;
  doc["running_min"] = c.running_min;
  doc["seed"] = c.seed;
  doc["out_dir"] = c.out_dir;
  return doc;
}

/// Environment, reference and derived oracle quantities for one config.
struct Prepared {
  LinearMdp mdp;
  StagewiseValues q_star;
  std::optional<ReferenceQ> ref;
  double beta = 0.0;
  /// Coverage of the well-specified reference (before any tau noise).
  std::optional<double> realized_rho;
  std::optional<SeparationReport> separation;
  bool rho_within_tolerance = true;
};

inline LinearMdp build_env(const EnvSpec& e, std::uint64_t run_seed) {
  const std::uint64_t seed = e.seed.value_or(run_seed);
  switch (e.kind) {
    case EnvSpec::Kind::TabularRandom: {
      TabularParams p;
      p.S = e.S;
      p.A = e.A;
      p.H = e.H;
      p.seed = seed;
      p.reward_sparsity = e.reward_sparsity;
      p.init = e.init;
      return make_tabular_random(p);
    }
    case EnvSpec::Kind::HardInstance:
      return make_hard_instance(make_hard_params(e.d, e.H, e.epsilon, seed, e.perturbed));
    case EnvSpec::Kind::File:
      return load_mdp(e.path);
  }
  throw InvalidArgument("unknown environment kind");
}

inline Prepared prepare(const RunConfig& c) {
  Prepared out{build_env(c.env_spec, c.seed), {}, std::nullopt};
  out.q_star = solve_optimal(out.mdp);
  const auto& r = c.ref_spec;
  const std::uint64_t seed = r.seed.value_or(c.seed);
  const double H = static_cast<double>(out.mdp.horizon());
  if (r.kind == RefSpec::Kind::None) return out;

  ReferenceQ base;
  switch (r.kind) {
    case RefSpec::Kind::Planted: {
      if (*r.beta > H) throw SchemaError("/ref_spec/beta", "must not exceed H");
      base = make_reference_q(out.mdp, out.q_star.q, r.planted_set, *r.beta, {r.shift_signs, r.gap_mode}, seed);
      break;
    }
    case RefSpec::Kind::RhoTarget: {
      if (*r.beta > H) throw SchemaError("/ref_spec/beta", "must not exceed H");
      const auto plant = plant_for_rho(out.mdp, out.q_star, *r.beta, r.rho_target, seed, r.rho_tolerance);
      out.rho_within_tolerance = plant.within_tolerance;
      base = make_reference_q(out.mdp, out.q_star.q, plant.planted_set, *r.beta, {{}, r.gap_mode}, seed);
      break;
    }
    case RefSpec::Kind::File: {
      base = load_refq(r.path);
      if (base.horizon() != out.mdp.horizon() || base.num_states() != out.mdp.num_states() ||
          base.num_actions() != out.mdp.num_actions())
        throw SchemaError("/ref_spec/path", "reference shape does not match the environment");
      break;
    }
    case RefSpec::Kind::None: break;
  }
  out.beta = r.beta.value_or(base.beta);
  if (base.tau == 0.0) {
    out.realized_rho = compute_rho(out.mdp, base, out.q_star);
    out.separation = verify_beta_separation(base, out.q_star, base.beta);
  }
  if (r.tau > 0.0) {
    base.beta = out.beta;
    base = make_misspecified_reference(base, r.tau, seed, r.allow_out_of_theory);
  }
  out.ref = std::move(base);
  return out;
}

inline AgentConfig agent_config(const RunConfig& c) {
  AgentConfig a;
  a.confidence = c.confidence;
  a.lambda = c.lambda;
  a.running_min = c.running_min;
  return a;
}

}  // namespace o2o::harness
