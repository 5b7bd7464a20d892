// Command-line front end: run, sweep, verify-hard-instance, oracle, generate.

#include "o2o/o2o.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

using namespace o2o;
using namespace o2o::harness;

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InfeasibleGap& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const HypothesisViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline-to-online LSVI simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "Run one configuration and write run.csv / run.json");
  run->add_option("--config", run_config, "Config document (or a run.json to replay)")->required();
  run->add_option("--seed", run_seed, "Override the run seed");
  run->add_option("--out", run_out, "Override the output directory");

  std::string sweep_config;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a cartesian sweep and write aggregate.csv");
  sweep->add_option("--config", sweep_config, "Sweep document")->required();
  sweep->add_option("--jobs", jobs, "Concurrent replicate runs")->check(CLI::PositiveNumber);

  std::size_t d = 2, horizon = 3;
  double epsilon = 0.01, zeta = 0.1;
  std::uint64_t hard_seed = 0;
  std::optional<std::string> report_out;
  auto* verify = app.add_subcommand("verify-hard-instance", "Check the lower-bound instance family by exact DP");
  verify->add_option("--d", d, "Feature dimension (actions are {-1,+1}^(d-1))")->required();
  verify->add_option("--horizon", horizon, "Horizon H")->required();
  verify->add_option("--epsilon", epsilon, "Perturbation scale")->required();
  verify->add_option("--zeta", zeta, "Closeness level in (0, 1/2)")->required();
  verify->add_option("--seed", hard_seed, "Seed for the sign vectors and random policies");
  verify->add_option("--out", report_out, "Also write the JSON report here");

  std::string env_path;
  std::optional<std::string> ref_path;
  auto* oracle = app.add_subcommand("oracle", "Print Q*, V* and reference diagnostics");
  oracle->add_option("--env", env_path, "MDP document")->required();
  oracle->add_option("--ref", ref_path, "Reference Q document");

  std::string gen_config, gen_out;
  auto* generate = app.add_subcommand("generate", "Write the MDP and reference documents of a config");
  generate->add_option("--config", gen_config, "Config document")->required();
  generate->add_option("--out", gen_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) {
    return guarded([&] {
      RunConfig c = load_config(run_config);
      if (run_seed) c.seed = *run_seed;
      if (run_out) c.out_dir = *run_out;
      const auto a = cmd_run(c);
      std::cout << "cum_regret " << format_double(a.result.cum_regret()) << "\n"
                << "wrote " << (std::filesystem::path(c.out_dir) / "run.csv").string() << "\n";
      return kOk;
    });
  }
  if (*sweep) {
    return guarded([&] {
      const auto s = load_sweep(sweep_config);
      const auto out = cmd_sweep(s, jobs);
      std::cout << out.cells.size() << " cells, " << out.skipped << " replicates reused\n"
                << "wrote " << (std::filesystem::path(s.out_dir) / "aggregate.csv").string() << "\n";
      if (!out.all_ok()) {
        std::cerr << "some cells failed; see the status column\n";
        return kRuntimeError;
      }
      return kOk;
    });
  }
  if (*verify) {
    return guarded([&] {
      const auto v = verify_hard_instance(d, horizon, epsilon, zeta, hard_seed);
      for (const auto& c : v.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
      std::cout << "episode floor H^3 (d-1)^2 / (24^2 eps^2) = " << format_double(v.floor) << "\n";
      if (report_out) write_text_file(*report_out, v.to_json().dump(1) + "\n");
      return v.all_pass() ? kOk : kRuntimeError;
    });
  }
  if (*oracle) {
    return guarded([&] {
      const auto mdp = load_mdp(env_path);
      std::optional<ReferenceQ> ref;
      if (ref_path) ref = load_refq(*ref_path);
      std::cout << oracle_report(mdp, ref).dump(1) << "\n";
      return kOk;
    });
  }
  if (*generate) {
    return guarded([&] {
      const RunConfig c = load_config(gen_config);
      const Prepared p = prepare(c);
      const std::filesystem::path dir(gen_out);
      std::filesystem::create_directories(dir);
      write_text_file(dir / "mdp.json", serialize(p.mdp));
      if (p.ref) write_text_file(dir / "refq.json", serialize(*p.ref));
      std::cout << "wrote " << (dir / "mdp.json").string() << "\n";
      if (p.realized_rho) std::cout << "rho " << format_double(*p.realized_rho) << "\n";
      return kOk;
    });
  }
  return kConfigError;
}
