#include "o2o/o2o.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace o2o;
using namespace o2o::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("o2o_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json tabular_doc(std::size_t S, std::size_t A, std::size_t H, std::size_t K) {
  return Json::parse(R"({"schema": "o2o-config/1",
    "env_spec": {"kind": "tabular_random", "S": )" + std::to_string(S) + R"(, "A": )" + std::to_string(A) +
                     R"(, "H": )" + std::to_string(H) + R"(, "seed": 3},
    "ref_spec": {"kind": "none"}, "algo": "LSVI_UCB", "K": )" + std::to_string(K) +
                     R"(, "seed": 5})");
}

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

int run_cli(const std::string& args, const fs::path& cwd = fs::temp_directory_path()) {
  const std::string cmd = "cd '" + cwd.string() + "' && " + std::string(O2O_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string schema_error_path(const Json& doc) {
  try {
    config_from_json(doc);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
  Json doc = tabular_doc(3, 2, 3, 40);
  doc["confidence"] = {{"c_alpha", 0.5}, {"delta", 0.1}, {"schedule", "fixed"}};
  const RunConfig c = config_from_json(doc);
  const RunConfig again = config_from_json(to_json(c));
  EXPECT_EQ(to_json(c).dump(), to_json(again).dump());
  EXPECT_EQ(again.confidence.schedule, RadiusSchedule::Fixed);
  EXPECT_DOUBLE_EQ(again.confidence.c_alpha, 0.5);
}

TEST(Config, ErrorsNameTheOffendingField) {
  Json doc = tabular_doc(3, 2, 3, 40);
  doc["K"] = -1;
  EXPECT_NE(schema_error_path(doc).find("/K"), std::string::npos);

  doc = tabular_doc(3, 2, 3, 40);
  doc["env_spec"]["kind"] = "mystery";
  EXPECT_NE(schema_error_path(doc).find("/env_spec/kind"), std::string::npos);

  doc = tabular_doc(3, 2, 3, 40);
  doc["algo"] = "O2O_LSVI";
  EXPECT_NE(schema_error_path(doc).find("/ref_spec"), std::string::npos);

  doc = tabular_doc(3, 2, 3, 40);
  doc["schema"] = "other/9";
  EXPECT_FALSE(schema_error_path(doc).empty());

  doc = tabular_doc(3, 2, 3, 40);
  doc["ref_spec"] = {{"kind", "planted"}, {"planted_set", Json::array()}};
  doc["algo"] = "O2O_LSVI";
  EXPECT_NE(schema_error_path(doc).find("/ref_spec/beta"), std::string::npos);
}

TEST(Config, BetaAboveHorizonIsRejected) {
  Json doc = tabular_doc(3, 2, 3, 10);
  doc["algo"] = "O2O_LSVI";
  doc["ref_spec"] = {{"kind", "planted"}, {"beta", 3.5}, {"planted_set", Json::array()}};
  EXPECT_ANY_THROW(prepare(config_from_json(doc)));
}

TEST(Run, SingleActionProducesZeroRegretAndKRows) {
  const RunConfig c = config_from_json(tabular_doc(4, 1, 3, 30));
  const auto a = execute(c);
  const auto rows = std::count(a.csv.begin(), a.csv.end(), '\n');
  EXPECT_EQ(rows, 31);
  EXPECT_EQ(a.result.cum_regret(), 0.0);
  const Json doc = Json::parse(a.json);
  EXPECT_EQ(doc["schema"], kRunSchema);
  EXPECT_EQ(doc["summary"]["cum_regret"].get<double>(), 0.0);
}

TEST(Run, CsvIsByteIdenticalAcrossRuns) {
  const RunConfig c = config_from_json(tabular_doc(4, 3, 4, 80));
  EXPECT_EQ(execute(c).csv, execute(c).csv);
}

TEST(Run, WritesArtifactsAndReplaysFromRunJson) {
  const auto dir = scratch("replay");
  RunConfig c = config_from_json(tabular_doc(3, 2, 3, 50));
  c.out_dir = (dir / "first").string();
  cmd_run(c);
  ASSERT_TRUE(fs::exists(dir / "first" / "run.csv"));
  ASSERT_TRUE(fs::exists(dir / "first" / "timing.json"));

  RunConfig replay = load_config((dir / "first" / "run.json").string());
  replay.out_dir = (dir / "second").string();
  cmd_run(replay);
  EXPECT_EQ(slurp(dir / "first" / "run.csv"), slurp(dir / "second" / "run.csv"));
}

TEST(Run, NumbersRoundTripExactly) {
  for (double x : {0.1, 1.0 / 3.0, 2.718281828459045, 1e-300, 12345.678})
    EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Run, ExactReferenceBeatsBaselineAcrossSeeds) {
  int better = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Json doc = tabular_doc(4, 3, 3, 300);
    doc["seed"] = seed;
    const double base = execute(config_from_json(doc)).result.cum_regret();
    doc["algo"] = "O2O_LSVI";
    doc["ref_spec"] = {{"kind", "planted"}, {"beta", 3}, {"planted_set", Json::array()}};
    const double o2o = execute(config_from_json(doc)).result.cum_regret();
    better += o2o < base ? 1 : 0;
  }
  EXPECT_GE(better, 8);
}

TEST(Run, SummaryReportsRhoForPlantedReference) {
  Json doc = tabular_doc(4, 3, 3, 20);
  doc["algo"] = "O2O_LSVI";
  doc["ref_spec"] = {{"kind", "planted"}, {"beta", 1}, {"planted_set", Json::array({Json::array({0, 0, 0})})}};
  const RunConfig c = config_from_json(doc);
  const Prepared p = prepare(c);
  const Json s = Json::parse(execute(c).json)["summary"];
  ASSERT_TRUE(p.ref.has_value());
  const auto mask = mismatch_mask(*p.ref, p.q_star);
  EXPECT_NEAR(s["realized_rho"].get<double>(), oracles::brute_force_rho(p.mdp, mask), 1e-12);
  EXPECT_EQ(s["planted_size"], 1);
}

TEST(Run, MisspecifiedRunNullsSoundnessCounters) {
  Json doc = tabular_doc(4, 3, 3, 20);
  doc["algo"] = "O2O_LSVI";
  doc["ref_spec"] = {{"kind", "planted"}, {"beta", 1}, {"planted_set", Json::array()}, {"tau", 0.5}};
  const Json s = Json::parse(execute(config_from_json(doc)).json)["summary"];
  EXPECT_TRUE(s["ref_unsound"].is_null());
  EXPECT_TRUE(s["ref_sound_checks"].is_null());
  // Coverage is reported for the well-specified reference the noise was added to.
  EXPECT_EQ(s["realized_rho"].get<double>(), 0.0);
  EXPECT_FALSE(s["well_specified"].get<bool>());
}

TEST(Sweep, SingleCellMatchesDirectRun) {
  const auto dir = scratch("single");
  Json doc{{"schema", kConfigSchema}, {"base", tabular_doc(3, 2, 3, 40)}, {"out_dir", (dir / "sw").string()}};
  const SweepConfig s = sweep_from_json(doc);
  const auto out = cmd_sweep(s, 1);
  ASSERT_TRUE(out.all_ok());
  const std::string agg = slurp(dir / "sw" / "aggregate.csv");
  EXPECT_EQ(std::count(agg.begin(), agg.end(), '\n'), 2);

  RunConfig direct = config_from_json(tabular_doc(3, 2, 3, 40));
  EXPECT_EQ(execute(direct).csv, slurp(dir / "sw" / "cell_0000" / "rep_000" / "run.csv"));
}

TEST(Sweep, SeedAxisMedianIsSampleMedian) {
  const auto dir = scratch("median");
  Json doc{{"schema", kConfigSchema},
           {"base", tabular_doc(3, 2, 3, 30)},
           {"axes", {{"K", {30}}}},
           {"replication", 5},
           {"out_dir", (dir / "sw").string()}};
  const auto out = cmd_sweep(sweep_from_json(doc), 3);
  ASSERT_EQ(out.cells.size(), 1u);
  std::vector<double> regrets;
  for (std::uint64_t seed = 5; seed < 10; ++seed) {
    RunConfig c = config_from_json(tabular_doc(3, 2, 3, 30));
    c.seed = seed;
    regrets.push_back(execute(c).result.cum_regret());
  }
  std::sort(regrets.begin(), regrets.end());
  EXPECT_EQ(quantile(out.cells[0].cum_regret, 0.5), regrets[2]);
}

TEST(Sweep, RowCountIsCartesianProductAndNamesAreStable) {
  const auto dir = scratch("product");
  Json base = tabular_doc(3, 2, 3, 10);
  base["algo"] = "O2O_LSVI";
  base["ref_spec"] = {{"kind", "planted"}, {"beta", 1}, {"planted_set", Json::array()}};
  Json doc{{"schema", kConfigSchema},
           {"base", base},
           {"axes", {{"K", {5, 10}}, {"beta", {0.5, 1, 2}}}},
           {"out_dir", (dir / "sw").string()}};
  const SweepConfig s = sweep_from_json(doc);
  EXPECT_EQ(cell_count(s), 6u);
  const auto out = cmd_sweep(s, 4);
  EXPECT_TRUE(out.all_ok());
  EXPECT_EQ(std::count(out.aggregate_csv.begin(), out.aggregate_csv.end(), '\n'), 7);
  // Last axis varies fastest.
  EXPECT_EQ(cell_values(s, 1)[0], 5);
  EXPECT_EQ(cell_values(s, 1)[1], 1);
  EXPECT_TRUE(fs::exists(dir / "sw" / "cell_0005" / "rep_000" / "run.json"));
}

TEST(Sweep, SkipsCompletedReplicates) {
  const auto dir = scratch("skip");
  Json doc{{"schema", kConfigSchema}, {"base", tabular_doc(3, 2, 3, 20)}, {"out_dir", (dir / "sw").string()}};
  const SweepConfig s = sweep_from_json(doc);
  EXPECT_EQ(cmd_sweep(s, 1).skipped, 0u);
  const auto first = slurp(dir / "sw" / "aggregate.csv");
  EXPECT_EQ(cmd_sweep(s, 1).skipped, 1u);
  EXPECT_EQ(slurp(dir / "sw" / "aggregate.csv"), first);
}

TEST(Sweep, FailedCellIsRecordedNotFatal) {
  const auto dir = scratch("failed");
  Json base = tabular_doc(3, 2, 3, 10);
  base["algo"] = "O2O_LSVI";
  base["ref_spec"] = {{"kind", "planted"}, {"beta", 1}, {"planted_set", Json::array()}};
  // beta = 7 exceeds H = 3 and fails at preparation time.
  Json doc{{"schema", kConfigSchema}, {"base", base}, {"axes", {{"beta", {1, 7}}}}, {"out_dir", (dir / "sw").string()}};
  const auto out = cmd_sweep(sweep_from_json(doc), 2);
  EXPECT_FALSE(out.all_ok());
  EXPECT_EQ(out.cells[0].failed, 0u);
  EXPECT_EQ(out.cells[1].failed, 1u);
  EXPECT_NE(out.aggregate_csv.find("failed:"), std::string::npos);
}

TEST(Sweep, CapAndAxisValidation) {
  Json doc{{"schema", kConfigSchema}, {"base", tabular_doc(3, 2, 3, 10)}, {"axes", {{"K", {1, 2, 3}}}}, {"cap", 2}};
  EXPECT_THROW(sweep_from_json(doc), SchemaError);
  doc["cap"] = 3;
  EXPECT_NO_THROW(sweep_from_json(doc));
  doc["axes"] = {{"gamma", {1}}};
  EXPECT_THROW(sweep_from_json(doc), SchemaError);
  doc["axes"] = {{"d", {2}}};
  const SweepConfig s = sweep_from_json(doc);
  EXPECT_THROW(replicate_config(s, 0, 0), SchemaError);
}

TEST(Sweep, QuantileInterpolates) {
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.75), 7.0);
}

TEST(Reports, EpisodeFloorValue) {
  // 5^3 * 4^2 / (576 * 0.01)
  EXPECT_NEAR(hard_instance_episode_floor(5, 5, 0.1), 347.2222, 1e-4);
  EXPECT_DOUBLE_EQ(hard_instance_episode_floor(2, 3, 0.1), 27.0 / 576.0 / 0.01);
}

TEST(Reports, VerifyRejectsOutOfRangeArguments) {
  EXPECT_THROW(verify_hard_instance(1, 3, 0.01, 0.2, 1), HypothesisViolation);
  EXPECT_THROW(verify_hard_instance(2, 2, 0.01, 0.2, 1), HypothesisViolation);
  EXPECT_THROW(verify_hard_instance(2, 3, 0.7, 0.2, 1), HypothesisViolation);
  EXPECT_TRUE(verify_hard_instance(3, 3, 0.05, 0.2, 4).all_pass());
}

TEST(Reports, ChainValueIsSumOfRewards) {
  const std::vector<double> r{0.2, 0.9, 0.4};
  std::vector<Matrix> next(3, Matrix::Ones(1, 1));
  std::vector<Vector> theta;
  for (double x : r) theta.push_back(Vector::Constant(1, x));
  const LinearMdp chain(1, 3, {"s"}, {"a"}, Vector::Ones(1), Matrix::Ones(1, 1), next, theta);
  const Json rep = oracle_report(chain, std::nullopt);
  EXPECT_NEAR(rep["v1"].get<double>(), 1.5, 1e-15);
  EXPECT_LE(rep["bellman_residual"].get<double>(), 1e-12);
}

TEST(Reports, ReferenceEqualToOptimumHasZeroRho) {
  const auto mdp = make_tabular_random({3, 2, 3, 9});
  const auto qs = solve_optimal(mdp);
  const auto ref = make_reference_q(mdp, qs.q, {}, 1.0, {}, 1);
  const Json rep = oracle_report(mdp, ref);
  EXPECT_EQ(rep["ref"]["rho"].get<double>(), 0.0);
  EXPECT_TRUE(rep["ref"]["separation_holds"].get<bool>());
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("verify-hard-instance --d 2 --horizon 3 --epsilon 0.01 --zeta 0.2"), 0);
  EXPECT_EQ(run_cli("verify-hard-instance --d 2 --horizon 3 --epsilon 0.9 --zeta 0.2"), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  std::ofstream(dir / "bad.json") << R"({"schema": "o2o-config/1", "env_spec": {"kind": "tabular_random"}})";
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string()), 2);

  Json good = tabular_doc(3, 2, 3, 10);
  good["out_dir"] = "out";
  std::ofstream(dir / "good.json") << good.dump();
  EXPECT_EQ(run_cli("run --config good.json", dir), 0);
  // A relative out_dir is taken from the working directory.
  EXPECT_TRUE(fs::exists(dir / "out" / "run.csv"));
}

TEST(Cli, GenerateThenOracleAgreesOnRho) {
  const auto dir = scratch("generate");
  Json doc = tabular_doc(4, 2, 3, 10);
  doc["algo"] = "O2O_LSVI";
  doc["ref_spec"] = {{"kind", "planted"}, {"beta", 1}, {"planted_set", Json::array({Json::array({1, 1, 1})})}};
  std::ofstream(dir / "cfg.json") << doc.dump();
  ASSERT_EQ(run_cli("generate --config " + (dir / "cfg.json").string() + " --out " + (dir / "gen").string()), 0);
  const auto mdp = load_mdp((dir / "gen" / "mdp.json").string());
  const auto ref = load_refq((dir / "gen" / "refq.json").string());
  const Prepared p = prepare(config_from_json(doc));
  ASSERT_TRUE(p.realized_rho.has_value());
  EXPECT_NEAR(oracle_report(mdp, ref)["ref"]["rho"].get<double>(), *p.realized_rho, 1e-12);
}
