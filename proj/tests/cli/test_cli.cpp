// Runs the govid binary end to end in scratch directories.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "govid/signals.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "govid_cli" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  void write_config(const std::string& name, const json& doc) const {
    std::ofstream(dir_ / name) << doc.dump(2);
  }

  // Exit status of `govid <args>`, run from the scratch directory.
  int run(const std::string& args) const {
    const auto cmd = "cd '" + dir_.string() + "' && '" GOVID_CLI_PATH "' " + args + " 2>>'" +
                     (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static json ggov1_config(double duration) {
    return {{"model", "GGOV1"},
            {"operating_point", {{"p_e0", 0.75}, {"exhaust_temp0", 0.9}}},
            {"optimizer", {{"algorithm", "cs"}, {"population", 15}, {"max_generations", 30}}},
            {"identification", {{"max_rounds", 1}}},
            {"signal",
             {{"dt", 0.001},
              {"duration", duration},
              {"channels",
               {{{"name", "p_ref"}, {"period", 8}, {"duty", 0.5}, {"low", 0.75}, {"high", 0.78125}},
                {{"name", "speed"}, {"period", 6}, {"duty", 0.5}, {"low", 1.0}, {"high", 1.0005}},
                {{"name", "exhaust_temp"}, {"period", 5}, {"duty", 0.5}, {"low", 0.9}, {"high", 0.92}}}}}},
            {"seed", 3}};
  }

  // gen-signal then simulate into <tag>/simulated.csv.
  void make_record(const std::string& config, const std::string& tag) const {
    ASSERT_EQ(run("gen-signal --config " + config + " --out-dir " + tag + "_sig"), 0);
    ASSERT_EQ(run("simulate --config " + config + " --input " + tag + "_sig/signal.csv --out-dir " + tag), 0);
  }

  fs::path dir_;
};

TEST_F(Cli, GenSignalThenSimulate) {
  write_config("c.json", ggov1_config(10));
  make_record("c.json", "train");
  const auto ts = govid::load_csv(dir_ / "train/simulated.csv");
  EXPECT_EQ(ts.length(), 10001u);
  for (const char* tap : {"p_ref", "speed", "valve", "pmech", "fsrn", "fsrt", "p_elec"}) EXPECT_TRUE(ts.has(tap)) << tap;
}

TEST_F(Cli, MissingInputIsDataError) {
  write_config("c.json", ggov1_config(10));
  EXPECT_EQ(run("simulate --config c.json --input nowhere.csv --out-dir out"), 3);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  write_config("c.json", ggov1_config(10));
  make_record("c.json", "a");
  make_record("c.json", "b");
  EXPECT_EQ(slurp(dir_ / "a_sig/signal.csv"), slurp(dir_ / "b_sig/signal.csv"));
  EXPECT_EQ(slurp(dir_ / "a/simulated.csv"), slurp(dir_ / "b/simulated.csv"));
}

TEST_F(Cli, ZeroAmplitudePulseGivesFlatRecord) {
  auto cfg = ggov1_config(5);
  for (auto& ch : cfg["signal"]["channels"]) ch["high"] = ch["low"];
  write_config("c.json", cfg);
  make_record("c.json", "flat");
  const auto ts = govid::load_csv(dir_ / "flat/simulated.csv");
  for (const char* tap : {"valve", "pmech", "p_elec"}) {
    const auto x = ts.values(tap);
    for (double v : x) EXPECT_NEAR(v, x.front(), 1e-12) << tap;
  }
}

TEST_F(Cli, UnknownKeyIsConfigErrorAndWritesNothing) {
  auto cfg = ggov1_config(5);
  cfg["signal"]["bogus"] = 1;
  write_config("c.json", cfg);
  EXPECT_EQ(run("gen-signal --config c.json --out-dir out"), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, IdentifySpeedController) {
  write_config("c.json", ggov1_config(30));
  make_record("c.json", "train");
  ASSERT_EQ(run("identify --config c.json --subsystem 3 --training train/simulated.csv --out-dir fit"), 0);
  const auto fitted = json::parse(slurp(dir_ / "fit/fitted.json"));
  EXPECT_EQ(fitted["subsystems"].size(), 1u);
  EXPECT_NEAR(fitted["parameters"]["K_pgov"].get<double>(), 3.10, 0.02 * 3.10);
  EXPECT_NEAR(fitted["parameters"]["K_igov"].get<double>(), 0.90, 0.02 * 0.90);
  EXPECT_TRUE(fs::exists(dir_ / "fit/history.csv"));
}

TEST_F(Cli, IdentifyHonoursOptimizerAndSeedFlags) {
  write_config("c.json", ggov1_config(20));
  make_record("c.json", "train");
  const int rc = run("identify --config c.json --subsystem 3 --optimizer pso --no-ls-seed --training train/simulated.csv "
                     "--out-dir fit");
  EXPECT_TRUE(rc == 0 || rc == 5) << rc;
  const auto fitted = json::parse(slurp(dir_ / "fit/fitted.json"));
  EXPECT_EQ(fitted["optimizer"], "pso");
  EXPECT_EQ(fitted["ls_seed"], false);
  EXPECT_TRUE(fitted["subsystems"][0]["ls_seed"].is_null());
  EXPECT_EQ(fitted["partial"].get<bool>(), rc == 5);
}

TEST_F(Cli, ValidateFailsForWrongActuatorLag) {
  auto cfg = ggov1_config(30);
  // 100 x MSE in per unit: a doubled lag on these pulse heights lands near 0.03 %.
  cfg["validation"] = {{"index_threshold_percent", 0.01}, {"whiteness", {{"required", false}}}};
  write_config("c.json", cfg);
  make_record("c.json", "train");
  ASSERT_EQ(run("identify --config c.json --subsystem 1 --training train/simulated.csv --out-dir fit"), 0);
  EXPECT_EQ(run("validate --config c.json --fitted fit/fitted.json --validation train/simulated.csv --out-dir ok"), 0);

  auto fitted = json::parse(slurp(dir_ / "fit/fitted.json"));
  fitted["parameters"]["T_act"] = 2.0 * fitted["parameters"]["T_act"].get<double>();
  std::ofstream(dir_ / "fit/slow.json") << fitted.dump(2);
  EXPECT_EQ(run("validate --config c.json --fitted fit/slow.json --validation train/simulated.csv --out-dir bad"), 1);
  const auto report = json::parse(slurp(dir_ / "bad/report.json"));
  const auto ok = json::parse(slurp(dir_ / "ok/report.json"));
  const double before = ok["subsystems"][0]["validation_index_percent"].get<double>();
  const double after = report["subsystems"][0]["validation_index_percent"].get<double>();
  EXPECT_GT(after, 0.01);
  EXPECT_GT(after, 1e3 * before);
}

TEST_F(Cli, ValidateWithoutFittedFileIsConfigError) {
  write_config("c.json", ggov1_config(5));
  make_record("c.json", "train");
  EXPECT_EQ(run("validate --config c.json --fitted missing.json --validation train/simulated.csv --out-dir rep"), 2);
}

TEST_F(Cli, ExciterNoisyRoundTripUnderChiSquare) {
  const json cfg = {
      {"model", "ST6B"},
      {"optimizer", {{"algorithm", "cs"}, {"population", 25}, {"max_generations", 100}}},
      {"identification", {{"subsystems", {5}}}},
      {"validation", {{"whiteness", {{"threshold", "chi2"}}}}},
      {"signal",
       {{"dt", 0.001},
        {"duration", 60},
        {"channels", {{{"name", "v_ref"}, {"period", 20}, {"duty", 0.5}, {"low", 1.0}, {"high", 1.02}}}}}}};
  write_config("c.json", cfg);
  make_record("c.json", "clean");
  const auto clean = govid::load_csv(dir_ / "clean/simulated.csv");
  const std::vector<std::string> outputs{"efd", "v_a"};
  govid::write_csv(govid::add_noise(clean, 40.0, 1, outputs), dir_ / "train.csv");
  govid::write_csv(govid::add_noise(clean, 40.0, 2, outputs), dir_ / "val.csv");

  const int rc = run("identify --config c.json --training train.csv --out-dir fit");
  ASSERT_TRUE(rc == 0 || rc == 5) << rc;
  const int fitted_rc = run("validate --config c.json --fitted fit/fitted.json --validation val.csv --out-dir rep");
  const auto report = json::parse(slurp(dir_ / "rep/report.json"));
  const auto& sub = report["subsystems"][0];
  EXPECT_EQ(sub["whiteness"]["threshold_kind"], "chi2");
  EXPECT_LT(sub["validation_index_percent"].get<double>(), 0.5);
  EXPECT_EQ(fitted_rc, sub["pass"].get<bool>() ? 0 : 1);

  // The generating parameters leave only the added noise, which must pass.
  auto truth = json::parse(slurp(dir_ / "fit/fitted.json"));
  truth["parameters"].update(json{{"K_PA", 3.95}, {"K_IA", 2.84}, {"K_M", 1.10}, {"K_FF", 1.30}});
  std::ofstream(dir_ / "truth.json") << truth.dump(2);
  EXPECT_EQ(run("validate --config c.json --fitted truth.json --validation val.csv --out-dir rep_true"), 0);
}

TEST_F(Cli, CompareWritesOneRowPerParameter) {
  auto cfg = ggov1_config(10);
  cfg["optimizer"]["population"] = 6;
  cfg["optimizer"]["max_generations"] = 2;
  cfg["identification"]["subsystems"] = {3};
  write_config("c.json", cfg);
  make_record("c.json", "train");
  ASSERT_EQ(run("compare --config c.json --training train/simulated.csv --validation train/simulated.csv --seeds 1,2 "
                "--out-dir cmp"),
            0);
  const auto table = slurp(dir_ / "cmp/comparison.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 21);
  EXPECT_EQ(table.substr(0, table.find('\n')), "parameter,model,true,cs,ga,pso");

  ASSERT_EQ(run("compare --config c.json --optimizer ga --training train/simulated.csv --validation train/simulated.csv "
                "--seeds 1 --out-dir one"),
            0);
  const auto single = slurp(dir_ / "one/comparison.csv");
  EXPECT_EQ(single.substr(0, single.find('\n')), "parameter,model,true,ga");
}

}  // namespace
