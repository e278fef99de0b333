#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mdiew-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  RunResult run(const std::string& args, const std::string& env = "") const {
    const auto out = path("stdout.txt");
    const auto err = path("stderr.txt");
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + MDIEW_CLI_PATH + "' " + args +
                            " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  nlohmann::json run_json(const std::string& args) const {
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return nlohmann::json::parse(r.out);
  }

  std::string simulate(double lambda, int seed, const std::string& extra = "") const {
    const auto file = path("counts-" + std::to_string(lambda) + "-" + std::to_string(seed) + ".json");
    const auto r = run("simulate --lambda " + std::to_string(lambda) + " --seed " +
                       std::to_string(seed) + " --out '" + file.string() + "' " + extra);
    EXPECT_EQ(r.code, 0) << r.err;
    return file.string();
  }

  fs::path dir_;
};

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_F(Cli, SimulateWritesFullTable) {
  const auto file = simulate(1.0, 7);
  const auto j = nlohmann::json::parse(slurp(file));
  EXPECT_EQ(j.at("counts").size(), 576u);
  EXPECT_EQ(j.at("metadata").at("lambda"), 1.0);
  EXPECT_EQ(j.at("metadata").at("seed"), 7);
  EXPECT_EQ(j.at("integration_time_s"), 10.0);
}

TEST_F(Cli, SimulateIsByteIdentical) {
  const auto a = path("a.json");
  const auto b = path("b.json");
  ASSERT_EQ(run("simulate --lambda 0.6 --seed 3 --out '" + a.string() + "'").code, 0);
  ASSERT_EQ(run("simulate --lambda 0.6 --seed 3 --out '" + b.string() + "'").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  ASSERT_EQ(run("simulate --lambda 0.6 --seed 4 --out '" + b.string() + "'").code, 0);
  EXPECT_NE(slurp(a), slurp(b));
}

TEST_F(Cli, SimulateValidatesFlags) {
  const auto r = run("simulate --lambda 2 --seed 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lambda"), std::string::npos);
  EXPECT_EQ(run("simulate --lambda 0.5").code, 2);
  EXPECT_EQ(run("simulate --lambda 0.5 --seed 1 --efficiency 0").code, 2);
  EXPECT_EQ(run("simulate --lambda 0.5 --seed 1 --visibility 1.5").code, 2);
  EXPECT_EQ(run("simulate --lambda 0.5 --seed 1 --rate -1").code, 2);
  EXPECT_EQ(run("simulate --lambda abc --seed 1").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, WitnessCertifiesMaximallyEntangledCounts) {
  const auto counts = simulate(1.0, 7);
  const auto coeffs = path("beta.json");
  const auto j = run_json("witness --counts '" + counts + "' --mc 50 --seed 1 --coeffs-out '" +
                          coeffs.string() + "'");
  EXPECT_LT(j.at("value").get<double>(), 0.0);
  EXPECT_NEAR(j.at("value").get<double>(), -2.0, 0.3);
  EXPECT_TRUE(j.at("certified").get<bool>());
  EXPECT_EQ(j.at("n_mc"), 50);
  EXPECT_GT(j.at("std").get<double>(), 0.0);
  EXPECT_EQ(j.at("coeffs_path_written"), coeffs.string());
  EXPECT_EQ(j.at("coeffs_source"), "computed");
  ASSERT_TRUE(fs::exists(coeffs));
  EXPECT_EQ(nlohmann::json::parse(slurp(coeffs)).at("beta").size(), 576u);
}

TEST_F(Cli, WitnessDoesNotCertifySeparableCounts) {
  const auto counts = simulate(0.0, 8);
  const auto r = run("witness --counts '" + counts + "' --mc 50 --seed 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_FALSE(j.at("certified").get<bool>());
  EXPECT_TRUE(j.at("coeffs_path_written").is_null());
}

TEST_F(Cli, StoredCoefficientsAgreeWithSelfWitness) {
  const auto training = simulate(1.0, 11);
  const auto counts = simulate(1.0, 12);
  const auto coeffs = path("beta.json");
  ASSERT_EQ(run("witness --counts '" + training + "' --mc 0 --seed 1 --coeffs-out '" +
                coeffs.string() + "'")
                .code,
            0);
  const auto self = run_json("witness --counts '" + counts + "' --mc 50 --seed 2");
  const auto applied =
      run_json("apply --counts '" + counts + "' --coeffs '" + coeffs.string() + "' --mc 50 --seed 2");
  EXPECT_EQ(applied.at("coeffs_source"), "file");
  const double sigma = std::max(self.at("std").get<double>(), applied.at("std").get<double>());
  EXPECT_NEAR(applied.at("value").get<double>(), self.at("value").get<double>(), 3.0 * sigma);
  EXPECT_TRUE(applied.at("certified").get<bool>());

  // witness with --coeffs is the same operation as apply.
  const auto via_witness =
      run_json("witness --counts '" + counts + "' --coeffs '" + coeffs.string() + "' --mc 50 --seed 2");
  EXPECT_EQ(via_witness.dump(), applied.dump());
}

TEST_F(Cli, WitnessCsvFormat) {
  const auto counts = simulate(1.0, 7);
  const auto r = run("witness --counts '" + counts + "' --mc 10 --seed 1 --format csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "value,std,n_mc,certified");
  EXPECT_NE(r.out.find(",10,true"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  const auto counts = simulate(0.7, 5);
  const auto bad = path("bad.json");
  std::ofstream(bad) << "{\"inputs\": [";
  EXPECT_EQ(run("witness --counts '" + bad.string() + "' --seed 1").code, 3);

  auto j = nlohmann::json::parse(slurp(counts));
  std::swap(j["inputs"][0], j["inputs"][1]);
  const auto swapped = path("swapped.json");
  std::ofstream(swapped) << j.dump();
  EXPECT_EQ(run("witness --counts '" + swapped.string() + "' --seed 1").code, 4);

  const auto coeffs = path("beta.json");
  ASSERT_EQ(run("witness --counts '" + counts + "' --mc 0 --seed 1 --coeffs-out '" + coeffs.string() + "'").code, 0);
  auto cj = nlohmann::json::parse(slurp(coeffs));
  cj["input_set_id"] = "qubit-inputs[0,1]";
  std::ofstream(coeffs) << cj.dump();
  EXPECT_EQ(run("apply --counts '" + counts + "' --coeffs '" + coeffs.string() + "' --seed 1").code, 4);

  EXPECT_EQ(run("apply --counts '" + counts + "' --seed 1").code, 2);
  EXPECT_EQ(run("witness --counts '" + path("missing.json").string() + "' --seed 1").code, 2);
  EXPECT_EQ(run("witness --counts '" + counts + "' --seed 1 --mc 1").code, 2);
}

TEST_F(Cli, ExactSweep) {
  const auto r = run("sweep --exact --grid 0.35:1.0:14 --seed 1");
  ASSERT_EQ(r.code, 0) << r.err;
  std::string header;
  const auto rows = parse_csv(r.out, &header);
  EXPECT_EQ(header, "lambda,w_self,std_self,w_fixed,std_fixed,n_mc");
  ASSERT_EQ(rows.size(), 14u);
  EXPECT_DOUBLE_EQ(rows.front()[0], 0.35);
  EXPECT_DOUBLE_EQ(rows.back()[0], 1.0);
  for (const auto& row : rows) {
    if (row[0] >= 0.40) EXPECT_LT(row[1], 0.0) << row[0];
    EXPECT_NEAR(row[1], 1.0 - 3.0 * row[0], 1e-6) << row[0];
    EXPECT_EQ(row[2], 0.0);
    EXPECT_EQ(row[5], 0.0);
  }
  // Fixed coefficients: w_fixed is affine in lambda.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(rows.size());
  for (const auto& row : rows) {
    sx += row[0];
    sy += row[3];
    sxx += row[0] * row[0];
    sxy += row[0] * row[3];
    syy += row[3] * row[3];
  }
  const double cov = sxy - sx * sy / n;
  const double r2 = cov * cov / ((sxx - sx * sx / n) * (syy - sy * sy / n));
  EXPECT_GE(r2, 1.0 - 1e-6);
}

TEST_F(Cli, NoisySweepSeparableBoundRow) {
  const auto r = run("sweep --lambdas 0.33,1.0 --mc 50 --seed 5 --phase-error 0.05 --visibility 0.97");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out, nullptr);
  ASSERT_EQ(rows.size(), 2u);
  const auto& low = rows[0];
  EXPECT_GE(low[1], -3.0 * low[2]);
  EXPECT_LE(low[1], 3.0 * low[2]);
  EXPECT_EQ(low[5], 50.0);
  EXPECT_LT(rows[1][1], -3.0 * rows[1][2]);
  EXPECT_LT(rows[1][3], -3.0 * rows[1][4]);
}

TEST_F(Cli, SweepIsByteIdenticalAndValidated) {
  const auto a = path("a.csv");
  const auto b = path("b.csv");
  const std::string args = "sweep --lambdas 0.4,0.9 --mc 20 --seed 9 --out ";
  ASSERT_EQ(run(args + "'" + a.string() + "'").code, 0);
  ASSERT_EQ(run(args + "'" + b.string() + "' --threads 2").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(run("sweep --lambdas '' --seed 1").code, 2);
  EXPECT_EQ(run("sweep --seed 1").code, 2);
  EXPECT_EQ(run("sweep --lambdas 0.5,1.5 --seed 1").code, 2);
  EXPECT_EQ(run("sweep --lambdas 0.5 --grid 0:1:3 --seed 1").code, 2);

  const auto js = run("sweep --exact --lambdas 0.5 --seed 1 --format json");
  ASSERT_EQ(js.code, 0);
  const auto j = nlohmann::json::parse(js.out);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0].at("w_self").get<double>(), -0.5, 1e-6);
}

TEST_F(Cli, SolverDumpDirectory) {
  const auto counts = simulate(0.9, 2);
  const auto dump = path("dump");
  const auto r = run("witness --counts '" + counts + "' --mc 0 --seed 1",
                     "MDIEW_SOLVER_DUMP='" + dump.string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dump)) {
    EXPECT_EQ(e.path().extension(), ".sdp");
    ++files;
  }
  EXPECT_GE(files, 2u);
}

TEST_F(Cli, OutputWritesLeaveNoTemporaries) {
  const auto out = path("report.json");
  const auto counts = simulate(1.0, 4);
  ASSERT_EQ(run("witness --counts '" + counts + "' --mc 0 --seed 1 --out '" + out.string() + "'").code, 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(out)).contains("value"));
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().filename().string().find(".tmp."), std::string::npos);
  }
}
