// Copyright 2026 The iontomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "iontomo/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "iontomo/bench.hpp"

namespace cli = iontomo::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "iontomo");
    std::ostringstream out;
    std::ostringstream err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

class CliFiles : public ::testing::Test {
   protected:
    void SetUp() override {
        unsetenv(cli::kOutputDirEnv);
        dir_ = fs::temp_directory_path() / ("iontomo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override {
        unsetenv(cli::kOutputDirEnv);
        fs::remove_all(dir_);
    }
    fs::path dir_;
};

// Checks a one-line {"error": kind, "message": ...} diagnostic.
void expect_error_line(const Run &r, const std::string &kind) {
    ASSERT_FALSE(r.err.empty());
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    auto j = json::parse(r.err);
    EXPECT_EQ(j.at("error"), kind) << r.err;
    EXPECT_TRUE(j.at("message").is_string());
}

}  // namespace

TEST(Cli, ErrorsWithReferenceFlags) {
    unsetenv(cli::kOutputDirEnv);
    auto r = run({"errors", "--t", "1", "--lambda", "0.001", "--lambda-d", "0.2", "--lambda-b", "25"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j.at("k0"), 8);
    EXPECT_EQ(j.at("p10").get<double>(), 2.29248e-05);
    EXPECT_EQ(j.at("p01").get<double>(), 0.000687758);
    EXPECT_NE(r.out.find("2.29248e-05"), std::string::npos);
}

TEST(Cli, ErrorsDefaultsMatchReferenceFlags) {
    unsetenv(cli::kOutputDirEnv);
    auto a = run({"errors"});
    auto b = run({"errors", "--t", "1", "--lambda", "0.001", "--lambda-d", "0.2", "--lambda-b", "25"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, LowContrastErrorsAndCsv) {
    unsetenv(cli::kOutputDirEnv);
    auto r = run({"errors", "--lambda", "0.05", "--lambda-b", "3", "--lambda-d", "0.05", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "k0,p10,p01\n1,0.0497871,0.080629\n");
}

TEST(Cli, PrecisionFlag) {
    unsetenv(cli::kOutputDirEnv);
    auto r = run({"errors", "--precision", "3"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out).at("p10").get<double>(), 2.29e-05);
    EXPECT_EQ(run({"errors", "--precision", "40"}).code, cli::kExitUsage);
}

TEST(Cli, ValidationFailures) {
    unsetenv(cli::kOutputDirEnv);
    for (auto args : std::vector<std::vector<std::string>>{{"errors", "--t", "-1"}, {"errors", "--lambda-b", "0"},
             {"distributions", "--lambda", "-0.5"}, {"benchmark", "--p10", "1.5"}, {"benchmark", "--shots", "5"},
             {"benchmark", "--states", "0"}, {"benchmark", "--qubits", "0"}}) {
        auto r = run(args);
        EXPECT_EQ(r.code, cli::kExitUsage) << args.back();
        EXPECT_TRUE(r.out.empty());
        expect_error_line(r, "invalid_argument");
    }
}

TEST(Cli, UsageFailures) {
    unsetenv(cli::kOutputDirEnv);
    for (auto args : std::vector<std::vector<std::string>>{
             {"errors", "--bogus"}, {}, {"errors", "benchmark"}, {"errors", "--t", "abc"}, {"errors", "--format", "xml"}}) {
        auto r = run(args);
        EXPECT_EQ(r.code, cli::kExitUsage);
        expect_error_line(r, "usage");
    }
}

TEST(Cli, IndistinguishableReadout) {
    unsetenv(cli::kOutputDirEnv);
    // Bright counts sit almost entirely at k = 0 while the noise-only dark channel spreads wider.
    auto r = run({"errors", "--lambda", "0", "--lambda-b", "0.001", "--lambda-d", "0.5"});
    EXPECT_NE(r.code, 0);
    expect_error_line(r, "indistinguishable");
}

TEST(Cli, Help) {
    auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("lambda_B"), std::string::npos);
    EXPECT_NE(r.out.find("benchmark"), std::string::npos);
    auto sub = run({"errors", "--help"});
    EXPECT_EQ(sub.code, 0);
    EXPECT_NE(sub.out.find("--lambda-b"), std::string::npos);
}

TEST_F(CliFiles, UnwritablePath) {
    auto r = run({"errors", "--output", (dir_ / "missing" / "x.json").string()});
    EXPECT_EQ(r.code, cli::kExitRuntime);
    expect_error_line(r, "io");
    auto b = run({"benchmark", "--states", "1", "--shots", "900", "--output", (dir_ / "missing" / "b.json").string()});
    EXPECT_EQ(b.code, cli::kExitRuntime);
    expect_error_line(b, "io");
}

TEST_F(CliFiles, BenchmarkReportHasRatio) {
    auto r = run({"benchmark", "--qubits", "2", "--states", "4", "--shots", "90000", "--p10", "0.1", "--p01", "0.1",
        "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_GT(j.at("ratio").get<double>(), 1.0);
    EXPECT_EQ(j.at("report").at("states").size(), 4u);
}

TEST_F(CliFiles, BenchmarkFilesRoundTripAndRepeat) {
    auto path = dir_ / "bench.json";
    std::vector<std::string> args{"benchmark", "--states", "3", "--shots", "9000", "--seed", "11", "--shots-mode", "both",
        "--output", path.string()};
    auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    auto summaries = json::parse(r.out);
    ASSERT_EQ(summaries.size(), 2u);
    for (const char *mode : {"total", "per_basis"}) {
        auto file = dir_ / (std::string("bench_") + mode + ".json");
        ASSERT_TRUE(fs::exists(file)) << file;
        ASSERT_TRUE(fs::exists(dir_ / (std::string("bench_") + mode + ".csv")));
        std::string text = slurp(file);
        auto report = json::parse(text).get<iontomo::bench::BenchmarkReport>();
        EXPECT_EQ(iontomo::bench::shots_mode_name(report.config.shots_mode), mode);
        EXPECT_EQ(json(report).dump(2) + "\n", text);
    }
    std::string first = slurp(dir_ / "bench_total.json");
    std::string first_csv = slurp(dir_ / "bench_total.csv");
    ASSERT_EQ(run(args).code, 0);
    EXPECT_EQ(slurp(dir_ / "bench_total.json"), first);
    EXPECT_EQ(slurp(dir_ / "bench_total.csv"), first_csv);
}

TEST_F(CliFiles, DistributionsFileRoundTrip) {
    auto path = dir_ / "d.json";
    auto r = run({"distributions", "--lambda", "0.05", "--lambda-b", "3", "--lambda-d", "0.05", "-o", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out).at("output"), path.string());
    std::string text = slurp(path);
    auto study = json::parse(text).get<iontomo::bench::DistributionStudy>();
    EXPECT_EQ(study.threshold.k0, 1);
    EXPECT_EQ(json(study).dump(2) + "\n", text);
    ASSERT_EQ(run({"distributions", "--lambda", "0.05", "--lambda-b", "3", "--lambda-d", "0.05", "-o", path.string()}).code, 0);
    EXPECT_EQ(slurp(path), text);
}

TEST_F(CliFiles, EnvironmentOutputDirectory) {
    setenv(cli::kOutputDirEnv, dir_.c_str(), 1);
    auto r = run({"errors"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto file = dir_ / "errors.json";
    ASSERT_TRUE(fs::exists(file));
    auto m = json::parse(slurp(file)).get<iontomo::photon_stats::ReadoutErrorModel>();
    EXPECT_EQ(m.k0, 8);
    auto csv = run({"distributions", "--format", "csv"});
    ASSERT_EQ(csv.code, 0);
    EXPECT_TRUE(fs::exists(dir_ / "distributions.csv"));
    // An explicit --output still wins.
    auto explicit_path = dir_ / "mine.json";
    ASSERT_EQ(run({"errors", "--output", explicit_path.string()}).code, 0);
    EXPECT_TRUE(fs::exists(explicit_path));
}

TEST(Cli, RoundNumbers) {
    json j = {{"a", 0.123456789}, {"b", {1.0 / 3.0, 7}}, {"c", "text"}};
    auto r = cli::round_numbers(j, 3);
    EXPECT_EQ(r.at("a").get<double>(), 0.123);
    EXPECT_EQ(r.at("b")[0].get<double>(), 0.333);
    EXPECT_EQ(r.at("b")[1], 7);
    EXPECT_EQ(r.at("c"), "text");
    EXPECT_EQ(cli::round_numbers(j, 0), j);
}
