#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "saddleflow/io.hpp"

namespace fs = std::filesystem;
using namespace saddleflow;

namespace {

struct Outcome {
    int code = -1;
    std::string output; // stdout and stderr interleaved
};

Outcome cli(const std::string& args) {
    const std::string cmd = std::string(SADDLEFLOW_CLI_PATH) + " " + args + " 2>&1";
    Outcome out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return out;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) out.output += buf.data();
    const int status = pclose(pipe);
    out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("saddleflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_preset(const std::string& preset) {
        const Outcome o = cli("preset " + preset);
        EXPECT_EQ(o.code, 0) << o.output;
        write_text_file(path(preset + ".json"), o.output);
        return path(preset + ".json");
    }

    fs::path dir_;
};

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

} // namespace

TEST_F(Cli, RunRegularizedPresetEndsNearOrigin) {
    const std::string scenario = write_preset("compare_c1");
    const Outcome o = cli("run " + scenario + " -o " + path("r1"));
    ASSERT_EQ(o.code, 0) << o.output;
    const CsvTable traj = parse_csv(read_text_file(path("r1/trajectory.csv")));
    const auto& last = traj.rows.back();
    double sq = 0.0;
    for (const char* c : {"x_1", "x_2", "y_1", "y_2"}) {
        const auto col = traj.column(c);
        sq += col.back() * col.back();
    }
    EXPECT_LE(std::sqrt(sq), 0.1);
    EXPECT_EQ(last.front(), 20.0);
    const json manifest = json::parse(read_text_file(path("r1/manifest.json")));
    EXPECT_EQ(manifest["outputs"], json::array({"trajectory.csv", "series.csv", "manifest.json"}));
}

TEST_F(Cli, RerunAndManifestReplayAreByteIdentical) {
    const std::string scenario = write_preset("compare_c0");
    ASSERT_EQ(cli("run " + scenario + " -o " + path("a")).code, 0);
    ASSERT_EQ(cli("run " + scenario + " -o " + path("b")).code, 0);
    ASSERT_EQ(cli("run " + path("a/manifest.json") + " -o " + path("c")).code, 0);
    for (const char* f : {"trajectory.csv", "series.csv"}) {
        const std::string ref = read_text_file(path("a/") + f);
        EXPECT_EQ(ref, read_text_file(path("b/") + f)) << f;
        EXPECT_EQ(ref, read_text_file(path("c/") + f)) << f;
    }
}

TEST_F(Cli, InvalidParameterExitsTwoNamingField) {
    const std::string scenario = write_preset("compare_c1");
    json j = json::parse(read_text_file(scenario));
    j["params"]["q"] = 1.5;
    write_text_file(path("bad.json"), j.dump());
    const Outcome o = cli("run " + path("bad.json") + " -o " + path("out"));
    EXPECT_EQ(o.code, 2);
    EXPECT_TRUE(contains(o.output, "params.q")) << o.output;
    EXPECT_TRUE(contains(o.output, "0 < q < 1")) << o.output;
}

TEST_F(Cli, SyntaxErrorExitsTwoWithLine) {
    write_text_file(path("broken.json"), "{\n \"name\": \"x\",\n \"params\": {\n");
    const Outcome o = cli("run " + path("broken.json"));
    EXPECT_EQ(o.code, 2);
    EXPECT_TRUE(contains(o.output, "line")) << o.output;
    EXPECT_EQ(cli("run " + path("missing.json")).code, 2);
}

TEST_F(Cli, IntegrationFailureExitsThree) {
    const std::string scenario = write_preset("compare_c1");
    json j = json::parse(read_text_file(scenario));
    j["integrator"]["rel_tol"] = 1e-16;
    j["integrator"]["abs_tol"] = 1e-300;
    j["integrator"]["h_min"] = 1e-3;
    j["integrator"]["h_init"] = 1e-3;
    j["integrator"]["h_max"] = 1e-3;
    write_text_file(path("stiff.json"), j.dump());
    const Outcome o = cli("run " + path("stiff.json") + " -o " + path("out"));
    EXPECT_EQ(o.code, 3) << o.output;
    EXPECT_TRUE(contains(o.output, "last good t")) << o.output;
}

TEST_F(Cli, CheckReportsRegimes) {
    Outcome o = cli("check --alpha 3 --q 0.8 --p 2.5 --c 1 --beta-pow 0.5");
    ASSERT_EQ(o.code, 0) << o.output;
    EXPECT_TRUE(contains(o.output, "regime: fast"));

    o = cli("check --alpha 3 --q 0.8 --p 0.8 --c 1 --beta-pow 0.5");
    ASSERT_EQ(o.code, 0);
    EXPECT_TRUE(contains(o.output, "regime: slow"));
    EXPECT_TRUE(contains(o.output, "regime: strong"));
    EXPECT_FALSE(contains(o.output, "regime: fast"));

    o = cli("check --c 0");
    ASSERT_EQ(o.code, 0);
    EXPECT_TRUE(contains(o.output, "vacuous"));
    EXPECT_FALSE(contains(o.output, "regime: strong"));

    o = cli("check --p 0.8 --json");
    ASSERT_EQ(o.code, 0);
    EXPECT_EQ(json::parse(o.output)["regimes"], json::array({"slow", "strong"}));

    EXPECT_EQ(cli("check --q 1.5").code, 2);
    EXPECT_EQ(cli("check --alpha abc").code, 2);
}

TEST_F(Cli, RateFitsAndFlagsBadData) {
    std::string csv = "t,v,w\n";
    for (int k = 1; k <= 100; ++k) {
        csv += format_double(k) + "," + format_double(std::pow(k, -2.0)) + "," + (k == 50 ? "0" : "1") + "\n";
    }
    write_text_file(path("s.csv"), csv);
    Outcome o = cli("rate " + path("s.csv") + " --column v --ta 1 --tb 100");
    ASSERT_EQ(o.code, 0) << o.output;
    const double slope = std::strtod(o.output.substr(o.output.find("slope ") + 6).c_str(), nullptr);
    EXPECT_NEAR(slope, -2.0, 1e-10);
    EXPECT_EQ(cli("rate " + path("s.csv") + " --column w --ta 1 --tb 100").code, 4);
    EXPECT_EQ(cli("rate " + path("s.csv") + " --column w --ta 1 --tb 100 --floor").code, 0);
    EXPECT_EQ(cli("rate " + path("s.csv") + " --column nope --ta 1 --tb 100").code, 4);
    EXPECT_EQ(cli("rate " + path("s.csv") + " --column v --ta 1 --tb 5").code, 4);
}

TEST_F(Cli, MinNormBuiltinAndQuadratic) {
    Outcome o = cli("minnorm --problem example1 -o " + path("p1.csv"));
    ASSERT_EQ(o.code, 0) << o.output;
    EXPECT_TRUE(contains(o.output, "z_bar 0 0 0 0")) << o.output;

    o = cli("minnorm --problem quadratic --shift 1,-2 --m 1 -o " + path("p2.csv"));
    ASSERT_EQ(o.code, 0) << o.output;
    const CsvTable path_table = parse_csv(read_text_file(path("p2.csv")));
    EXPECT_EQ(path_table.header, (std::vector<std::string>{"epsilon", "z_1", "z_2", "z_3", "grad_norm"}));
    for (const auto& row : path_table.rows) {
        EXPECT_LE(std::sqrt(row[1] * row[1] + row[2] * row[2] + row[3] * row[3]), std::sqrt(5.0) + 1e-9);
    }
    const auto z1 = path_table.column("z_1");
    EXPECT_NEAR(z1.back(), 1.0, 1e-6);
}

TEST_F(Cli, MinNormNonConvergenceExitsFive) {
    const Outcome o = cli("minnorm --problem quadratic --shift 10,-10 --eps-last 8 -o " + path("p.csv"));
    EXPECT_EQ(o.code, 5) << o.output;
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    EXPECT_EQ(cli("run").code, 2);
    EXPECT_EQ(cli("minnorm --problem regression").code, 2);
    EXPECT_EQ(cli("preset nope").code, 2);
    EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(Cli, ComparePresetWritesPerScenarioDirectories) {
    const Outcome o = cli("compare -o " + path("cmp"));
    ASSERT_EQ(o.code, 0) << o.output;
    for (const char* name : {"compare_c1", "compare_c0"}) {
        for (const char* f : {"trajectory.csv", "series.csv", "manifest.json"}) {
            EXPECT_TRUE(fs::exists(dir_ / "cmp" / name / f)) << name << "/" << f;
        }
    }
}

TEST_F(Cli, RegressPresetWritesSummary) {
    const Outcome o = cli("regress --kappa 10 --m 10 --n 20 --t-end 10 -o " + path("reg"));
    ASSERT_EQ(o.code, 0) << o.output;
    const CsvTable summary = parse_csv(read_text_file(path("reg/summary.csv")));
    EXPECT_EQ(summary.rows.size(), 3u);
    EXPECT_TRUE(fs::exists(dir_ / "reg" / "regress_q0.2_r0.1_m10_n20_kappa10_c10" / "problem.json"));
}
