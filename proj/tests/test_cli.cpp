#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mrscwc/baselines.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;  // stdout and stderr
};

Result run_cli(const std::string& args) {
    const std::string cmd = std::string(MRSCWC_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mrscwc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    const std::string flat = std::string(MRSCWC_FIXTURES) + "/flat.json";
    fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunOnFlatTerrainSucceeds) {
    const Result r = run_cli("--out " + path("rec.json") + " run --terrain " + flat + " --method cwc-tdt");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(read_file(path("rec.json")));
    EXPECT_TRUE(j.at("success").get<bool>());
    EXPECT_EQ(j.at("method"), "cwc-tdt");
    EXPECT_EQ(j.at("generator_version"), mrscwc::kGeneratorVersion);
}

TEST_F(Cli, FailedTrialExitsTwo) {
    const Result r = run_cli("--set time_limit=2 run --terrain " + flat + " --method d-tdt");
    EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(Cli, UnknownMethodListsTheValidNames) {
    const Result r = run_cli("run --terrain " + flat + " --method bogus");
    EXPECT_EQ(r.code, 1);
    for (const auto& m : mrscwc::kAllMethods) EXPECT_NE(r.out.find(mrscwc::to_string(m)), std::string::npos);
}

TEST_F(Cli, BadOverrideAndUsageErrors) {
    EXPECT_EQ(run_cli("--set nope=1 run --terrain " + flat + " --method cs-tdt").code, 1);
    EXPECT_EQ(run_cli("run --method cs-tdt").code, 1);
    EXPECT_EQ(run_cli("").code, 1);
    EXPECT_EQ(run_cli("--help").code, 0);
    EXPECT_EQ(run_cli("run --terrain " + path("missing.json") + " --method cs-tdt").code, 1);
}

TEST_F(Cli, LogHasHeaderAndConfig) {
    const Result r =
        run_cli("--set time_limit=1 run --terrain " + flat + " --method cwc-tdt --log " + path("t.csv"));
    ASSERT_EQ(r.code, 2) << r.out;
    std::istringstream in(read_file(path("t.csv")));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# terrain_id=", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# config=", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line, "t,robot,x,y,psi,omega_l,omega_r,k_alpha,tau_l,tau_r,tau_env_hat");
}

TEST_F(Cli, GenTerrainRejectsZeroCount) {
    EXPECT_EQ(run_cli("--out " + path("ds") + " gen-terrain --group A --count 0").code, 1);
    EXPECT_EQ(run_cli("--out " + path("ds") + " gen-terrain --group C --count 1").code, 1);
}

TEST_F(Cli, GenerateBenchReportPlot) {
    Result r = run_cli("--seed 5 --out " + path("ds") + " gen-terrain --group A --count 2");
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_TRUE(fs::exists(path("ds/manifest.json")));

    r = run_cli("--set time_limit=3 --jobs 2 --out " + path("res.json") + " bench --manifest " +
                path("ds/manifest.json") + " --methods cwc-tdt,d-astar --log-dir " + path("logs"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(read_file(path("res.json")));
    EXPECT_EQ(j.at("trials").size(), 4u);
    EXPECT_TRUE(fs::exists(path("res.txt")));
    EXPECT_TRUE(fs::exists(path("res.csv")));
    EXPECT_NE(r.out.find("Group A"), std::string::npos);

    r = run_cli("--out " + path("tables.csv") + " report --input " + path("res.json") + " --format csv");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(read_file(path("tables.csv")), read_file(path("res.csv")));
    EXPECT_EQ(run_cli("report --input " + path("res.json") + " --format xml").code, 1);

    fs::path log;
    for (const auto& e : fs::directory_iterator(path("logs"))) log = e.path();
    ASSERT_FALSE(log.empty());
    const std::string id = log.filename().string().substr(0, log.filename().string().find('_'));
    // One of the two terrains matches the log, the other is refused.
    int ok = 0, mismatched = 0;
    for (const auto& e : fs::directory_iterator(path("ds"))) {
        if (e.path().filename() == "manifest.json") continue;
        const Result p = run_cli("--out " + path("p.svg") + " plot --log " + log.string() + " --terrain " +
                                 e.path().string());
        if (p.code == 0) ++ok;
        else if (p.out.find(id) != std::string::npos) ++mismatched;
    }
    EXPECT_EQ(ok, 1);
    EXPECT_EQ(mismatched, 1);
    EXPECT_NE(read_file(path("p.svg")).find("<polyline"), std::string::npos);
}
