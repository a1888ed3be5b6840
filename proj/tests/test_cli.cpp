#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

struct CliRun {
    int status = -1;
    std::string out;
};

CliRun cli(const std::string& args) {
    const std::string cmd = std::string(ORBITKIT_CLI) + " " + args + " 2>/dev/null";
    CliRun r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int w = pclose(p);
    r.status = WIFEXITED(w) ? WEXITSTATUS(w) : -1;
    return r;
}

std::filesystem::path scratch(const std::string& name, const std::string& text) {
    const auto p = std::filesystem::temp_directory_path() / ("orbitkit_cli_" + name);
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Cli, RankPrintsAnInteger) {
    const CliRun r = cli("rank builtin:so3-spheres --at 1,0,0");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "2\n");
    EXPECT_EQ(cli("rank builtin:so3-spheres --at 0,0,0").out, "0\n");
}

TEST(Cli, BracketIsFieldJson) {
    const CliRun r = cli("bracket builtin:balan-pair 0 1");
    ASSERT_EQ(r.status, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j.contains("components"));
    EXPECT_EQ(j["components"].size(), 2u);
}

TEST(Cli, FlowPrintsTheEndpoint) {
    const CliRun r = cli("flow builtin:flag-line 0 --from -1 --t 2");
    ASSERT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("x1"), std::string::npos);
    EXPECT_NE(r.out.find("\n-1\n"), std::string::npos) << r.out;
}

TEST(Cli, CheckExitCodeFollowsTheOutcome) {
    const CliRun holds = cli("check integrable builtin:so3-spheres --at 1,0,0");
    EXPECT_EQ(holds.status, 0);
    EXPECT_EQ(nlohmann::json::parse(holds.out)["outcome"], "holds");
    const CliRun fails = cli("check integrable builtin:halfplane-x-noninteg --at 0,0");
    EXPECT_EQ(fails.status, 1);
    const auto j = nlohmann::json::parse(fails.out);
    EXPECT_EQ(j["outcome"], "fails");
    EXPECT_TRUE(j.contains("evidence"));
    EXPECT_TRUE(j.contains("params"));
}

TEST(Cli, CompanionFamilies) {
    EXPECT_EQ(cli("check lobry builtin:arjen-module:finite --at 0,0").status, 1);
    EXPECT_EQ(cli("check lobry builtin:arjen-module --at 0,0").status, 0);
}

TEST(Cli, UsageAndInputErrorsExitTwo) {
    EXPECT_EQ(cli("rank").status, 2);
    EXPECT_EQ(cli("frobnicate").status, 2);
    EXPECT_EQ(cli("rank builtin:no-such-case --at 0,0").status, 2);
    EXPECT_EQ(cli("rank builtin:so3-spheres --at 1,0").status, 2);
    const auto bad = scratch("bad.json", "{\"dimension\": 2,\n  \"members\": [ }\n");
    EXPECT_EQ(cli("rank " + bad.string() + " --at 0,0").status, 2);
    EXPECT_EQ(cli("check involutive builtin:so3-spheres --params '{\"region\": '").status, 2);
}

TEST(Cli, OrbitIsDeterministicAcrossRunsAndThreads) {
    const std::string args = "orbit builtin:so3-spheres --from 1,0,0 --budget 500 --seed 3";
    const CliRun a = cli(args), b = cli(args), c = cli(args + " --threads 4");
    ASSERT_EQ(a.status, 0);
    EXPECT_GT(a.out.size(), 100u);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
}

TEST(Cli, LeafmapIsDeterministicAcrossRunsAndThreads) {
    const std::string args = "leafmap builtin:arjen-module --box -1,1,-1,1 --res 5";
    const CliRun a = cli(args), b = cli(args), c = cli(args + " --threads 4");
    ASSERT_EQ(a.status, 0);
    EXPECT_EQ(a.out.rfind("# dims: 5,5 box: -1,1,-1,1\n", 0), 0u) << a.out;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
}

TEST(Cli, OutWritesAFile) {
    const auto p = std::filesystem::temp_directory_path() / "orbitkit_cli_rank.txt";
    std::filesystem::remove(p);
    EXPECT_EQ(cli("rank builtin:balan-pair --at 1,0 --out " + p.string()).status, 0);
    std::ifstream in(p);
    std::string s;
    std::getline(in, s);
    EXPECT_EQ(s, "2");
}

TEST(Cli, CorpusSelectedCase) {
    const CliRun r = cli("corpus --case flag-line");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
    EXPECT_EQ(cli("corpus --case nope").status, 2);
}
