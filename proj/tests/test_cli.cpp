#include "evacsim/cli.hpp"
#include "evacsim/experiment.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace evacsim;
using evacsim::testing::fixture_path;
using evacsim::testing::scenario_path;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::main(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() /
               ("evacsim-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string golden(const std::string& name) { return slurp(std::filesystem::path(EVACSIM_GOLDEN_DIR) / name); }

}  // namespace

TEST(Help, MatchesGoldenFiles) {
    EXPECT_EQ(invoke({"--help"}).out, golden("help.txt"));
    for (const std::string sub : {"run", "cohort", "analyze", "serve"}) {
        const Result r = invoke({sub, "--help"});
        EXPECT_EQ(r.code, cli::kExitOk) << sub;
        EXPECT_EQ(r.out, golden("help_" + sub + ".txt")) << sub;
    }
}

TEST(Help, ListsEveryFlag) {
    const std::string all = golden("help_run.txt") + golden("help_cohort.txt") + golden("help_serve.txt");
    for (const std::string flag : {"--seed", "--npcs", "--backend", "--dt", "--max-time", "--out", "--port", "--group",
                                   "--runs", "--workers", "--address"})
        EXPECT_NE(all.find(flag), std::string::npos) << flag;
}

TEST(Run, SameSeedGivesIdenticalFiles) {
    const auto dir = temp_dir();
    std::vector<std::string> logs;
    for (int i = 0; i < 2; ++i) {
        const auto out = dir / ("run" + std::to_string(i)) / "log.csv";
        const Result r = invoke({"run", scenario_path("dei_like.map"), "--seed", "7", "--npcs", "30", "--out", out.string()});
        ASSERT_EQ(r.code, cli::kExitOk) << r.err;
        logs.push_back(r.out);
    }
    EXPECT_EQ(logs[0], logs[1]);
    std::vector<std::filesystem::path> a, b;
    for (const auto& e : std::filesystem::directory_iterator(dir / "run0")) a.push_back(e.path().filename());
    for (const auto& e : std::filesystem::directory_iterator(dir / "run1")) b.push_back(e.path().filename());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_EQ(a, b);
    EXPECT_EQ(a.size(), 2u);  // tabular log plus companion
    for (const auto& name : a) EXPECT_EQ(slurp(dir / "run0" / name), slurp(dir / "run1" / name)) << name;
}

TEST(Run, SummaryIsMachineReadable) {
    const Result r = invoke({"run", scenario_path("dei_like.map"), "--seed", "3", "--npcs", "10"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("escaped "), std::string::npos);
    EXPECT_NE(r.out.find("mean_egress_s "), std::string::npos);
    EXPECT_NE(r.out.find("timeline_events "), std::string::npos);
    EXPECT_NE(r.out.find("{\"summary\":"), std::string::npos);
}

TEST(Run, MissingScenarioNamesPath) {
    const Result r = invoke({"run", "/nonexistent/building.map"});
    EXPECT_EQ(r.code, cli::kExitScenario);
    EXPECT_NE(r.err.find("/nonexistent/building.map"), std::string::npos) << r.err;
}

TEST(Run, BadArgumentsAreUsageErrors) {
    EXPECT_EQ(invoke({"run", scenario_path("dei_like.map"), "--backend", "teleport"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"run", scenario_path("dei_like.map"), "--dt", "-1"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"run", scenario_path("dei_like.map"), "--bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"cohort", scenario_path("dei_like.map"), "--group", "E"}).code, cli::kExitUsage);
}

TEST(Run, BothBackendsComplete) {
    for (const std::string backend : {"ca", "force"}) {
        const Result r =
            invoke({"run", scenario_path("dei_like.map"), "--seed", "5", "--npcs", "30", "--backend", backend});
        EXPECT_EQ(r.code, cli::kExitOk) << backend << r.err;
        EXPECT_EQ(r.out.find("outcome Timeout"), std::string::npos) << backend << "\n" << r.out;
    }
}

TEST(Cohort, WritesOneRowPerSeedInOrder) {
    const auto dir = temp_dir();
    const auto log = dir / "cohort.csv";
    const Result r = invoke({"cohort", scenario_path("dei_like.map"), "--group", "B", "--runs", "4", "--seed", "20",
                             "--npcs", "10", "--workers", "2", "--out", log.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto rows = import_records(log.string());
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].seed, 20 + i);
        EXPECT_EQ(rows[i].group, GroupLabel::B);
    }
}

TEST(Analyze, GroupMeansFixture) {
    const Result r = invoke({"analyze", fixture_path("group_means.csv")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    // rows in A, B, C, D order
    const auto a = r.out.find("A 23.9 8"), b = r.out.find("B 43.9 6"), c = r.out.find("C 58.0 5"),
               d = r.out.find("D 145.1 11");
    ASSERT_NE(a, std::string::npos) << r.out;
    ASSERT_NE(b, std::string::npos) << r.out;
    ASSERT_NE(c, std::string::npos) << r.out;
    ASSERT_NE(d, std::string::npos) << r.out;
    EXPECT_LT(a, b);
    EXPECT_LT(b, c);
    EXPECT_LT(c, d);
}

TEST(Analyze, HeaderOnlyPrintsEmptyTable) {
    const auto dir = temp_dir();
    const auto log = dir / "empty.csv";
    std::ofstream(log) << kRecordHeader << "\n";
    const Result r = invoke({"analyze", log.string()});
    EXPECT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("group mean_egress_s sessions"), std::string::npos);
    EXPECT_EQ(r.out.find("A "), std::string::npos);
}

TEST(Analyze, CorruptRowIsCited) {
    const auto dir = temp_dir();
    const auto log = dir / "corrupt.csv";
    std::ifstream in(fixture_path("group_means.csv"));
    std::ofstream out(log);
    std::string line;
    for (int row = 1; std::getline(in, line); ++row) out << (row == 5 ? "participant-04,C,104,AllResolved" : line) << "\n";
    out.close();
    const Result r = invoke({"analyze", log.string()});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("row 5"), std::string::npos) << r.err;
}

TEST(Analyze, MissingLogIsUsageError) {
    const Result r = invoke({"analyze", "/nonexistent/sessions.csv"});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("/nonexistent/sessions.csv"), std::string::npos) << r.err;
}
