#include "wadebench/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "wadebench");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = wadebench::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("wadebench_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

std::size_t line_count(const fs::path& path)
{
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

}  // namespace

TEST(Cli, GenIsDeterministic)
{
    const auto a = run_cli({"gen", "--task", "3", "--seed", "5", "--count", "20"});
    const auto b = run_cli({"gen", "--task", "3", "--seed", "5", "--count", "20"});
    const auto c = run_cli({"gen", "--task", "3", "--seed", "6", "--count", "20"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    EXPECT_FALSE(a.out.empty());
}

TEST(Cli, GenWritesFileWithSplit)
{
    const auto dir = scratch("gen");
    const auto r = run_cli({"gen", "--task", "1", "--count", "10", "--split", "0.8", "--out", (dir / "d.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "d.txt"));
    fs::remove_all(dir);
}

TEST(Cli, OutOfRangeTaskIsUsageError)
{
    const auto r = run_cli({"gen", "--task", "11"});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
}

TEST(Cli, WadePrintsScores)
{
    const auto dir = scratch("wade");
    write_file(dir / "perfect.csv", "step,accuracy\n1,1.0\n");
    write_file(dir / "hand.csv", "step,accuracy\n1,0.2\n2,0.5\n3,0.5\n4,0.9\n");
    auto r = run_cli({"wade", (dir / "perfect.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "1.0\n");
    r = run_cli({"wade", (dir / "hand.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(r.out), 0.3, 1e-12);
    r = run_cli({"wade", (dir / "hand.csv").string(), "--checkpoints", "0.5"});
    EXPECT_NEAR(std::stod(r.out), 0.5, 1e-12);
    fs::remove_all(dir);
}

TEST(Cli, MalformedCurveIsFormatError)
{
    const auto dir = scratch("bad");
    write_file(dir / "bad.csv", "step,accuracy\n1,0.5\n2,zzz\n");
    const auto r = run_cli({"wade", (dir / "bad.csv").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error[format]"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
    fs::remove_all(dir);
}

TEST(Cli, MissingPlanIsIoError)
{
    const auto r = run_cli({"run", "/nonexistent/plan.cfg"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error[io]"), std::string::npos) << r.err;
}

TEST(Cli, RunHonoursFlagOverridesAndReports)
{
    const auto dir = scratch("run");
    write_file(dir / "plan.cfg", "tasks = 1\nmodels = esn\nruns = 5\nsequences = 20\nesn.K = 20\n");
    const auto r = run_cli({"run", (dir / "plan.cfg").string(), "--runs", "2", "--model", "esn,reca", "--rule", "30",
                            "--out", (dir / "out").string(), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(dir / "out" / "records.jsonl"), 4u);
    EXPECT_TRUE(fs::exists(dir / "out" / "curves" / "task1_reca-30_run1.csv"));
    EXPECT_NE(r.out.find("reca:30"), std::string::npos) << r.out;

    const auto rep = run_cli({"report", (dir / "out" / "records.jsonl").string(), "--csv"});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_EQ(rep.out.substr(0, 5), "task,");
    fs::remove_all(dir);
}

TEST(Cli, SweepReportsBestRule)
{
    const auto r = run_cli({"sweep", "--task", "1", "--rule", "30,90", "--runs", "1", "--count", "20", "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("best rule"), std::string::npos) << r.out;
}

TEST(Cli, BadPlanKeyIsConfigError)
{
    const auto dir = scratch("plan");
    write_file(dir / "plan.cfg", "bogus = 1\n");
    const auto r = run_cli({"run", (dir / "plan.cfg").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error[config]"), std::string::npos) << r.err;
    fs::remove_all(dir);
}
