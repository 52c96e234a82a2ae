#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include <ergolab/runner.hpp>

using namespace ergolab;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() / ("ergolab_runner_" + std::string(
                   ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        setenv("ERGOLAB_OUTPUT_ROOT", dir_.c_str(), 1);
    }
    void TearDown() override
    {
        unsetenv("ERGOLAB_OUTPUT_ROOT");
        fs::remove_all(dir_);
    }

    fs::path write_config(const std::string& name, const std::string& text) const
    {
        const fs::path p = dir_ / name;
        write_file(p, text);
        return p;
    }

    int cli(const std::string& args, std::string* out = nullptr) const
    {
        const fs::path log = dir_ / "cli.log";
        const std::string cmd = std::string("\"") + ERGOLAB_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        if (out) *out = read_file(log);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path dir_;
};

const char* halving_typical = R"({
  "kind": "typical_set_fraction",
  "system": {"family": "Halving"},
  "target": {"kind": "dirac", "point": [0.0]},
  "points": 20, "n": 1000, "tol": 0.01,
  "output": "halving",
  "expect": [{"metric": "fraction", "op": "==", "value": 1.0}]
})";

} // namespace

TEST_F(CliTest, RunWritesReportWithFractionOne)
{
    const auto cfg = write_config("c.json", halving_typical);
    std::string out;
    EXPECT_EQ(cli("run " + cfg.string(), &out), 0) << out;
    const Json rep = Json::parse(read_file(dir_ / "halving" / "report.json"));
    EXPECT_EQ(rep["scalars"]["fraction"], 1.0);
    EXPECT_EQ(rep["config"]["kind"], "typical_set_fraction");
    EXPECT_EQ(rep["config"]["n"], 1000);
    EXPECT_TRUE(fs::exists(dir_ / "halving" / "report.txt"));
    EXPECT_TRUE(fs::exists(dir_ / "halving" / "points.csv"));
}

TEST_F(CliTest, CheckModeGatesOnExpectations)
{
    const auto good = write_config("good.json", halving_typical);
    EXPECT_EQ(cli("run --check " + good.string()), 0);
    std::string bad_text = halving_typical;
    bad_text.replace(bad_text.find("\"==\""), 4, "\"<\"");
    const auto bad = write_config("bad.json", bad_text);
    EXPECT_EQ(cli("run " + bad.string()), 0);
    EXPECT_EQ(cli("run --check " + bad.string()), 1);
}

TEST_F(CliTest, UnknownKeyExitsTwoNamingKey)
{
    const auto cfg = write_config("c.json", "{\n  \"kind\": \"orbit\",\n  \"system\": {\"family\": \"Halving\"},\n"
                                            "  \"alpha_\": 0.2\n}\n");
    std::string out;
    EXPECT_EQ(cli("run " + cfg.string(), &out), 2);
    EXPECT_NE(out.find("alpha_"), std::string::npos) << out;
    EXPECT_NE(out.find("line 4"), std::string::npos) << out;
}

TEST_F(CliTest, InvalidParamsExitTwo)
{
    const auto cfg = write_config(
        "c.json", R"({"kind": "orbit", "system": {"family": "DiscRotation", "params": {"gamma": 1.0}}})");
    std::string out;
    EXPECT_EQ(cli("run " + cfg.string(), &out), 2);
    EXPECT_NE(out.find("gamma"), std::string::npos) << out;
}

TEST_F(CliTest, UnknownExpectationMetricExitsTwo)
{
    const auto cfg = write_config("c.json", R"({"kind": "invariance_residual", "system": {"family": "Halving"},
        "measure": {"kind": "uniform", "atoms": 10}, "expect": [{"metric": "nonexistent", "op": "<", "value": 1}]})");
    EXPECT_EQ(cli("run " + cfg.string()), 2);
}

TEST_F(CliTest, IoFailuresExitThree)
{
    EXPECT_EQ(cli("run " + (dir_ / "missing.json").string()), 3);
    write_file(dir_ / "blocker", "x");
    const auto cfg = write_config("c.json", R"({"kind": "invariance_residual", "system": {"family": "Halving"},
        "measure": {"kind": "uniform", "atoms": 10}, "output": "blocker/sub"})");
    EXPECT_EQ(cli("run " + cfg.string()), 3);
}

TEST_F(CliTest, UsageErrorsAreNonzero)
{
    EXPECT_NE(cli(""), 0);
    EXPECT_NE(cli("frobnicate"), 0);
}

TEST_F(CliTest, ListSystemsCatalog)
{
    std::string out;
    ASSERT_EQ(cli("list-systems", &out), 0);
    for (const auto& info : family_catalog()) {
        const std::string header = std::string(info.name) + "  [";
        const auto first = out.find(header);
        ASSERT_NE(first, std::string::npos) << info.name;
        EXPECT_EQ(out.find(header, first + 1), std::string::npos) << info.name;
    }
    const auto rot = out.find("DiscRotation  [");
    const auto next = out.find("DiscNoRotation  [");
    const std::string rot_block = out.substr(rot, next - rot);
    for (const char* p : {"param alpha", "param beta", "param gamma", "param r "})
        EXPECT_NE(rot_block.find(p), std::string::npos) << p;
    const auto multb = out.find("MultB  [");
    EXPECT_NE(out.find("measure-dependent", multb), std::string::npos);
}

TEST(Runner, TentEnsembleTraceHasLengthN)
{
    const auto cfg = parse_config(R"({"kind": "ensemble", "system": {"family": "TentAdditive", "params": {"epsilon": 0.05}},
        "n": 300, "measure": {"kind": "uniform", "atoms": 20000}, "particles_alt": 0, "resolution": [50, 1]})");
    const RunResult r = execute(cfg);
    const Artifact* trace = nullptr;
    const Artifact* hist = nullptr;
    for (const auto& a : r.artifacts) {
        if (a.name == "mean_trace.csv") trace = &a;
        if (a.name == "averaged.csv") hist = &a;
    }
    ASSERT_NE(trace, nullptr);
    ASSERT_NE(hist, nullptr);
    std::istringstream ts(trace->content);
    EXPECT_EQ(read_trace_csv(ts).size(), 300u);
    std::istringstream hs(hist->content);
    const GridMeasure g = read_grid_csv(hs, Phase::Interval01, {50, 1});
    EXPECT_NEAR(g.total_mass(), 1.0, 1e-12);
    // loose stability bound for the additive tent ensemble
    EXPECT_LT(l1_distance(g, reference_grid(Phase::Interval01, {50, 1})), 0.1);
    EXPECT_EQ(r.report.scalar("trace_length"), 300.0);
}

TEST(Runner, SameConfigSameBytes)
{
    for (const char* text :
         {R"({"kind": "weak_ergodicity_fraction", "system": {"family": "DiscRotation"}, "measure": {"kind": "circle", "atoms": 512},
              "points": 10, "n": 2000})",
          R"({"kind": "naturality_check", "system": {"family": "DiscontInterval"}, "n": 200, "seed_atoms": 2000})",
          R"({"kind": "ensemble", "system": {"family": "MultB"}, "n": 30, "measure": {"kind": "uniform", "atoms": 3000},
              "particles_alt": 1000})"}) {
        const auto cfg = parse_config(text);
        const RunResult a = execute(cfg);
        const RunResult b = execute(cfg);
        EXPECT_EQ(report_document(a).dump(), report_document(b).dump()) << text;
        ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
        for (std::size_t i = 0; i < a.artifacts.size(); ++i) EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content);
    }
}

TEST(Runner, MasterSeedChangesSampling)
{
    const std::string base = R"({"kind": "typical_set_fraction", "system": {"family": "Doubling"}, "points": 5, "n": 100, "seed": )";
    const RunResult a = execute(parse_config(base + "1}"));
    const RunResult b = execute(parse_config(base + "2}"));
    EXPECT_NE(to_json(a.report)["tables"]["points"].dump(), to_json(b.report)["tables"]["points"].dump());
}

TEST(Runner, ThreadCountDoesNotChangeReport)
{
    const std::string base = R"({"kind": "cesaro", "system": {"family": "DiscJump"}, "n": 50,
        "measure": {"kind": "uniform", "atoms": 4000}, "threads": )";
    const RunResult a = execute(parse_config(base + "1}"));
    const RunResult b = execute(parse_config(base + "3}"));
    EXPECT_EQ(to_json(a.report)["scalars"].dump(), to_json(b.report)["scalars"].dump());
}

TEST(Runner, EveryKindRunsOnDefaults)
{
    for (const auto& [kind, name] : experiment_kinds()) {
        const std::string family = kind == ExperimentKind::Ensemble ? "MultA" : "DiscontInterval";
        const auto cfg = parse_config(R"({"kind": ")" + std::string(name) + R"(", "system": {"family": ")" + family
                                      + R"("}, "n": 64, "points": 4, "n_max": 64, "samples_per_cell": 4, "seed_atoms": 500,
                                      "ns": [10, 20], "particles_alt": 0, "measure": {"kind": "uniform", "atoms": 500}})");
        RunResult r;
        ASSERT_NO_THROW(r = execute(cfg)) << name;
        EXPECT_EQ(r.report.probe, std::string(name));
        EXPECT_FALSE(r.report.scalars.empty() && r.report.flags.empty()) << name;
    }
}

TEST(Runner, TelescopingHasNoViolations)
{
    for (Family f : all_families) {
        const SystemSpec s(f);
        if (s.measure_dependent()) continue;
        const auto cfg = parse_config(R"({"kind": "telescoping", "system": {"family": ")" + std::string(s.name())
                                      + R"("}, "points": 3, "ns": [10, 100]})");
        EXPECT_EQ(execute(cfg).report.scalar("violations"), 0.0) << s.name();
    }
}

TEST(Runner, OutputRootOverride)
{
    setenv("ERGOLAB_OUTPUT_ROOT", "/tmp/ergolab_root_probe", 1);
    EXPECT_EQ(resolve_output("a/b"), fs::path("/tmp/ergolab_root_probe/a/b"));
    EXPECT_EQ(resolve_output("/abs/dir"), fs::path("/abs/dir"));
    unsetenv("ERGOLAB_OUTPUT_ROOT");
    EXPECT_EQ(resolve_output("x"), fs::current_path() / "x");
}

TEST(Runner, SuiteHasOneRowPerCriterion)
{
    const auto suite = reproduction_suite(1);
    ASSERT_EQ(suite.size(), 10u);
    for (std::size_t i = 0; i < suite.size(); ++i) EXPECT_EQ(suite[i].id, static_cast<int>(i) + 1);
}
