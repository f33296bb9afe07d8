#include "polygan/commands.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

using namespace polygan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "polygan_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json tiny_config(std::int64_t steps = 40) {
    return {{"schema_version", 1},
            {"manifold", {{"id", "sin2d"}}},
            {"generator", {{"variant", "model2"}, {"order", 4}, {"width", 5}}},
            {"training",
             {{"steps", steps}, {"batch", 16}, {"discriminator_widths", {8, 8}}, {"history_every", 10},
              {"monitor_samples", 32}}},
            {"output", {{"samples", 100}}}};
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const auto path = dir / "config.json";
    write_json_file(path.string(), doc);
    return path;
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(POLYGAN_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Verify, DefaultPassesWithSevenReports) {
    std::ostringstream out;
    EXPECT_EQ(cmd_verify(0, 1e-9, out), kExitOk);
    std::istringstream lines(out.str());
    std::string line;
    std::vector<std::string> names;
    while (std::getline(lines, line)) {
        const auto r = json::parse(line);
        EXPECT_TRUE(r["passed"].get<bool>()) << line;
        names.push_back(r["name"]);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"hadamard_kr_two_factors", "hadamard_kr_n_factors", "model1_third_order",
                                               "model2_second_order", "model2_third_order",
                                               "model1_nth_order", "degree_probe"}));
}

TEST(Verify, ZeroToleranceFails) {
    std::ostringstream out;
    EXPECT_EQ(cmd_verify(0, 0.0, out), kExitVerifyFailed);
}

TEST(Verify, SameSeedSameBytes) {
    std::ostringstream a, b;
    cmd_verify(7, 1e-9, a);
    cmd_verify(7, 1e-9, b);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Train, WritesArtifacts) {
    const auto dir = scratch_dir("train");
    const auto cfg = write_config(dir, tiny_config());
    std::ostringstream out, err;
    ASSERT_EQ(cmd_train(cfg.string(), (dir / "run").string(), out, err), kExitOk) << err.str();
    for (const char* name : {"checkpoint.json", "history.json", "samples.csv", "manifest.json"})
        EXPECT_TRUE(fs::exists(dir / "run" / name)) << name;
    const auto summary = json::parse(out.str());
    EXPECT_TRUE(summary.contains("coverage"));
    EXPECT_EQ(summary["samples"], 100);

    const auto manifest = read_json_file((dir / "run" / "manifest.json").string());
    for (const auto& [key, path] : manifest["outputs"].items()) EXPECT_TRUE(fs::exists(path.get<std::string>())) << key;
    EXPECT_EQ(manifest["version"], kVersion);
    EXPECT_TRUE(manifest.contains("started_utc"));

    const auto history = read_json_file((dir / "run" / "history.json").string());
    EXPECT_EQ(history["history"].size(), 4u);
    EXPECT_EQ(history["metadata"]["seed"], 0);
    EXPECT_EQ(history["metadata"]["config"]["training"]["lr_generator"], 1e-4);

    const Matrix samples = read_samples_csv((dir / "run" / "samples.csv").string());
    EXPECT_EQ(samples.rows(), 2);
    EXPECT_EQ(samples.cols(), 100);
}

TEST(Train, DeterministicAndSnapshotReruns) {
    const auto dir = scratch_dir("train_det");
    const auto cfg = write_config(dir, tiny_config());
    std::ostringstream o1, o2, o3, err;
    ASSERT_EQ(cmd_train(cfg.string(), (dir / "a").string(), o1, err), kExitOk);
    ASSERT_EQ(cmd_train(cfg.string(), (dir / "b").string(), o2, err), kExitOk);
    EXPECT_EQ(o1.str(), o2.str());
    for (const char* name : {"checkpoint.json", "history.json", "samples.csv"})
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;

    // The manifest's config snapshot reproduces the run.
    const auto manifest = read_json_file((dir / "a" / "manifest.json").string());
    const auto snap = dir / "snapshot.json";
    write_json_file(snap.string(), manifest["config"]);
    ASSERT_EQ(cmd_train(snap.string(), (dir / "c").string(), o3, err), kExitOk);
    for (const char* name : {"checkpoint.json", "history.json", "samples.csv"})
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "c" / name)) << name;
}

TEST(Train, InvalidConfigExitsTwo) {
    const auto dir = scratch_dir("train_bad");
    auto doc = tiny_config();
    doc.erase("manifold");
    const auto cfg = write_config(dir, doc);
    std::ostringstream out, err;
    EXPECT_EQ(cmd_train(cfg.string(), (dir / "run").string(), out, err), kExitInputError);
    EXPECT_NE(err.str().find("manifold"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "run"));
    EXPECT_EQ(cmd_train((dir / "nope.json").string(), (dir / "run").string(), out, err), kExitInputError);
}

TEST(Train, DivergenceExitsThree) {
    const auto dir = scratch_dir("train_div");
    auto doc = tiny_config(2000);
    doc["generator"]["order"] = 12;
    doc["training"]["lr_generator"] = 1e30;
    doc["training"]["lr_discriminator"] = 1e30;
    const auto cfg = write_config(dir, doc);
    std::ostringstream out, err;
    EXPECT_EQ(cmd_train(cfg.string(), (dir / "run").string(), out, err), kExitDiverged);
    EXPECT_NE(err.str().find("diverged"), std::string::npos);
}

class SampleAndReport : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = scratch_dir("sample");
        const auto cfg = write_config(dir_, tiny_config());
        std::ostringstream out, err;
        ASSERT_EQ(cmd_train(cfg.string(), (dir_ / "run").string(), out, err), kExitOk);
        ckpt_ = (dir_ / "run" / "checkpoint.json").string();
    }
    static inline fs::path dir_;
    static inline std::string ckpt_;
};

TEST_F(SampleAndReport, SampleCountsAndDeterminism) {
    std::ostringstream err;
    const auto a = (dir_ / "a.csv").string(), b = (dir_ / "b.csv").string(), c = (dir_ / "c.csv").string();
    ASSERT_EQ(cmd_sample(ckpt_, 2000, 3, a, err), kExitOk);
    ASSERT_EQ(cmd_sample(ckpt_, 2000, 3, b, err), kExitOk);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(read_samples_csv(a).cols(), 2000);
    ASSERT_EQ(cmd_sample(ckpt_, 0, 3, c, err), kExitOk);
    EXPECT_EQ(slurp(c), "x1,x2\n");
    EXPECT_EQ(cmd_sample(ckpt_, -1, 3, c, err), kExitInputError);
}

TEST_F(SampleAndReport, CorruptCheckpointExitsTwo) {
    std::ostringstream err;
    auto doc = read_json_file(ckpt_);
    doc["arrays"].erase("C");
    const auto bad = (dir_ / "bad.json").string();
    write_json_file(bad, doc);
    EXPECT_EQ(cmd_sample(bad, 10, 0, (dir_ / "x.csv").string(), err), kExitInputError);
    {
        std::ofstream((dir_ / "garbage.json")) << "[1, 2";
    }
    EXPECT_EQ(cmd_sample((dir_ / "garbage.json").string(), 10, 0, (dir_ / "x.csv").string(), err),
              kExitInputError);
}

TEST(Report, ExactSamples) {
    const auto dir = scratch_dir("report_exact");
    const auto path = (dir / "s.csv").string();
    ManifoldSpec spec{ManifoldId::astroid};
    write_samples_csv(path, sample(spec, 2000, 1));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_report(path, spec, 16, out, err), kExitOk);
    const auto r = json::parse(out.str());
    EXPECT_LE(r["mean_residual"].get<double>(), 1e-12);
    EXPECT_EQ(r["coverage"], 1.0);
}

TEST(Report, ConstantPointsCoverOneBin) {
    const auto dir = scratch_dir("report_const");
    const auto path = (dir / "s.csv").string();
    write_samples_csv(path, Matrix(Vector{{1.0, std::sin(1.0)}}.replicate(1, 50)));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_report(path, {ManifoldId::sin2d}, 8, out, err), kExitOk);
    EXPECT_EQ(json::parse(out.str())["coverage"], 1.0 / 8.0);
}

TEST(Report, MixedPointsAverageByHand) {
    const auto dir = scratch_dir("report_mixed");
    const auto path = (dir / "s.csv").string();
    {
        std::ofstream f(path);
        // Two on-curve points and two off by 0.5 and 2: residuals 0, 0, 0.5, 2.
        f << "x1,x2\n0,0\n" << format_double(std::numbers::pi / 2) << ",1\n"
          << format_double(std::numbers::pi) << ",0.5\n"
          << format_double(3 * std::numbers::pi / 2) << ",1\n";
    }
    std::ostringstream out, err;
    ASSERT_EQ(cmd_report(path, {ManifoldId::sin2d}, 16, out, err), kExitOk);
    const auto r = json::parse(out.str());
    EXPECT_NEAR(r["mean_residual"].get<double>(), (0.0 + 0.0 + 0.5 + 2.0) / 4.0, 1e-15);
    EXPECT_NEAR(r["median_residual"].get<double>(), 0.25, 1e-15);
}

TEST(Report, InputErrors) {
    const auto dir = scratch_dir("report_bad");
    const auto path = (dir / "s.csv").string();
    {
        std::ofstream(path) << "x1,x2\n1,oops\n";
    }
    std::ostringstream out, err;
    EXPECT_EQ(cmd_report(path, {ManifoldId::sin2d}, 16, out, err), kExitInputError);
    {
        std::ofstream(path) << "x1,x2\n1,2\n";
    }
    EXPECT_EQ(cmd_report(path, {ManifoldId::sin3d}, 16, out, err), kExitInputError);
    EXPECT_EQ(cmd_report(path, {ManifoldId::sin2d}, 1, out, err), kExitInputError);
    EXPECT_EQ(cmd_report((dir / "missing.csv").string(), {ManifoldId::sin2d}, 16, out, err), kExitInputError);
}

TEST(Binary, ExitCodes) {
    EXPECT_EQ(run_binary("--help"), 0);
    EXPECT_EQ(run_binary("--version"), 0);
    EXPECT_EQ(run_binary(""), kExitInputError);
    EXPECT_EQ(run_binary("frobnicate"), kExitInputError);
    EXPECT_EQ(run_binary("train"), kExitInputError);
    EXPECT_EQ(run_binary("report --in /nonexistent.csv --manifold sin2d"), kExitInputError);
    EXPECT_EQ(run_binary("report --in /nonexistent.csv --manifold torus"), kExitInputError);
    EXPECT_EQ(run_binary("verify --tol 0"), kExitVerifyFailed);
    EXPECT_EQ(run_binary("verify --seed 3"), kExitOk);
}
