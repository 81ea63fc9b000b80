#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ddinfer/error.hpp"
#include "ddinfer/pipeline.hpp"
#include "test_util.hpp"

using namespace ddinfer;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++n;
    return n;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DDINFER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

// Heat-equation snapshots on a 10-node path, stored as a snapshot file config.
PipelineConfig path_config(const fs::path& dir) {
    const std::size_t n = 10;
    Matrix A = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = -2.0;
        if (i > 0) A(i, i - 1) = 1.0;
        if (i + 1 < n) A(i, i + 1) = 1.0;
    }
    Matrix X(n, 60);
    X.col(0) = Vector::LinSpaced(n, 0.0, 1.0).array().sin() + 0.5;
    for (int j = 1; j < 60; ++j) X.col(j) = X.col(j - 1) + 0.01 * (A * X.col(j - 1));
    save_matrix(dir / "x.fmat", X);
    Json j = {{"data", {{"snapshots", (dir / "x.fmat").string()}, {"dt", 0.01}}},
              {"graph", {{"kind", "path"}}},
              {"decomposition", {{"fom_ids", {5, 6, 7, 8, 9}}}},
              {"basis", {{"rank", 3}}},
              {"structure", {"linear"}},
              {"regularization", {{"rom", {{"eta1", 1e-8}}}, {"fom", {{"eta1", 1e-10}}}}}};
    return pipeline_config_from_json(j);
}

}  // namespace

TEST(Generate, DefaultBurgersMatrix) {
    testutil::TempDir dir("pipe");
    cmd_generate(burgers_pipeline_defaults(), dir.path());
    const Matrix X = load_matrix(dir / "snapshots.fmat");
    EXPECT_EQ(X.rows(), 500);
    EXPECT_EQ(X.cols(), 720);
    EXPECT_EQ(line_count(dir / "times.csv"), 720u);
}

TEST(Generate, ShortHorizonStoresOneColumnPerStep) {
    testutil::TempDir dir("pipe");
    PipelineConfig cfg = burgers_pipeline_defaults();
    cfg.burgers->T = 0.05;
    cfg.t_split.reset();
    cmd_generate(cfg, dir.path());
    // columns hold t = dt and t = 2 dt; the initial state is not a snapshot
    EXPECT_EQ(load_matrix(dir / "snapshots.fmat").cols(), 2);
}

TEST(Generate, InvalidSpacingRejected) {
    Json j = to_json(burgers_pipeline_defaults());
    j["data"]["burgers"]["dz"] = 0.03;
    EXPECT_THROW(pipeline_config_from_json(j), InvalidArgument);
}

TEST(Config, JsonRoundTrip) {
    const PipelineConfig cfg = burgers_pipeline_defaults();
    const PipelineConfig back = pipeline_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    Json bad = to_json(cfg);
    bad["schema_version"] = 99;
    EXPECT_THROW(pipeline_config_from_json(bad), InvalidArgument);
    bad = to_json(cfg);
    bad["mode"] = "partial";
    EXPECT_THROW(pipeline_config_from_json(bad), InvalidArgument);
}

TEST(Infer, BurgersReportAndRepeatability) {
    testutil::TempDir a("pipe"), b("pipe");
    const PipelineConfig cfg = burgers_pipeline_defaults();
    const Json report = cmd_infer(cfg, a.path());
    cmd_infer(cfg, b.path());
    EXPECT_EQ(report.at("rom").at("curve").size(), 20u);
    EXPECT_EQ(report.at("fom").at("curve").size(), 20u);
    EXPECT_EQ(model_kind(a / "model"), "coupled");
    EXPECT_TRUE(report.contains("gap"));
    EXPECT_TRUE(report.contains("config"));
    for (const char* f : {"model/fom/coefficients.fmat", "model/rom/A.fmat", "model/basis/V.fmat"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Infer, GlobalOpinfBundle) {
    testutil::TempDir dir("pipe");
    PipelineConfig cfg = path_config(dir.path());
    cfg.mode = InferMode::global_opinf;
    cmd_infer(cfg, dir / "out");
    EXPECT_EQ(model_kind(dir / "out" / "model"), "opinf");
    EXPECT_TRUE(fs::exists(dir / "out" / "model" / "basis" / "V.fmat"));
    EXPECT_FALSE(fs::exists(dir / "out" / "model" / "fom"));
}

TEST(Infer, GlobalSparseOnPathGraph) {
    testutil::TempDir dir("pipe");
    PipelineConfig cfg = path_config(dir.path());
    cfg.mode = InferMode::global_sfom;
    cmd_infer(cfg, dir / "out");
    EXPECT_EQ(model_kind(dir / "out" / "model"), "sfom");
    EXPECT_EQ(load_sparse_model(dir / "out" / "model").rows.size(), 10u);
    EXPECT_FALSE(fs::exists(dir / "out" / "model" / "basis"));
}

TEST(Simulate, CoupledPathModelWithAndWithoutReference) {
    testutil::TempDir dir("pipe");
    PipelineConfig cfg = path_config(dir.path());
    cmd_infer(cfg, dir / "inf");
    cfg.reference = "snapshots";
    const Json with = cmd_simulate(cfg, dir / "inf" / "model", dir / "sim1");
    EXPECT_TRUE(fs::exists(dir / "sim1" / "errors.csv"));
    EXPECT_LT(with.at("relative_error").get<double>(), 1e-2);
    EXPECT_EQ(load_matrix(dir / "sim1" / "trajectory" / "states.fmat").cols(), 60);

    cfg.reference.reset();
    const Json without = cmd_simulate(cfg, dir / "inf" / "model", dir / "sim2");
    EXPECT_FALSE(fs::exists(dir / "sim2" / "errors.csv"));
    EXPECT_FALSE(without.contains("relative_error"));
}

TEST(Simulate, MissingModelDirectory) {
    testutil::TempDir dir("pipe");
    EXPECT_THROW(cmd_simulate(path_config(dir.path()), dir / "absent", dir / "sim"), IoError);
}

TEST(Diagnose, WritesDisksForEachOperator) {
    testutil::TempDir dir("pipe");
    cmd_infer(path_config(dir.path()), dir / "inf");
    const Json d = cmd_diagnose(dir / "inf" / "model", dir / "diag");
    EXPECT_FALSE(d.empty());
    bool any = false;
    for (const auto& e : fs::directory_iterator(dir / "diag"))
        any = any || e.path().filename().string().rfind("disks_", 0) == 0;
    EXPECT_TRUE(any);
}

TEST(Sweep, Positions) {
    EXPECT_EQ(sweep_positions(3.5, 5.5, 0.01).size(), 201u);
    const auto one = sweep_positions(3.5, 3.6, 1.0);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], 3.5);
    EXPECT_THROW(sweep_positions(3.5, 5.5, 0.0), InvalidArgument);
}

TEST(Cost, GridCsvAndBurgersSpeedup) {
    testutil::TempDir dir("pipe");
    CostParams p;
    p.n = 500;
    p.n_F = 250;
    p.n_I = 2;
    p.n_T = 360;
    p.n_t = 720;
    p.r = p.r_g = 10;
    p.s = 3;
    p.k = 2;
    const Json j = cmd_cost(p, CostGridOptions{}, dir.path());
    EXPECT_NEAR(j.at("online_speedup").get<double>(), 1.2195, 1e-4);
    // header plus one row per n_F/n in 0.1 .. 1.0
    EXPECT_EQ(line_count(dir / "online_speedup.csv"), 11u);
}

TEST(Cli, ExitCodes) {
    testutil::TempDir dir("cli");
    EXPECT_EQ(run_cli("cost --out " + (dir / "c").string()), 0);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"schema_version": 1, "mode": "partial"})";
    }
    EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " decompose --out " + (dir / "d").string()), 2);
    EXPECT_EQ(run_cli("simulate --model " + (dir / "absent").string() + " --out " + (dir / "s").string()), 4);
    EXPECT_EQ(run_cli("--config " + (dir / "absent.json").string() + " generate"), 4);
}
