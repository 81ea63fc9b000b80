#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddinfer/burgers.hpp"
#include "ddinfer/costmodel.hpp"
#include "ddinfer/couple.hpp"
#include "ddinfer/serialize.hpp"

namespace ddinfer {

inline constexpr int kConfigSchemaVersion = 1;

enum class InferMode { coupled, global_opinf, global_sfom };

std::string to_string(InferMode m);
InferMode infer_mode_from_string(const std::string& s);

struct GraphSpec {
    std::string kind = "periodic_chain";  // periodic_chain | path | grid2d | file
    std::size_t nx = 0;                   // grid2d only
    std::size_t ny = 0;
    std::optional<fs::path> file;         // JSON array of neighbor lists
};

struct DecompositionSpec {
    // 1D split at coordinate a on a uniform grid of spacing dz ...
    std::optional<double> a;
    double dz = 0.0;
    std::size_t overlap_width = 0;
    // ... or explicit id sets
    std::vector<std::size_t> fom_ids;
    std::vector<std::size_t> overlap_ids;
};

struct PipelineConfig {
    int schema_version = kConfigSchemaVersion;

    // data: either a Burgers problem or a snapshot file with a time grid
    std::optional<BurgersConfig> burgers;
    std::optional<fs::path> snapshots;
    std::optional<fs::path> inputs;
    double t0 = 0.0;
    double dt = 1.0;
    std::optional<double> t_split;  // train on t <= t_split; everything when absent

    GraphSpec graph;
    DecompositionSpec decomposition;
    TruncationRule basis_rule = FixedRank{10};
    ModelStructure structure;
    RegConfig reg_rom;
    RegConfig reg_fom;
    std::size_t pool_size = 1;
    SelectionMode selection = SelectionMode::global;
    std::size_t subsample_rows = 20;
    InferMode mode = InferMode::coupled;
    std::uint64_t seed = 0;

    // simulation horizon; defaults to the full snapshot window
    std::optional<std::size_t> steps;
    // reference states for the error report: a matrix path, or "snapshots" for the
    // configured data itself
    std::optional<std::string> reference;

    void validate() const;
};

PipelineConfig pipeline_config_from_json(const Json& j);
PipelineConfig load_pipeline_config(const fs::path& path);
Json to_json(const PipelineConfig& cfg);
Json to_json(const BurgersConfig& cfg);
BurgersConfig burgers_config_from_json(const Json& j);

// The viscous Burgers setup with its published hyperparameters: split at
// z = 5, r = 10, quadratic structure, pooled 3-point sFOM stencils.
PipelineConfig burgers_pipeline_defaults();

// Snapshots named by the config (generated or loaded), with estimated derivatives.
SnapshotSet load_snapshots(const PipelineConfig& cfg);
AdjacencyGraph build_graph(const PipelineConfig& cfg, std::size_t n);
DomainDecomposition build_decomposition(const PipelineConfig& cfg, const AdjacencyGraph& g);
CoupledOptions coupled_options(const PipelineConfig& cfg);

struct InferResult {
    CoupledModel model;
    CoupledReport report;
};
// One coupled training run on the training window of S.
InferResult train_coupled(const PipelineConfig& cfg, const SnapshotSet& train, const AdjacencyGraph& g,
                          const DomainDecomposition& dd);

// Subcommands. Each writes into `out` and returns the JSON it also stores there.
Json cmd_generate(const PipelineConfig& cfg, const fs::path& out);
Json cmd_decompose(const PipelineConfig& cfg, const fs::path& out);
Json cmd_infer(const PipelineConfig& cfg, const fs::path& out);
Json cmd_simulate(const PipelineConfig& cfg, const fs::path& model_dir, const fs::path& out);
Json cmd_diagnose(const fs::path& model_dir, const fs::path& out, std::uint64_t seed = 0);

struct SweepOptions {
    double a_lo = 3.5;
    double a_hi = 5.5;
    double step = 0.01;
    std::size_t repeats = 10;
    std::size_t workers = 1;
    std::size_t timing_repeats = 3;  // simulation re-runs per model; the median is recorded
};

struct SweepRow {
    double a = 0.0;
    double mean_error = 0.0;
    double error_spread = 0.0;  // sample standard deviation over repeats
    double mean_wall_time = 0.0;
    double wall_time_spread = 0.0;
    std::size_t stable_runs = 0;
    std::size_t runs = 0;
    bool stable = false;  // every repeat finished without divergence
};

std::vector<double> sweep_positions(double lo, double hi, double step);
std::vector<SweepRow> sweep_interface(const PipelineConfig& cfg, const SweepOptions& options);
Json cmd_sweep_interface(const PipelineConfig& cfg, const SweepOptions& options, const fs::path& out);

struct CostGridOptions {
    std::size_t points = 10;  // n_F/n in {1/points, ..., 1}
};
Json cmd_cost(const CostParams& p, const CostGridOptions& options, const fs::path& out);

}  // namespace ddinfer
