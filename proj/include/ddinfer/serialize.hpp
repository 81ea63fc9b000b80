#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ddinfer/couple.hpp"
#include "ddinfer/diagnostics.hpp"
#include "ddinfer/opinf.hpp"
#include "ddinfer/pod.hpp"
#include "ddinfer/sfom.hpp"
#include "ddinfer/simulate.hpp"

namespace ddinfer {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// Every model directory carries a manifest.json whose "kind" names the model.
inline constexpr int kModelSchemaVersion = 1;

Json read_json(const fs::path& path);
// Pretty-printed with a trailing newline; parent directories are created.
void write_json(const fs::path& path, const Json& j);

// A.fmat, Hc.fmat, B.fmat, c.fmat (+ A_RI, H_RII, H_RRI for the coupled form)
void save_quad_model(const fs::path& dir, const QuadModel& M);
QuadModel load_quad_model(const fs::path& dir);
void save_coupled_reduced_model(const fs::path& dir, const CoupledReducedModel& M);
CoupledReducedModel load_coupled_reduced_model(const fs::path& dir);

void save_basis(const fs::path& dir, const ReducedBasis& B);
ReducedBasis load_basis(const fs::path& dir);

// Manifest with per-row index sets and offsets into one concatenated
// coefficient payload (coefficients.fmat, a single column).
void save_sparse_model(const fs::path& dir, const SparseQuadModel& M, const AdjacencyGraph* graph = nullptr);
SparseQuadModel load_sparse_model(const fs::path& dir);

Json to_json(const DomainDecomposition& dd);
DomainDecomposition decomposition_from_json(const Json& j);

// Subdirectories rom/, basis/, fom/ plus decomposition.json.
void save_coupled_model(const fs::path& dir, const CoupledModel& M, const AdjacencyGraph* fom_graph = nullptr);
CoupledModel load_coupled_model(const fs::path& dir);

// "coupled", "opinf" or "sfom"; throws IoError when no manifest is present.
std::string model_kind(const fs::path& dir);

Json to_json(const LCurvePoint& p);
Json to_json(const RegularizationReport& r);
Json to_json(const RegConfig& reg);
RegConfig reg_config_from_json(const Json& j);

// states.fmat, times.csv (one time per line) and status.csv (diverged,diverged_at)
void save_trajectory(const fs::path& dir, const Trajectory& T);

// center,radius per line / re,im per line, no header
void save_disks_csv(const fs::path& path, const DiskSet& disks);
void save_spectrum_csv(const fs::path& path, const std::vector<std::complex<double>>& eigs);

}  // namespace ddinfer
