#include "ddinfer/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "ddinfer/diagnostics.hpp"
#include "ddinfer/error.hpp"
#include "ddinfer/simulate.hpp"

namespace ddinfer {

namespace {

template <class T>
T field(const Json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("config field '") + key + "': " + e.what());
    }
}

const Json& section(const Json& j, const char* key) {
    static const Json empty = Json::object();
    if (!j.contains(key)) return empty;
    const auto& s = j.at(key);
    if (!s.is_object()) throw InvalidArgument(std::string("config section '") + key + "' must be an object");
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

std::ofstream open_csv(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void write_lcurve_csv(const fs::path& path, const RegularizationReport& r) {
    auto out = open_csv(path);
    out << "eta1,eta2,fit_error,solution_norm\n";
    for (const auto& p : r.curve)
        out << fmt(p.eta1) << ',' << fmt(p.eta2) << ',' << fmt(p.fit_error) << ',' << fmt(p.solution_norm) << '\n';
}

void write_vector_csv(const fs::path& path, const Vector& v) {
    auto out = open_csv(path);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt(v(i)) << '\n';
}

Json stability_json(const Matrix& A) {
    if (A.rows() == 0) return Json{{"stable", true}, {"max_real_part", nullptr}};
    const auto v = stability_check(A);
    return Json{{"stable", v.stable}, {"max_real_part", v.max_real_part}};
}

Json gap_json(const std::optional<GapIndicator>& gap) {
    if (!gap) return nullptr;
    return Json{{"decay_rom", gap->decay_rom},
                {"decay_fom", gap->decay_fom},
                {"ratio", std::isfinite(gap->ratio) ? Json(gap->ratio) : Json("inf")},
                {"saturated", gap->saturated}};
}

std::pair<SnapshotSet, SnapshotSet> training_split(const PipelineConfig& cfg, const SnapshotSet& S) {
    if (!cfg.t_split) return {S, SnapshotSet()};
    return split_train_test(S, *cfg.t_split);
}

InputFunction input_function(const SnapshotSet& S) {
    if (!S.has_inputs()) return {};
    // piecewise constant in time, taken from the nearest stored column at or before t
    const Matrix U = S.inputs();
    const std::vector<double> times = S.times();
    return [U, times](double t) -> Vector {
        auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
        std::size_t j = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
        return U.col(static_cast<Eigen::Index>(j));
    };
}

TimeGrid simulation_grid(const PipelineConfig& cfg, const SnapshotSet& S) {
    const auto& t = S.times();
    const double dt = t.size() > 1 ? (t.back() - t.front()) / static_cast<double>(t.size() - 1) : cfg.dt;
    return TimeGrid::make(t.front(), dt, cfg.steps.value_or(S.count()));
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::pair<double, double> mean_and_spread(const std::vector<double>& v) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (v.empty()) return {nan, nan};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::string to_string(InferMode m) {
    switch (m) {
        case InferMode::coupled: return "coupled";
        case InferMode::global_opinf: return "global-opinf";
        case InferMode::global_sfom: return "global-sfom";
    }
    return "coupled";
}

InferMode infer_mode_from_string(const std::string& s) {
    if (s == "coupled") return InferMode::coupled;
    if (s == "global-opinf") return InferMode::global_opinf;
    if (s == "global-sfom") return InferMode::global_sfom;
    throw InvalidArgument("unknown inference mode '" + s + "'");
}

Json to_json(const BurgersConfig& cfg) {
    Json ic{{"width", cfg.ic.width}, {"cos_amp1", cfg.ic.cos_amp1}, {"cos_amp2", cfg.ic.cos_amp2}};
    if (cfg.ic.center) ic["center"] = *cfg.ic.center;
    return Json{{"c", cfg.c}, {"nu", cfg.nu}, {"L", cfg.L}, {"dz", cfg.dz}, {"dt", cfg.dt}, {"T", cfg.T}, {"ic", ic}};
}

BurgersConfig burgers_config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("burgers: expected an object");
    BurgersConfig cfg;
    cfg.c = field(j, "c", cfg.c);
    cfg.nu = field(j, "nu", cfg.nu);
    cfg.L = field(j, "L", cfg.L);
    cfg.dz = field(j, "dz", cfg.dz);
    cfg.dt = field(j, "dt", cfg.dt);
    cfg.T = field(j, "T", cfg.T);
    const auto& ic = section(j, "ic");
    if (ic.contains("center")) cfg.ic.center = field(ic, "center", 0.0);
    cfg.ic.width = field(ic, "width", cfg.ic.width);
    cfg.ic.cos_amp1 = field(ic, "cos_amp1", cfg.ic.cos_amp1);
    cfg.ic.cos_amp2 = field(ic, "cos_amp2", cfg.ic.cos_amp2);
    cfg.validate();
    return cfg;
}

void PipelineConfig::validate() const {
    if (schema_version != kConfigSchemaVersion)
        throw InvalidArgument("unsupported config schema version " + std::to_string(schema_version));
    if (burgers && snapshots) throw InvalidArgument("config: give either data.burgers or data.snapshots");
    if (burgers) burgers->validate();
    if (!burgers && !snapshots) throw InvalidArgument("config: no data source (data.burgers or data.snapshots)");
    if (!(dt > 0.0)) throw InvalidArgument("config: data.dt must be positive");
    if (graph.kind == "grid2d" && (graph.nx == 0 || graph.ny == 0))
        throw InvalidArgument("config: grid2d graph needs nx and ny");
    if (graph.kind == "file" && !graph.file) throw InvalidArgument("config: file graph needs a path");
    if (graph.kind != "periodic_chain" && graph.kind != "path" && graph.kind != "grid2d" && graph.kind != "file")
        throw InvalidArgument("config: unknown graph kind '" + graph.kind + "'");
    if (decomposition.a && !decomposition.fom_ids.empty())
        throw InvalidArgument("config: decomposition takes either a or fom_ids");
    if (pool_size == 0) throw InvalidArgument("config: pool_size must be positive");
    if (steps && *steps < 2) throw InvalidArgument("config: simulation.steps must be at least 2");
    reg_rom.validate();
    reg_fom.validate();
}

PipelineConfig pipeline_config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
    PipelineConfig cfg;
    cfg.schema_version = field(j, "schema_version", kConfigSchemaVersion);

    const auto& data = section(j, "data");
    if (data.contains("burgers")) cfg.burgers = burgers_config_from_json(data.at("burgers"));
    if (data.contains("snapshots")) cfg.snapshots = field<std::string>(data, "snapshots", "");
    if (data.contains("inputs")) cfg.inputs = field<std::string>(data, "inputs", "");
    cfg.t0 = field(data, "t0", cfg.t0);
    cfg.dt = field(data, "dt", cfg.dt);
    if (data.contains("t_split")) cfg.t_split = field(data, "t_split", 0.0);

    const auto& graph = section(j, "graph");
    cfg.graph.kind = field<std::string>(graph, "kind", cfg.graph.kind);
    cfg.graph.nx = field<std::size_t>(graph, "nx", 0);
    cfg.graph.ny = field<std::size_t>(graph, "ny", 0);
    if (graph.contains("file")) cfg.graph.file = field<std::string>(graph, "file", "");

    const auto& dec = section(j, "decomposition");
    if (dec.contains("a")) cfg.decomposition.a = field(dec, "a", 0.0);
    cfg.decomposition.dz = field(dec, "dz", cfg.burgers ? cfg.burgers->dz : 0.0);
    cfg.decomposition.overlap_width = field<std::size_t>(dec, "overlap_width", 0);
    cfg.decomposition.fom_ids = field<std::vector<std::size_t>>(dec, "fom_ids", {});
    cfg.decomposition.overlap_ids = field<std::vector<std::size_t>>(dec, "overlap_ids", {});

    const auto& basis = section(j, "basis");
    if (basis.contains("rank") && basis.contains("energy"))
        throw InvalidArgument("config: basis takes either rank or energy");
    if (basis.contains("rank")) cfg.basis_rule = FixedRank{field<std::size_t>(basis, "rank", 10)};
    if (basis.contains("energy")) cfg.basis_rule = EnergyFraction{field(basis, "energy", 0.999)};

    if (j.contains("structure"))
        cfg.structure = ModelStructure::from_terms(field<std::vector<std::string>>(j, "structure", {}));

    const auto& reg = section(j, "regularization");
    if (reg.contains("rom")) cfg.reg_rom = reg_config_from_json(reg.at("rom"));
    if (reg.contains("fom")) cfg.reg_fom = reg_config_from_json(reg.at("fom"));

    const auto& sfom = section(j, "sfom");
    cfg.pool_size = field<std::size_t>(sfom, "pool_size", cfg.pool_size);
    cfg.subsample_rows = field<std::size_t>(sfom, "subsample_rows", cfg.subsample_rows);
    const auto sel = field<std::string>(sfom, "selection", "global");
    if (sel == "global")
        cfg.selection = SelectionMode::global;
    else if (sel == "per_row")
        cfg.selection = SelectionMode::per_row;
    else
        throw InvalidArgument("config: unknown sfom.selection '" + sel + "'");

    cfg.mode = infer_mode_from_string(field<std::string>(j, "mode", "coupled"));
    cfg.seed = field<std::uint64_t>(j, "seed", 0);

    const auto& sim = section(j, "simulation");
    if (sim.contains("steps")) cfg.steps = field<std::size_t>(sim, "steps", 0);
    if (sim.contains("reference")) cfg.reference = field<std::string>(sim, "reference", "");

    cfg.validate();
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
    Json j;
    try {
        j = read_json(path);
    } catch (const ParseError& e) {
        throw InvalidArgument(e.what());
    }
    return pipeline_config_from_json(j);
}

Json to_json(const PipelineConfig& cfg) {
    Json data = Json::object();
    if (cfg.burgers) data["burgers"] = to_json(*cfg.burgers);
    if (cfg.snapshots) data["snapshots"] = cfg.snapshots->string();
    if (cfg.inputs) data["inputs"] = cfg.inputs->string();
    data["t0"] = cfg.t0;
    data["dt"] = cfg.dt;
    if (cfg.t_split) data["t_split"] = *cfg.t_split;

    Json graph{{"kind", cfg.graph.kind}};
    if (cfg.graph.kind == "grid2d") {
        graph["nx"] = cfg.graph.nx;
        graph["ny"] = cfg.graph.ny;
    }
    if (cfg.graph.file) graph["file"] = cfg.graph.file->string();

    Json dec{{"overlap_width", cfg.decomposition.overlap_width}, {"dz", cfg.decomposition.dz}};
    if (cfg.decomposition.a) dec["a"] = *cfg.decomposition.a;
    if (!cfg.decomposition.fom_ids.empty()) dec["fom_ids"] = cfg.decomposition.fom_ids;
    if (!cfg.decomposition.overlap_ids.empty()) dec["overlap_ids"] = cfg.decomposition.overlap_ids;

    Json basis;
    if (const auto* f = std::get_if<FixedRank>(&cfg.basis_rule))
        basis["rank"] = f->r;
    else
        basis["energy"] = std::get<EnergyFraction>(cfg.basis_rule).fraction;

    Json sim = Json::object();
    if (cfg.steps) sim["steps"] = *cfg.steps;
    if (cfg.reference) sim["reference"] = *cfg.reference;

    return Json{{"schema_version", cfg.schema_version},
                {"data", data},
                {"graph", graph},
                {"decomposition", dec},
                {"basis", basis},
                {"structure", cfg.structure.terms()},
                {"regularization", {{"rom", to_json(cfg.reg_rom)}, {"fom", to_json(cfg.reg_fom)}}},
                {"sfom",
                 {{"pool_size", cfg.pool_size},
                  {"subsample_rows", cfg.subsample_rows},
                  {"selection", cfg.selection == SelectionMode::global ? "global" : "per_row"}}},
                {"mode", to_string(cfg.mode)},
                {"seed", cfg.seed},
                {"simulation", sim}};
}

PipelineConfig burgers_pipeline_defaults() {
    PipelineConfig cfg;
    cfg.burgers = BurgersConfig{};
    cfg.t_split = 9.0;
    cfg.graph.kind = "periodic_chain";
    cfg.decomposition.a = 5.0;
    cfg.decomposition.dz = cfg.burgers->dz;
    cfg.basis_rule = FixedRank{10};
    cfg.structure = ModelStructure{true, true, false, false};

    cfg.reg_rom.eta1_grid = RegConfig::log_grid(1e-3, 1.0, 20);
    cfg.reg_rom.eta2_rule = Eta2Multiple{0.05};
    cfg.reg_rom.scales.quadratic = 200.0;
    cfg.reg_rom.scales.coupling_quadratic = 200.0;
    cfg.reg_rom.scales.coupling_bilinear = 200.0;

    cfg.reg_fom.eta1_grid = RegConfig::log_grid(1e-8, 1e-3, 20);
    cfg.reg_fom.eta2_rule = Eta2Multiple{50.0};
    cfg.reg_fom.scales.quadratic = 10.0;
    cfg.reg_fom.scales.coupling_quadratic = 10.0;
    cfg.reg_fom.scales.coupling_bilinear = 10.0;

    cfg.pool_size = 5;
    cfg.seed = 1;
    cfg.reference = "snapshots";
    return cfg;
}

SnapshotSet load_snapshots(const PipelineConfig& cfg) {
    if (cfg.burgers) return simulate_burgers_reference(*cfg.burgers);
    Matrix X = load_matrix(*cfg.snapshots);
    Matrix U;
    if (cfg.inputs) U = load_matrix(*cfg.inputs);
    std::vector<double> times(static_cast<std::size_t>(X.cols()));
    for (std::size_t j = 0; j < times.size(); ++j) times[j] = cfg.t0 + static_cast<double>(j) * cfg.dt;
    return SnapshotSet(std::move(X), std::move(times), std::move(U));
}

AdjacencyGraph build_graph(const PipelineConfig& cfg, std::size_t n) {
    const auto& k = cfg.graph.kind;
    if (k == "periodic_chain") return AdjacencyGraph::periodic_chain(n);
    if (k == "path") return AdjacencyGraph::path(n);
    if (k == "grid2d") {
        if (cfg.graph.nx * cfg.graph.ny != n) throw InvalidArgument("grid2d graph size does not match the data");
        return AdjacencyGraph::grid2d(cfg.graph.nx, cfg.graph.ny);
    }
    const Json j = read_json(*cfg.graph.file);
    AdjacencyGraph g;
    try {
        g = AdjacencyGraph(j.get<std::vector<std::vector<std::size_t>>>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("graph file: ") + e.what());
    }
    if (g.size() != n) throw InvalidArgument("graph file size does not match the data");
    return g;
}

DomainDecomposition build_decomposition(const PipelineConfig& cfg, const AdjacencyGraph& g) {
    const auto& d = cfg.decomposition;
    if (d.a) {
        if (!(d.dz > 0.0)) throw InvalidArgument("decomposition: dz must be positive for a 1D split");
        return decompose_1d(g, d.dz, *d.a, d.overlap_width);
    }
    if (d.fom_ids.empty()) throw InvalidArgument("decomposition: give a split coordinate a or fom_ids");
    return decompose(g, d.fom_ids, d.overlap_ids);
}

CoupledOptions coupled_options(const PipelineConfig& cfg) {
    CoupledOptions opt;
    opt.basis_rule = cfg.basis_rule;
    opt.structure = cfg.structure;
    opt.reg_rom = cfg.reg_rom;
    opt.reg_fom = cfg.reg_fom;
    opt.sfom.pool_size = cfg.pool_size;
    opt.sfom.seed = cfg.seed;
    opt.sfom.selection = cfg.selection;
    opt.sfom.subsample_rows = cfg.subsample_rows;
    return opt;
}

InferResult train_coupled(const PipelineConfig& cfg, const SnapshotSet& train, const AdjacencyGraph& g,
                          const DomainDecomposition& dd) {
    InferResult res;
    res.model = infer_coupled(train, g, dd, coupled_options(cfg), &res.report);
    return res;
}

Json cmd_generate(const PipelineConfig& cfg, const fs::path& out) {
    if (!cfg.burgers) throw InvalidArgument("generate: config has no data.burgers section");
    ReferenceDiagnostics diag;
    const SnapshotSet S = simulate_burgers_reference(*cfg.burgers, &diag);
    fs::create_directories(out);
    save_matrix(out / "snapshots.fmat", S.states());
    {
        auto csv = open_csv(out / "times.csv");
        for (double t : S.times()) csv << fmt(t) << '\n';
    }
    write_json(out / "config.json", to_json(cfg));
    Json summary{{"rows", S.state_dim()},
                 {"cols", S.count()},
                 {"max_cfl", diag.max_cfl},
                 {"max_mass_drift", diag.max_mass_drift},
                 {"diverged_at", diag.diverged_at ? Json(*diag.diverged_at) : Json(nullptr)}};
    write_json(out / "generate.json", summary);
    return summary;
}

Json cmd_decompose(const PipelineConfig& cfg, const fs::path& out) {
    const SnapshotSet S = load_snapshots(cfg);
    const AdjacencyGraph g = build_graph(cfg, S.state_dim());
    const DomainDecomposition dd = build_decomposition(cfg, g);
    const auto [train, test] = training_split(cfg, S);
    fs::create_directories(out);
    write_json(out / "decomposition.json", to_json(dd));

    const Matrix X_R = select_rows(train.states(), dd.rom_ids);
    const Matrix X_F = select_rows(train.states(), dd.fom_ids);
    write_vector_csv(out / "singular_values_rom.csv", singular_values(X_R));
    write_vector_csv(out / "singular_values_fom.csv", singular_values(X_F));

    Json summary{{"n", dd.n}, {"n_rom", dd.n_rom()}, {"n_fom", dd.n_fom()}, {"n_interface", dd.n_interface()},
                 {"interface_ids", dd.interface_ids}};
    const std::size_t r = std::holds_alternative<FixedRank>(cfg.basis_rule)
                              ? std::get<FixedRank>(cfg.basis_rule).r
                              : compute_basis(X_R, cfg.basis_rule).r;
    try {
        summary["gap"] = gap_json(gap_indicator(X_R, X_F, r));
    } catch (const NumericalError&) {
        summary["gap"] = nullptr;
    }
    write_json(out / "decompose.json", summary);
    return summary;
}

Json cmd_infer(const PipelineConfig& cfg, const fs::path& out) {
    const SnapshotSet S = load_snapshots(cfg);
    const auto [train, test] = training_split(cfg, S);
    const AdjacencyGraph g = build_graph(cfg, S.state_dim());
    fs::create_directories(out);
    write_json(out / "config.json", to_json(cfg));

    Json report{{"mode", to_string(cfg.mode)},
                {"config", to_json(cfg)},
                {"training_snapshots", train.count()}};

    if (cfg.mode == InferMode::coupled) {
        const DomainDecomposition dd = build_decomposition(cfg, g);
        auto res = train_coupled(cfg, train, g, dd);
        const AdjacencyGraph g_F = g.restrict_to(dd.fom_ids);
        save_coupled_model(out / "model", res.model, &g_F);
        write_lcurve_csv(out / "lcurve_rom.csv", res.report.rom);
        write_lcurve_csv(out / "lcurve_fom.csv", res.report.fom);
        report["rom"] = to_json(res.report.rom);
        report["fom"] = to_json(res.report.fom);
        report["r"] = res.report.r;
        report["retained_energy"] = res.report.retained_energy;
        report["gap"] = gap_json(res.report.gap);
        report["stability"] = {{"A_RR", stability_json(res.model.rom.core.A)},
                               {"A_FF", stability_json(res.model.fom.linear_operator())}};
        report["decomposition"] = to_json(dd);
    } else if (cfg.mode == InferMode::global_opinf) {
        const ReducedBasis basis = compute_basis(train.states(), cfg.basis_rule);
        const Matrix Xhat = project(train.states(), basis);
        const Matrix dXhat = project(train.derivatives_or_estimate(), basis);
        RegularizationReport rr;
        const QuadModel M = infer_opinf(Xhat, train.inputs(), dXhat, cfg.structure, cfg.reg_rom, &rr);
        save_quad_model(out / "model", M);
        save_basis(out / "model" / "basis", basis);
        write_lcurve_csv(out / "lcurve_rom.csv", rr);
        report["rom"] = to_json(rr);
        report["r"] = basis.r;
        report["retained_energy"] = basis.retained_energy();
        report["stability"] = {{"A", stability_json(M.A)}};
    } else {
        const Matrix dX = train.derivatives_or_estimate();
        const Matrix empty;
        const SfomData data{train.states(), dX, empty, train.inputs()};
        SfomOptions opt;
        opt.pool_size = cfg.pool_size;
        opt.seed = cfg.seed;
        opt.selection = cfg.selection;
        opt.subsample_rows = cfg.subsample_rows;
        RegularizationReport rr;
        const SparseQuadModel M = infer_sfom(g, data, {}, cfg.structure, cfg.reg_fom, opt, &rr);
        save_sparse_model(out / "model", M, &g);
        write_lcurve_csv(out / "lcurve_fom.csv", rr);
        report["fom"] = to_json(rr);
        report["stability"] = {{"A", stability_json(M.linear_operator())}};
    }
    write_json(out / "report.json", report);
    return report;
}

Json cmd_simulate(const PipelineConfig& cfg, const fs::path& model_dir, const fs::path& out) {
    const std::string kind = model_kind(model_dir);
    const SnapshotSet S = load_snapshots(cfg);
    const TimeGrid grid = simulation_grid(cfg, S);
    const Vector x0 = S.states().col(0);
    const InputFunction u = input_function(S);

    Trajectory T;
    const auto start = std::chrono::steady_clock::now();
    if (kind == "coupled") {
        T = simulate_coupled(load_coupled_model(model_dir), x0, grid, u);
    } else if (kind == "opinf") {
        const QuadModel M = load_quad_model(model_dir);
        const ReducedBasis B = load_basis(model_dir / "basis");
        T = simulate_reduced(M, &B, x0, grid, u);
    } else if (kind == "sfom") {
        T = simulate_sparse(load_sparse_model(model_dir), x0, grid, u);
    } else {
        throw IoError("unsupported model kind '" + kind + "' in " + model_dir.string());
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_trajectory(out / "trajectory", T);

    Json summary{{"model_kind", kind},
                 {"steps", T.steps()},
                 {"diverged_at", T.diverged_at ? Json(*T.diverged_at) : Json(nullptr)},
                 {"wall_time", wall}};

    if (cfg.reference) {
        Matrix R = *cfg.reference == "snapshots" ? S.states() : load_matrix(*cfg.reference);
        if (R.rows() != T.states.rows()) throw InvalidArgument("reference row count does not match the model");
        const auto cols = std::min<Eigen::Index>(R.cols(), T.states.cols());
        const Matrix P = T.states.leftCols(cols);
        R = R.leftCols(cols).eval();
        const auto per_step = relative_error_per_step(P, R);
        {
            auto csv = open_csv(out / "errors.csv");
            csv << "time,relative_error\n";
            for (Eigen::Index j = 0; j < cols; ++j)
                csv << fmt(T.times[static_cast<std::size_t>(j)]) << ',' << fmt(per_step[static_cast<std::size_t>(j)])
                    << '\n';
        }
        summary["relative_error"] = relative_error(P, R);
        if (cfg.t_split) {
            Eigen::Index first = 0;
            while (first < cols && T.times[static_cast<std::size_t>(first)] <= *cfg.t_split + 1e-9 * grid.dt) ++first;
            if (first < cols)
                summary["test_relative_error"] = relative_error(P.rightCols(cols - first), R.rightCols(cols - first));
        }
    }
    write_json(out / "simulate.json", summary);
    return summary;
}

Json cmd_diagnose(const fs::path& model_dir, const fs::path& out, std::uint64_t seed) {
    const std::string kind = model_kind(model_dir);
    SpectrumOptions opt;
    opt.seed = seed;
    std::vector<std::pair<std::string, Matrix>> ops;
    if (kind == "coupled") {
        const CoupledModel M = load_coupled_model(model_dir);
        ops.emplace_back("A_RR", M.rom.core.A);
        ops.emplace_back("A_FF", M.fom.linear_operator());
    } else if (kind == "opinf") {
        ops.emplace_back("A", load_quad_model(model_dir).A);
    } else if (kind == "sfom") {
        ops.emplace_back("A", load_sparse_model(model_dir).linear_operator());
    } else {
        throw IoError("unsupported model kind '" + kind + "' in " + model_dir.string());
    }
    Json summary = Json::object();
    for (const auto& [name, A] : ops) {
        const DiskSet disks = gershgorin_disks(A, opt);
        save_disks_csv(out / ("disks_" + name + ".csv"), disks);
        save_spectrum_csv(out / ("spectrum_" + name + ".csv"), disks.eigenvalues);
        Json entry = stability_json(A);
        entry["eigenvalues_sampled"] = disks.eigenvalues_sampled;
        if (disks.eigensolver_error) entry["eigensolver_error"] = *disks.eigensolver_error;
        summary[name] = entry;
    }
    write_json(out / "diagnose.json", summary);
    return summary;
}

std::vector<double> sweep_positions(double lo, double hi, double step) {
    if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        throw InvalidArgument("sweep: need lo <= hi and a positive step");
    // integer stepping avoids accumulated drift; the tolerance keeps hi itself
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> a(count);
    for (std::size_t i = 0; i < count; ++i) a[i] = lo + static_cast<double>(i) * step;
    return a;
}

std::vector<SweepRow> sweep_interface(const PipelineConfig& cfg, const SweepOptions& options) {
    if (options.repeats == 0) throw InvalidArgument("sweep: repeats must be positive");
    if (!cfg.t_split) throw InvalidArgument("sweep: the config needs data.t_split");
    if (!(cfg.decomposition.dz > 0.0)) throw InvalidArgument("sweep: needs a 1D grid spacing (decomposition.dz)");
    const auto positions = sweep_positions(options.a_lo, options.a_hi, options.step);

    const SnapshotSet S = load_snapshots(cfg);
    const auto [train, test] = split_train_test(S, *cfg.t_split);
    const AdjacencyGraph g = build_graph(cfg, S.state_dim());
    PipelineConfig full = cfg;
    full.steps.reset();
    const TimeGrid grid = simulation_grid(full, S);
    const Vector x0 = S.states().col(0);
    const Matrix& R = test.states();

    struct Run {
        double error = std::numeric_limits<double>::quiet_NaN();
        double wall = std::numeric_limits<double>::quiet_NaN();
        bool stable = false;
    };
    std::vector<Run> runs(positions.size() * options.repeats);

    const auto run_one = [&](std::size_t task) {
        const double a = positions[task / options.repeats];
        PipelineConfig c = cfg;
        c.decomposition.a = a;
        c.decomposition.fom_ids.clear();
        c.seed = cfg.seed + task % options.repeats;
        Run& out = runs[task];
        try {
            const DomainDecomposition dd = build_decomposition(c, g);
            const auto res = train_coupled(c, train, g, dd);
            std::vector<double> walls;
            Trajectory T;
            for (std::size_t k = 0; k < std::max<std::size_t>(1, options.timing_repeats); ++k) {
                const auto start = std::chrono::steady_clock::now();
                T = simulate_coupled(res.model, x0, grid);
                walls.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            }
            out.wall = median(walls);
            if (T.diverged_at || T.states.cols() < static_cast<Eigen::Index>(S.count())) return;
            out.error = relative_error(T.states.rightCols(R.cols()), R);
            out.stable = std::isfinite(out.error);
        } catch (const Error&) {
            // a failed fit counts as an unstable run
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, runs.size()));
    if (workers == 1) {
        for (std::size_t t = 0; t < runs.size(); ++t) run_one(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < runs.size(); t = next++) run_one(t);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        SweepRow row;
        row.a = positions[i];
        row.runs = options.repeats;
        std::vector<double> errors, walls;
        for (std::size_t k = 0; k < options.repeats; ++k) {
            const Run& r = runs[i * options.repeats + k];
            if (r.stable) {
                ++row.stable_runs;
                errors.push_back(r.error);
            }
            if (std::isfinite(r.wall)) walls.push_back(r.wall);
        }
        std::tie(row.mean_error, row.error_spread) = mean_and_spread(errors);
        std::tie(row.mean_wall_time, row.wall_time_spread) = mean_and_spread(walls);
        row.stable = row.stable_runs == row.runs;
        rows.push_back(row);
    }
    return rows;
}

Json cmd_sweep_interface(const PipelineConfig& cfg, const SweepOptions& options, const fs::path& out) {
    const auto rows = sweep_interface(cfg, options);
    auto csv = open_csv(out / "sweep.csv");
    csv << "a,mean_error,error_spread,wall_time,wall_time_spread,stable_runs,runs,stable_flag\n";
    Json j = Json::array();
    for (const auto& r : rows) {
        csv << fmt(r.a) << ',' << fmt(r.mean_error) << ',' << fmt(r.error_spread) << ',' << fmt(r.mean_wall_time)
            << ',' << fmt(r.wall_time_spread) << ',' << r.stable_runs << ',' << r.runs << ',' << (r.stable ? 1 : 0)
            << '\n';
        j.push_back(Json{{"a", r.a},
                         {"mean_error", std::isfinite(r.mean_error) ? Json(r.mean_error) : Json(nullptr)},
                         {"stable_runs", r.stable_runs},
                         {"runs", r.runs},
                         {"stable", r.stable}});
    }
    if (!csv) throw IoError("failed writing sweep.csv");
    return j;
}

Json cmd_cost(const CostParams& p, const CostGridOptions& options, const fs::path& out) {
    p.validate();
    if (options.points == 0) throw InvalidArgument("cost: need at least one grid point");
    const auto fractions = [&] {
        std::vector<double> f(options.points);
        for (std::size_t i = 0; i < options.points; ++i)
            f[i] = static_cast<double>(i + 1) / static_cast<double>(options.points);
        return f;
    }();

    {
        auto csv = open_csv(out / "online_speedup.csv");
        csv << "nf_over_n,speedup\n";
        for (double f : fractions) {
            CostParams q = p;
            q.n_F = f * p.n;
            csv << fmt(f) << ',' << fmt(online_speedup(q)) << '\n';
        }
    }
    // offline grids: n_F/n against r_g/r (global OpInf) and r/n (global sFOM); values are speedups
    {
        auto csv = open_csv(out / "offline_vs_global_opinf.csv");
        csv << "nf_over_n,rg_over_r,speedup\n";
        for (double f : fractions)
            for (double m : {1.0, 1.5, 2.0, 3.0, 4.0, 5.0}) {
                CostParams q = p;
                q.n_F = f * p.n;
                q.r_g = m * p.r;
                csv << fmt(f) << ',' << fmt(m) << ',' << fmt(1.0 / offline_ratios(q).vs_global_opinf) << '\n';
            }
    }
    {
        auto csv = open_csv(out / "offline_vs_global_sfom.csv");
        csv << "nf_over_n,r_over_n,speedup\n";
        for (double f : fractions)
            for (double rf : {0.001, 0.002, 0.005, 0.01, 0.02, 0.05}) {
                CostParams q = p;
                q.n_F = f * p.n;
                q.r = std::max(1.0, std::round(rf * p.n));
                csv << fmt(f) << ',' << fmt(rf) << ',' << fmt(1.0 / offline_ratios(q).vs_global_sfom) << '\n';
            }
    }
    const auto costs = offline_costs(p);
    const auto ratios = offline_ratios(p);
    Json summary{{"online_speedup", online_speedup(p)},
                 {"online_cost_ratio", online_cost_ratio(p)},
                 {"interface_count", p.interface_count()},
                 {"offline_costs",
                  {{"sfom", costs.sfom},
                   {"opinf", costs.opinf},
                   {"global_opinf", costs.global_opinf},
                   {"global_sfom", costs.global_sfom}}},
                 {"offline_ratios",
                  {{"vs_global_opinf", ratios.vs_global_opinf}, {"vs_global_sfom", ratios.vs_global_sfom}}}};
    write_json(out / "cost.json", summary);
    return summary;
}

}  // namespace ddinfer
