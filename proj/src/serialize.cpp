#include "ddinfer/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

void require_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("model directory not found: " + dir.string());
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

Matrix column_matrix(const Vector& v) { return Matrix(v); }

Vector as_vector(const Matrix& M, const std::string& what) {
    if (M.cols() != 1 && M.rows() > 0) throw ParseError(what + ": expected a single column");
    return M.rows() == 0 ? Vector() : Vector(M.col(0));
}

template <class T>
T get(const Json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("manifest is missing '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest field '") + key + "': " + e.what());
    }
}

void check_kind(const Json& manifest, const std::string& kind) {
    const auto got = get<std::string>(manifest, "kind");
    if (got != kind) throw ParseError("expected a '" + kind + "' model, found '" + got + "'");
    const int version = get<int>(manifest, "schema_version");
    if (version != kModelSchemaVersion)
        throw ParseError("unsupported model schema version " + std::to_string(version));
}

Json blocks_json(const QuadModel& M) {
    return Json{{"A", {M.A.rows(), M.A.cols()}},
                {"Hc", {M.Hc.rows(), M.Hc.cols()}},
                {"B", {M.B.rows(), M.B.cols()}},
                {"c", M.c.size()}};
}

void write_quad_files(const fs::path& dir, const QuadModel& M) {
    save_matrix(dir / "A.fmat", M.A);
    save_matrix(dir / "Hc.fmat", M.Hc);
    save_matrix(dir / "B.fmat", M.B);
    save_matrix(dir / "c.fmat", column_matrix(M.c));
}

QuadModel read_quad_files(const fs::path& dir) {
    QuadModel M;
    M.A = load_matrix(dir / "A.fmat");
    M.Hc = load_matrix(dir / "Hc.fmat");
    M.B = load_matrix(dir / "B.fmat");
    M.c = as_vector(load_matrix(dir / "c.fmat"), "c.fmat");
    const auto p = M.A.rows();
    if (M.Hc.size() == 0) M.Hc.resize(p, 0);
    if (M.B.size() == 0) M.B.resize(p, 0);
    if (M.c.size() == 0) M.c = Vector::Zero(p);
    M.validate();
    return M;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) make_dir(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void save_quad_model(const fs::path& dir, const QuadModel& M) {
    M.validate();
    make_dir(dir);
    write_quad_files(dir, M);
    write_json(dir / "manifest.json", Json{{"kind", "opinf"},
                                           {"schema_version", kModelSchemaVersion},
                                           {"order", M.order()},
                                           {"input_dim", M.input_dim()},
                                           {"blocks", blocks_json(M)},
                                           {"interface_ids", Json::array()}});
}

QuadModel load_quad_model(const fs::path& dir) {
    require_dir(dir);
    check_kind(read_json(dir / "manifest.json"), "opinf");
    return read_quad_files(dir);
}

void save_coupled_reduced_model(const fs::path& dir, const CoupledReducedModel& M) {
    M.validate();
    make_dir(dir);
    write_quad_files(dir, M.core);
    save_matrix(dir / "A_RI.fmat", M.A_RI);
    save_matrix(dir / "H_RII.fmat", M.H_RII);
    save_matrix(dir / "H_RRI.fmat", M.H_RRI);
    auto blocks = blocks_json(M.core);
    blocks["A_RI"] = {M.A_RI.rows(), M.A_RI.cols()};
    blocks["H_RII"] = {M.H_RII.rows(), M.H_RII.cols()};
    blocks["H_RRI"] = {M.H_RRI.rows(), M.H_RRI.cols()};
    write_json(dir / "manifest.json", Json{{"kind", "coupled_reduced"},
                                           {"schema_version", kModelSchemaVersion},
                                           {"order", M.order()},
                                           {"input_dim", M.core.input_dim()},
                                           {"blocks", blocks},
                                           {"interface_ids", M.interface_ids}});
}

CoupledReducedModel load_coupled_reduced_model(const fs::path& dir) {
    require_dir(dir);
    const auto manifest = read_json(dir / "manifest.json");
    check_kind(manifest, "coupled_reduced");
    CoupledReducedModel M;
    M.core = read_quad_files(dir);
    M.interface_ids = get<std::vector<std::size_t>>(manifest, "interface_ids");
    const auto r = M.core.A.rows();
    M.A_RI = load_matrix(dir / "A_RI.fmat");
    M.H_RII = load_matrix(dir / "H_RII.fmat");
    M.H_RRI = load_matrix(dir / "H_RRI.fmat");
    if (M.A_RI.size() == 0) M.A_RI.resize(r, 0);
    if (M.H_RII.size() == 0) M.H_RII.resize(r, 0);
    if (M.H_RRI.size() == 0) M.H_RRI.resize(r, 0);
    M.validate();
    return M;
}

void save_basis(const fs::path& dir, const ReducedBasis& B) {
    make_dir(dir);
    save_matrix(dir / "V.fmat", B.V);
    save_matrix(dir / "sigma.fmat", column_matrix(B.sigma));
    write_json(dir / "manifest.json", Json{{"kind", "basis"},
                                           {"schema_version", kModelSchemaVersion},
                                           {"r", B.r},
                                           {"full_dim", B.full_dim()},
                                           {"retained_energy", B.retained_energy()}});
}

ReducedBasis load_basis(const fs::path& dir) {
    require_dir(dir);
    const auto manifest = read_json(dir / "manifest.json");
    check_kind(manifest, "basis");
    ReducedBasis B;
    B.V = load_matrix(dir / "V.fmat");
    B.sigma = as_vector(load_matrix(dir / "sigma.fmat"), "sigma.fmat");
    B.r = get<std::size_t>(manifest, "r");
    if (B.r != static_cast<std::size_t>(B.V.cols())) throw ParseError("basis: r does not match V");
    return B;
}

void save_sparse_model(const fs::path& dir, const SparseQuadModel& M, const AdjacencyGraph* graph) {
    M.validate();
    make_dir(dir);
    Json rows = Json::array();
    std::vector<std::size_t> interface_rows;
    std::size_t offset = 0;
    std::vector<double> payload;
    for (std::size_t i = 0; i < M.rows.size(); ++i) {
        const auto& row = M.rows[i];
        if (row.interface) interface_rows.push_back(i);
        const Vector* blocks[] = {&row.linear,          &row.quadratic,         &row.coupling_linear,
                                  &row.coupling_quadratic, &row.coupling_bilinear, &row.input};
        Json sizes = Json::array();
        for (const Vector* b : blocks) {
            sizes.push_back(b->size());
            payload.insert(payload.end(), b->data(), b->data() + b->size());
        }
        payload.push_back(row.constant);
        rows.push_back(Json{{"Q", row.Q}, {"L", row.L}, {"interface", row.interface}, {"offset", offset},
                            {"sizes", sizes}});
        offset = payload.size();
    }
    Json manifest{{"kind", "sfom"},
                  {"schema_version", kModelSchemaVersion},
                  {"n_F", M.n_F},
                  {"r", M.r},
                  {"structure", M.structure.terms()},
                  {"seed", M.seed},
                  {"interface_rows", interface_rows},
                  {"block_order",
                   {"linear", "quadratic", "coupling_linear", "coupling_quadratic", "coupling_bilinear", "input",
                    "constant"}},
                  {"rows", rows}};
    if (graph) manifest["graph"] = graph->all_neighbors();
    save_matrix(dir / "coefficients.fmat",
                Eigen::Map<const Matrix>(payload.data(), static_cast<Eigen::Index>(payload.size()), 1));
    write_json(dir / "manifest.json", manifest);
}

SparseQuadModel load_sparse_model(const fs::path& dir) {
    require_dir(dir);
    const auto manifest = read_json(dir / "manifest.json");
    check_kind(manifest, "sfom");
    const Vector payload = as_vector(load_matrix(dir / "coefficients.fmat"), "coefficients.fmat");
    SparseQuadModel M;
    M.n_F = get<std::size_t>(manifest, "n_F");
    M.r = get<std::size_t>(manifest, "r");
    M.structure = ModelStructure::from_terms(get<std::vector<std::string>>(manifest, "structure"));
    M.seed = get<std::uint64_t>(manifest, "seed");
    const auto& rows = manifest.at("rows");
    if (!rows.is_array() || rows.size() != M.n_F) throw ParseError("sfom manifest: row table does not match n_F");
    M.rows.reserve(M.n_F);
    for (const auto& rj : rows) {
        SparseRow row;
        row.Q = get<std::vector<std::size_t>>(rj, "Q");
        row.L = get<std::vector<std::size_t>>(rj, "L");
        row.interface = get<bool>(rj, "interface");
        auto pos = get<std::size_t>(rj, "offset");
        const auto sizes = get<std::vector<std::size_t>>(rj, "sizes");
        if (sizes.size() != 6) throw ParseError("sfom manifest: expected 6 block sizes per row");
        Vector* blocks[] = {&row.linear,          &row.quadratic,         &row.coupling_linear,
                            &row.coupling_quadratic, &row.coupling_bilinear, &row.input};
        for (std::size_t b = 0; b < 6; ++b) {
            if (pos + sizes[b] > static_cast<std::size_t>(payload.size()))
                throw ParseError("sfom payload shorter than the offset table");
            *blocks[b] = payload.segment(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(sizes[b]));
            pos += sizes[b];
        }
        if (pos >= static_cast<std::size_t>(payload.size())) throw ParseError("sfom payload shorter than the offset table");
        row.constant = payload[static_cast<Eigen::Index>(pos)];
        M.rows.push_back(std::move(row));
    }
    M.validate();
    return M;
}

Json to_json(const DomainDecomposition& dd) {
    return Json{{"n", dd.n},
                {"fom_ids", dd.fom_ids},
                {"overlap_ids", dd.overlap_ids},
                {"interface_ids", dd.interface_ids},
                {"blend", dd.blend}};
}

DomainDecomposition decomposition_from_json(const Json& j) {
    DomainDecomposition dd;
    dd.n = get<std::size_t>(j, "n");
    dd.fom_ids = get<std::vector<std::size_t>>(j, "fom_ids");
    dd.overlap_ids = get<std::vector<std::size_t>>(j, "overlap_ids");
    dd.interface_ids = get<std::vector<std::size_t>>(j, "interface_ids");
    dd.blend = get<std::vector<double>>(j, "blend");
    // rom side = complement of the full-order side, plus the overlap
    std::vector<bool> is_fom(dd.n, false);
    for (auto id : dd.fom_ids) {
        if (id >= dd.n) throw ParseError("decomposition: fom id out of range");
        is_fom[id] = true;
    }
    std::vector<bool> in_overlap(dd.n, false);
    for (auto id : dd.overlap_ids) {
        if (id >= dd.n) throw ParseError("decomposition: overlap id out of range");
        in_overlap[id] = true;
    }
    for (std::size_t i = 0; i < dd.n; ++i)
        if (!is_fom[i] || in_overlap[i]) dd.rom_ids.push_back(i);
    dd.validate();
    return dd;
}

void save_coupled_model(const fs::path& dir, const CoupledModel& M, const AdjacencyGraph* fom_graph) {
    M.validate();
    make_dir(dir);
    save_coupled_reduced_model(dir / "rom", M.rom);
    save_basis(dir / "basis", M.basis);
    save_sparse_model(dir / "fom", M.fom, fom_graph);
    write_json(dir / "decomposition.json", to_json(M.dd));
    write_json(dir / "manifest.json", Json{{"kind", "coupled"},
                                           {"schema_version", kModelSchemaVersion},
                                           {"parts", {"rom", "basis", "fom", "decomposition.json"}}});
}

CoupledModel load_coupled_model(const fs::path& dir) {
    require_dir(dir);
    check_kind(read_json(dir / "manifest.json"), "coupled");
    CoupledModel M;
    M.dd = decomposition_from_json(read_json(dir / "decomposition.json"));
    M.rom = load_coupled_reduced_model(dir / "rom");
    M.basis = load_basis(dir / "basis");
    M.fom = load_sparse_model(dir / "fom");
    M.validate();
    return M;
}

std::string model_kind(const fs::path& dir) {
    require_dir(dir);
    if (!fs::exists(dir / "manifest.json")) throw IoError("no manifest.json in " + dir.string());
    return get<std::string>(read_json(dir / "manifest.json"), "kind");
}

Json to_json(const LCurvePoint& p) {
    return Json{{"eta1", p.eta1}, {"eta2", p.eta2}, {"fit_error", p.fit_error}, {"solution_norm", p.solution_norm}};
}

Json to_json(const RegularizationReport& r) {
    Json curve = Json::array();
    for (const auto& p : r.curve) curve.push_back(to_json(p));
    return Json{{"chosen", to_json(r.chosen)}, {"curve", curve}, {"warnings", r.warnings}};
}

Json to_json(const RegConfig& reg) {
    const auto& s = reg.scales;
    Json j{{"eta1", reg.eta1},
           {"eta2", reg.eta2},
           {"eta1_grid", reg.eta1_grid},
           {"axes", to_string(reg.axes)},
           {"scales",
            {{"linear", s.linear},
             {"quadratic", s.quadratic},
             {"input", s.input},
             {"constant", s.constant},
             {"coupling_linear", s.coupling_linear},
             {"coupling_quadratic", s.coupling_quadratic},
             {"coupling_bilinear", s.coupling_bilinear}}}};
    if (const auto* m = std::get_if<Eta2Multiple>(&reg.eta2_rule))
        j["eta2_multiple"] = m->factor;
    else
        j["eta2_grid"] = std::get<Eta2Grid>(reg.eta2_rule).values;
    return j;
}

RegConfig reg_config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("regularization: expected an object");
    RegConfig reg;
    try {
        reg.eta1 = j.value("eta1", 0.0);
        reg.eta2 = j.value("eta2", 0.0);
        if (j.contains("eta1_grid")) {
            const auto& g = j.at("eta1_grid");
            if (g.is_object())
                reg.eta1_grid = RegConfig::log_grid(g.at("lo").get<double>(), g.at("hi").get<double>(),
                                                    g.at("count").get<std::size_t>());
            else
                reg.eta1_grid = g.get<std::vector<double>>();
        }
        if (j.contains("eta2_multiple") && j.contains("eta2_grid"))
            throw InvalidArgument("regularization: give eta2_multiple or eta2_grid, not both");
        if (j.contains("eta2_multiple")) reg.eta2_rule = Eta2Multiple{j.at("eta2_multiple").get<double>()};
        if (j.contains("eta2_grid")) {
            const auto& g = j.at("eta2_grid");
            if (g.is_object())
                reg.eta2_rule = Eta2Grid{RegConfig::log_grid(g.at("lo").get<double>(), g.at("hi").get<double>(),
                                                             g.at("count").get<std::size_t>())};
            else
                reg.eta2_rule = Eta2Grid{g.get<std::vector<double>>()};
        }
        if (j.contains("axes")) reg.axes = lcurve_axes_from_string(j.at("axes").get<std::string>());
        if (j.contains("scales")) {
            const auto& s = j.at("scales");
            auto& b = reg.scales;
            b.linear = s.value("linear", b.linear);
            b.quadratic = s.value("quadratic", b.quadratic);
            b.input = s.value("input", b.input);
            b.constant = s.value("constant", b.constant);
            b.coupling_linear = s.value("coupling_linear", b.coupling_linear);
            b.coupling_quadratic = s.value("coupling_quadratic", b.coupling_quadratic);
            b.coupling_bilinear = s.value("coupling_bilinear", b.coupling_bilinear);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("regularization: ") + e.what());
    }
    reg.validate();
    return reg;
}

void save_trajectory(const fs::path& dir, const Trajectory& T) {
    make_dir(dir);
    save_matrix(dir / "states.fmat", T.states);
    if (T.reduced_states) save_matrix(dir / "reduced_states.fmat", *T.reduced_states);
    {
        auto out = open_out(dir / "times.csv");
        for (double t : T.times) out << format_double(t) << '\n';
        if (!out) throw IoError("failed writing times.csv");
    }
    auto out = open_out(dir / "status.csv");
    out << (T.diverged_at ? 1 : 0) << ',' << (T.diverged_at ? format_double(*T.diverged_at) : std::string("nan"))
        << '\n';
    if (!out) throw IoError("failed writing status.csv");
}

void save_disks_csv(const fs::path& path, const DiskSet& disks) {
    auto out = open_out(path);
    for (const auto& d : disks.disks) out << format_double(d.center) << ',' << format_double(d.radius) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void save_spectrum_csv(const fs::path& path, const std::vector<std::complex<double>>& eigs) {
    auto out = open_out(path);
    for (const auto& z : eigs) out << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ddinfer
