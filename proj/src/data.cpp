#include "ddinfer/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

constexpr char kFmatMagic[4] = {'F', 'M', 'A', 'T'};

template <typename T>
T to_little_endian(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        std::reverse(bytes, bytes + sizeof(T));
        std::memcpy(&value, bytes, sizeof(T));
    }
    return value;
}

std::string describe(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

Matrix read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + describe(path));

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError(describe(path) + " line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (!line.empty() && line.back() == ',')
            throw ParseError(describe(path) + " line " + std::to_string(line_no) + ": trailing comma");
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(describe(path) + " line " + std::to_string(line_no) + ": ragged row (" +
                             std::to_string(row.size()) + " values, expected " +
                             std::to_string(rows.front().size()) + ")");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return M;
}

void write_csv(const std::filesystem::path& path, const Matrix& M) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + describe(path));
    out.precision(17);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << M(i, j);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + describe(path));
}

Matrix read_fmat(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + describe(path));

    char magic[4];
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || std::memcmp(magic, kFmatMagic, 4) != 0) throw ParseError(describe(path) + ": malformed FMAT header");
    rows = to_little_endian(rows);
    cols = to_little_endian(cols);

    const auto max_index = static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max());
    if (rows > max_index || cols > max_index || (cols != 0 && rows > max_index / cols / sizeof(double)))
        throw ParseError(describe(path) + ": FMAT dimensions overflow");

    const std::uint64_t count = rows * cols;
    const auto payload = std::filesystem::file_size(path) - 20;
    if (payload != count * sizeof(double))
        throw ParseError(describe(path) + ": FMAT payload size does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));

    Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(M.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ParseError(describe(path) + ": truncated FMAT payload");
    if constexpr (std::endian::native == std::endian::big) {
        for (Eigen::Index k = 0; k < M.size(); ++k) M.data()[k] = to_little_endian(M.data()[k]);
    }
    return M;
}

void write_fmat(const std::filesystem::path& path, const Matrix& M) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + describe(path));
    const auto rows = to_little_endian(static_cast<std::uint64_t>(M.rows()));
    const auto cols = to_little_endian(static_cast<std::uint64_t>(M.cols()));
    out.write(kFmatMagic, 4);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(M.data()), static_cast<std::streamsize>(M.size() * sizeof(double)));
    } else {
        for (Eigen::Index k = 0; k < M.size(); ++k) {
            const double v = to_little_endian(M.data()[k]);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
    if (!out) throw IoError("write failed for " + describe(path));
}

}  // namespace

TimeGrid TimeGrid::make(double t0, double dt, std::size_t count) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time grid: dt must be positive");
    if (count < 2) throw InvalidArgument("time grid: count must be at least 2");
    if (!std::isfinite(t0)) throw InvalidArgument("time grid: t0 must be finite");
    return TimeGrid{t0, dt, count};
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> t(count);
    for (std::size_t j = 0; j < count; ++j) t[j] = at(j);
    return t;
}

SnapshotSet::SnapshotSet(Matrix X, std::vector<double> times, Matrix U, std::optional<Matrix> dXdt)
    : X_(std::move(X)), U_(std::move(U)), times_(std::move(times)), dXdt_(std::move(dXdt)) {
    const auto nt = static_cast<Eigen::Index>(times_.size());
    if (X_.cols() != nt) throw InvalidArgument("snapshot set: state column count differs from time count");
    if (U_.size() > 0 && U_.cols() != nt) throw InvalidArgument("snapshot set: input column count differs from time count");
    if (U_.size() == 0) U_.resize(0, nt);
    if (dXdt_ && (dXdt_->cols() != nt || dXdt_->rows() != X_.rows()))
        throw InvalidArgument("snapshot set: derivative matrix shape differs from state matrix");
    for (std::size_t j = 1; j < times_.size(); ++j)
        if (!(times_[j] > times_[j - 1])) throw InvalidArgument("snapshot set: times must be strictly increasing");
}

bool SnapshotSet::uniform() const {
    if (times_.size() < 3) return true;
    const double mean = (times_.back() - times_.front()) / static_cast<double>(times_.size() - 1);
    double worst = 0.0;
    for (std::size_t j = 1; j < times_.size(); ++j) worst = std::max(worst, std::abs((times_[j] - times_[j - 1]) - mean));
    return worst < 1e-12 * mean;
}

Matrix SnapshotSet::derivatives_or_estimate() const {
    if (dXdt_) return *dXdt_;
    return estimate_time_derivative(X_, times_);
}

SnapshotSet SnapshotSet::columns(std::size_t first, std::size_t count) const {
    if (first + count > times_.size()) throw InvalidArgument("snapshot set: column range out of bounds");
    const auto f = static_cast<Eigen::Index>(first);
    const auto c = static_cast<Eigen::Index>(count);
    std::vector<double> t(times_.begin() + static_cast<std::ptrdiff_t>(first),
                          times_.begin() + static_cast<std::ptrdiff_t>(first + count));
    std::optional<Matrix> d;
    if (dXdt_) d = dXdt_->middleCols(f, c);
    return SnapshotSet(X_.middleCols(f, c), std::move(t), U_.middleCols(f, c), std::move(d));
}

MatrixFormat format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return MatrixFormat::csv;
    if (ext == ".fmat") return MatrixFormat::fmat;
    throw InvalidArgument("unknown matrix file extension '" + ext + "' (expected .csv or .fmat)");
}

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    if (!std::filesystem::exists(path)) throw IoError("no such file " + describe(path));
    return format == MatrixFormat::csv ? read_csv(path) : read_fmat(path);
}

Matrix load_matrix(const std::filesystem::path& path) { return load_matrix(path, format_for(path)); }

void save_matrix(const std::filesystem::path& path, const Matrix& M, MatrixFormat format) {
    if (format == MatrixFormat::csv)
        write_csv(path, M);
    else
        write_fmat(path, M);
}

void save_matrix(const std::filesystem::path& path, const Matrix& M) { save_matrix(path, M, format_for(path)); }

Matrix estimate_time_derivative(const Matrix& X, std::span<const double> times) {
    const auto nt = static_cast<Eigen::Index>(times.size());
    if (X.cols() != nt) throw InvalidArgument("derivative: column count differs from time count");
    if (nt < 3) throw InvalidArgument("derivative: at least 3 snapshots are required");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1])) throw InvalidArgument("derivative: times must be strictly increasing");

    Matrix D(X.rows(), nt);
    for (Eigen::Index j = 1; j + 1 < nt; ++j) {
        const double h1 = times[j] - times[j - 1];
        const double h2 = times[j + 1] - times[j];
        D.col(j) = (-h2 / (h1 * (h1 + h2))) * X.col(j - 1) + ((h2 - h1) / (h1 * h2)) * X.col(j) +
                   (h1 / (h2 * (h1 + h2))) * X.col(j + 1);
    }
    {
        const double h1 = times[1] - times[0];
        const double h2 = times[2] - times[1];
        D.col(0) = (-(2.0 * h1 + h2) / (h1 * (h1 + h2))) * X.col(0) + ((h1 + h2) / (h1 * h2)) * X.col(1) -
                   (h1 / (h2 * (h1 + h2))) * X.col(2);
    }
    {
        const Eigen::Index e = nt - 1;
        const double h1 = times[e - 1] - times[e - 2];
        const double h2 = times[e] - times[e - 1];
        D.col(e) = (h2 / (h1 * (h1 + h2))) * X.col(e - 2) - ((h1 + h2) / (h1 * h2)) * X.col(e - 1) +
                   ((h1 + 2.0 * h2) / (h2 * (h1 + h2))) * X.col(e);
    }
    return D;
}

std::pair<SnapshotSet, SnapshotSet> split_train_test(const SnapshotSet& S, double t_split) {
    const auto& t = S.times();
    if (t.empty() || !(t_split > t.front()) || !(t_split < t.back()))
        throw InvalidArgument("split: t_split must lie strictly inside the snapshot time range");
    // Times within a tiny fraction of the spacing of t_split count as training.
    const double slack = 1e-9 * (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    const auto first_test =
        static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), t_split + slack) - t.begin());
    return {S.columns(0, first_test), S.columns(first_test, t.size() - first_test)};
}

}  // namespace ddinfer
