#include "growlat/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace growlat {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc()) throw std::runtime_error("double formatting failed");
    return {buf, res.ptr};
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), columns_(header.size()) {
    if (header.empty()) throw std::invalid_argument("CSV header must not be empty");
    for (auto& h : header) cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(double x) {
    row_.push_back(format_double(x));
    return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
    row_.push_back(std::to_string(x));
    return *this;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        row_.push_back(s);
    } else {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        row_.push_back(q + "\"");
    }
    return *this;
}

void CsvWriter::end_row() {
    if (row_.size() != columns_)
        throw std::logic_error("CSV row has " + std::to_string(row_.size()) + " cells, expected " + std::to_string(columns_));
    for (std::size_t i = 0; i < row_.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += row_[i];
    }
    buffer_ += '\n';
    row_.clear();
}

void CsvWriter::close() {
    if (!open_) return;
    open_ = false;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary);
    out << buffer_;
    if (!out) throw std::runtime_error("cannot write " + path_.string());
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
    }
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

json to_json(const Decomposition& d) {
    json parts = json::array();
    for (const auto& p : d.parts()) {
        json flat = json::array();
        for (Eigen::Index i = 0; i < p.growth_tensor.rows(); ++i)
            for (Eigen::Index j = 0; j < p.growth_tensor.cols(); ++j) flat.push_back(p.growth_tensor(i, j));
        parts.push_back({{"directions", p.directions}, {"growth_tensor", flat}});
    }
    return {{"labels", d.labels()}, {"parts", parts}};
}

json to_json(const GroundState& g) {
    return {{"G", to_json(g.gradient.matrix())},
            {"energy", g.energy},
            {"gradient_norm", g.gradient_norm},
            {"iterations", g.iterations}};
}

json to_json(const FitResult& f, bool with_samples) {
    json params = json::object();
    for (std::size_t i = 0; i < f.names.size(); ++i) params[f.names[i]] = f.values[i];
    json j = {{"parameters", params},
              {"relative_mse", f.relative_mse},
              {"max_fractional_error", f.max_abs_error},
              {"retained", f.retained.size()},
              {"excluded", f.excluded}};
    if (with_samples) {
        j["targets"] = f.targets;
        j["model"] = f.model;
        j["errors"] = f.errors;
    }
    return j;
}

json to_json(const SolveReport& r) {
    return {{"per_cell_energy", r.per_cell_energy},
            {"total_energy", r.total_energy},
            {"iterations", r.iterations},
            {"restarts", r.restarts},
            {"gradient_norm", r.gradient_norm},
            {"converged", r.converged},
            {"message", r.message}};
}

void write_error_map_csv(const ErrorMap& map, const std::filesystem::path& path) {
    std::vector<std::string> header = {"lambda1", "lambda2", "lambda3", "error"};
    for (double t : map.thresholds) header.push_back("mask_" + std::to_string(std::lround(t * 100.0)));
    CsvWriter w(path, header);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const auto p = map.point(i);
        w.cell(p[0]).cell(p[1]).cell(p[2]).cell(map.values[i]);
        for (const auto& m : map.masks) w.cell(static_cast<bool>(m[i]));
        w.end_row();
    }
    w.close();
}

void write_field_csv(const FiniteLatticeSample& s, const DisplacementField& u, const std::filesystem::path& path) {
    const int d = s.dimension();
    std::vector<std::string> header = {"node"};
    for (int k = 0; k < d; ++k) header.push_back("x" + std::to_string(k + 1));
    for (int k = 0; k < d; ++k) header.push_back("u" + std::to_string(k + 1));
    CsvWriter w(path, header);
    for (int i = 0; i < s.node_count(); ++i) {
        w.cell(i);
        for (int c : s.node_coords(i)) w.cell(c);
        const Eigen::VectorXd p = u.point(i);
        for (int k = 0; k < d; ++k) w.cell(p[k]);
        w.end_row();
    }
    w.close();
}

void write_json(const json& j, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace growlat
