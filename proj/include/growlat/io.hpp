#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "growlat/continuum.hpp"
#include "growlat/homogenize.hpp"
#include "growlat/solver.hpp"

namespace growlat {

using json = nlohmann::ordered_json;

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    CsvWriter& cell(double x);
    CsvWriter& cell(long long x);
    CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
    CsvWriter& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
    CsvWriter& cell(bool b) { return cell(static_cast<long long>(b ? 1 : 0)); }
    CsvWriter& cell(const std::string& s);
    /// Ends the row; throws if the column count does not match the header.
    void end_row();
    void close();

    ~CsvWriter();

private:
    std::filesystem::path path_;
    std::vector<std::string> row_;
    std::string buffer_;
    std::size_t columns_;
    bool open_ = true;
};

json to_json(const Matrix& m);  // row-major nested arrays
json to_json(const Decomposition& d);
json to_json(const GroundState& g);
json to_json(const FitResult& f, bool with_samples = false);
json to_json(const SolveReport& r);

/// lambda1, lambda2, lambda3, error, mask_<percent>...
void write_error_map_csv(const ErrorMap& map, const std::filesystem::path& path);

/// node, x_1..x_D, u_1..u_D
void write_field_csv(const FiniteLatticeSample& s, const DisplacementField& u, const std::filesystem::path& path);

void write_json(const json& j, const std::filesystem::path& path);

}  // namespace growlat
