// io.hpp: CSV emission and run manifests

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace spinqsd {

// Build identifier written into every manifest.
const char* code_version();

// %.17g, with nan and inf spelled out.
std::string format_double(double x);

using CsvCell = std::variant<double, long long, std::string>;

// Header row is written on construction, so even an empty table has one.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    void row(const std::vector<CsvCell>& cells);
    void flush() { out_.flush(); }
    std::size_t columns() const { return n_cols_; }

private:
    std::ofstream out_;
    std::size_t n_cols_;
};

// Writes <dir>/manifest.json: the given config plus code version.
void write_manifest(const std::filesystem::path& dir, nlohmann::json config);
nlohmann::json read_manifest(const std::filesystem::path& file);

} // namespace spinqsd
