// io.cpp: CSV and manifest files

#include "spinqsd/io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#ifndef SPINQSD_VERSION
#define SPINQSD_VERSION "unknown"
#endif

namespace spinqsd {

const char* code_version() { return SPINQSD_VERSION; }

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

} // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path), n_cols_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << quote_if_needed(header[k]);
    out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != n_cols_) throw std::invalid_argument("CsvWriter: row has wrong number of columns");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out_ << ',';
        std::visit(
            [this](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) out_ << format_double(v);
                else if constexpr (std::is_same_v<T, long long>) out_ << v;
                else out_ << quote_if_needed(v);
            },
            cells[k]);
    }
    out_ << '\n';
    if (!out_) throw std::runtime_error("CsvWriter: write failed");
}

void write_manifest(const std::filesystem::path& dir, nlohmann::json config) {
    std::filesystem::create_directories(dir);
    config["code_version"] = code_version();
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << config.dump(2) << '\n';
}

nlohmann::json read_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    return nlohmann::json::parse(in);
}

} // namespace spinqsd
