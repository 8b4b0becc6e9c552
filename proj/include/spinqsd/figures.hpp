// figures.hpp: Figure pipelines: run an experiment and write its CSV

#pragma once

#include "spinqsd/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinqsd {

enum class Budget { Quick, Full };

struct FigureOptions {
    std::string which;          // 1, 2, 3, 4a, 4b, 5
    Budget budget = Budget::Quick;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::filesystem::path out_dir = ".";
};

struct FigureReport {
    std::filesystem::path csv;
    std::size_t rows = 0;
    std::size_t failures = 0;   // rows written with status != ok
    nlohmann::json summary;     // figure-specific numbers (e.g. fitted slope)
};

const std::vector<std::string>& figure_names();

// Throws std::invalid_argument for an unknown figure name.
FigureReport run_figure(const FigureOptions& opts);

} // namespace spinqsd
