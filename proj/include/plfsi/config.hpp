#pragma once

#include "plfsi/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace plfsi {

struct DataSection {
    std::string id_column = "subject_id";
    std::vector<std::string> x_columns;
    std::vector<std::string> z_columns;
    std::vector<std::string> categorical_columns;
    // Pairs "a:b" of x/z/categorical columns; the product enters Z.
    std::vector<std::string> interactions;
    std::string weight_column;  // empty: unit weights
    std::string stratum_column; // empty: a single stratum
    std::string psu_column;     // empty: each subject its own PSU
    bool standardize = true;
    std::size_t grid_size = 101;
    int wear_days_required = 3;
    double wear_hours_required = 10.0;
};

struct InferenceSection {
    double level = 0.95;
    double t_max = 0.97;
};

struct ClusterSection {
    int k = 3;
    int k_max = 8;
    int restarts = 10;
    std::uint64_t seed = 1;
};

struct Config {
    DataSection data;
    SplineSettings spline;
    OptimizerSettings optimizer;
    InferenceSection inference;
    ClusterSection cluster;

    FitConfig fit_config() const;
};

/// INI-style text with sections [data], [spline], [optimizer], [inference]
/// and [cluster]. Unknown sections or keys raise InputError listing the
/// valid names.
Config parse_config(std::istream& in, const std::string& source = "<config>");
Config load_config(const std::filesystem::path& path);

/// `explicit_path` if non-empty, else $PLFSI_CONFIG if set, else defaults.
Config resolve_config(const std::string& explicit_path);

void write_config(std::ostream& out, const Config& config);

} // namespace plfsi
