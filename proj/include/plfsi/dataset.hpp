#pragma once

#include "plfsi/quantile.hpp"
#include "plfsi/survey_wls.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace plfsi {

/// Affine map raw -> model scale: (raw - center) / scale, per column.
struct Standardization {
    std::vector<double> center;
    std::vector<double> scale;

    static Standardization identity(std::size_t p);
    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
    bool empty() const noexcept { return center.empty(); }
};

/// One subject: response quantile function plus covariates and survey design.
struct SubjectRecord {
    std::string subject_id;
    Eigen::VectorXd quantiles;
    Eigen::VectorXd x; // index covariates
    Eigen::VectorXd z; // linear covariates
    double weight = 1.0;
    std::string stratum = "1";
    std::string psu;
};

/// Column-oriented collection of subject records on a shared grid.
struct Dataset {
    ProbabilityGrid grid;
    std::vector<std::string> ids;
    Eigen::MatrixXd y; // n x m
    Eigen::MatrixXd x; // n x p_x
    Eigen::MatrixXd z; // n x p_z
    std::vector<double> weights;
    SurveyDesign survey;
    std::vector<std::string> x_names;
    std::vector<std::string> z_names;
    Standardization x_standardization;
    Standardization z_standardization;

    Eigen::Index n() const noexcept { return y.rows(); }
    Eigen::Index p_x() const noexcept { return x.cols(); }
    Eigen::Index p_z() const noexcept { return z.cols(); }

    SubjectRecord record(Eigen::Index i) const;

    /// Checks dimensions, finite values, positive weights and monotone rows.
    void validate() const;

    static Dataset from_records(const ProbabilityGrid& grid, const std::vector<SubjectRecord>& records,
                                std::vector<std::string> x_names = {}, std::vector<std::string> z_names = {});
};

inline constexpr int kDatasetFormatVersion = 1;

/// Writes quantiles.csv, covariates.csv and manifest.json into `dir`.
/// `extra_manifest` is merged into the manifest (JSON object text).
void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::string& extra_manifest = "{}");
Dataset read_dataset(const std::filesystem::path& dir);

} // namespace plfsi
