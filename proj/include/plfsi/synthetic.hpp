#pragma once

#include "plfsi/config.hpp"
#include "plfsi/dataset.hpp"
#include "plfsi/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace plfsi {

enum class WeightScheme { uniform, random, informative };

std::string to_string(WeightScheme s);
WeightScheme weight_scheme_from_string(const std::string& s);

/// beta(t) = level + slope * t
struct LinearEffect {
    double level = 0.0;
    double slope = 0.0;
};

/// Y_i(t) = base(t) + sum_j beta_j(t) Z_ij + link(theta0' X_i) * shape(t) + noise
///
/// base(t) = 1 + 2t + 4t^3 has slope at least 2, which bounds how steeply
/// the linear terms may decrease; the link term is nonnegative and shape(t)
/// nondecreasing, or shape is constant. Together these make every noiseless
/// response nondecreasing without projection.
struct SyntheticConfig {
    std::size_t n = 500;
    Eigen::VectorXd theta0 = (Eigen::VectorXd(2) << 0.6, 0.8).finished();
    int p_z = 1;
    std::vector<LinearEffect> beta; // length p_z; defaults used when empty
    // Optional categorical covariate with this many levels (0 = none); the
    // level effects are constant in t.
    int categorical_levels = 0;
    std::string link = "sigmoid-ramp";
    double noise_sd = 0.1;
    WeightScheme weights = WeightScheme::uniform;
    int strata = 1;
    int psus_per_stratum = 0; // 0 = each subject its own PSU
    std::size_t grid_size = 101;
    std::uint64_t seed = 1;

    void validate() const;
    std::vector<LinearEffect> effects() const;
};

/// Names accepted by `SyntheticConfig::link`.
std::vector<std::string> link_names();

/// The link function g(u) and the t-shape it multiplies.
double link_value(const std::string& link, double u);
double link_shape(const std::string& link, double t);

double base_quantile(double t);

struct SyntheticTruth {
    SyntheticConfig config;
    Eigen::MatrixXd signal; // n x m noiseless surface
    Eigen::MatrixXd noise;  // n x m noise before re-projection
};

struct SyntheticData {
    Dataset data; // responses after monotone re-projection; covariates unstandardized
    std::vector<std::string> categories; // level label per subject when categorical_levels > 0
    Eigen::MatrixXd z_numeric;           // continuous linear covariates only
    SyntheticTruth truth;
};

/// Noiseless response for one subject.
Eigen::VectorXd true_surface(const SyntheticConfig& config, const ProbabilityGrid& grid,
                             const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z);

SyntheticData generate(const SyntheticConfig& config);

/// sqrt(mean_t var_i signal(t) / mean_t var noise(t)), the latter from the
/// noise model rather than the realized draws.
double signal_to_noise(const SyntheticTruth& truth);

/// noise_sd giving the requested signal-to-noise ratio for this config's
/// covariate draw (the noise does not affect the signal).
double noise_sd_for_snr(SyntheticConfig config, double target);

/// Writes series.csv, covariates.csv, config.ini and truth.json. Each subject
/// gets `days` days of minute-level values drawn at stratified probability
/// levels from its response quantile function (clamped at zero) in a seeded
/// random order.
void write_simulation(const std::filesystem::path& dir, const SyntheticData& sim, int days = 3);

void write_truth_json(std::ostream& out, const SyntheticData& sim);

} // namespace plfsi
