#pragma once

#include "plfsi/model.hpp"
#include "plfsi/quantile.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace plfsi {

/// Survey-weighted Frechet R^2:
///   1 - sum w_i int (Y_i - Yhat_i)^2 / sum w_i int (Y_i - Ybar)^2
/// with Ybar the weighted Frechet mean. Throws NumericalError
/// "degenerate response" when all responses coincide.
double frechet_r2(const ProbabilityGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& observed,
                  const Eigen::Ref<const Eigen::MatrixXd>& fitted, std::span<const double> weights);

/// R^2 - (1 - R^2) q / (n - q - 1). Requires n > q + 1.
double adjusted_r2(double r2, Eigen::Index n, Eigen::Index q);

/// Per-grid-point parameter count used for the adjustment:
/// 1 + p_z + (K + s) for plsi, 1 + p_z + p_x for global.
Eigen::Index parameter_count(const ModelFit& fit);

/// Normal quantile z with P(|Z| <= z) = level; level 0.95 gives 1.959964.
double band_multiplier(double level);

struct BandRow {
    std::string coefficient;
    double t = 0.0;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Pointwise bands estimate -/+ z * se for every coefficient and every grid
/// point with t <= t_max. The bands treat the index direction and knots as fixed.
std::vector<BandRow> confidence_bands(const ModelFit& fit, double level = 0.95, double t_max = 0.97);

struct MetricsRow {
    std::string model;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    Eigen::Index n = 0;
    Eigen::Index q = 0;
};

MetricsRow compute_metrics(const ModelFit& fit, const Dataset& data);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_bands_csv(std::ostream& out, const std::vector<BandRow>& rows);

} // namespace plfsi
