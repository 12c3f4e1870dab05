#pragma once

#include "plfsi/model.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace plfsi {

struct IndexDerivative {
    double value = 0.0;
    // True when u lies outside the window spanned by the first and last
    // interior knots, where the link estimate is poorly supported.
    bool extrapolated = false;
};

/// d Y*(t) / d u = sum_j gamma_j(t) phi_j'(u) on the pre-projection surface,
/// at grid index `t_index`.
IndexDerivative index_derivative(const ModelFit& fit, double u, std::size_t t_index);

/// Derivative at every grid point.
Eigen::VectorXd index_derivative_curve(const ModelFit& fit, double u);

/// The window [first interior knot, last interior knot]. With the default
/// five interior knots this is the 16.667% to 83.333% range of the index.
std::pair<double, double> derivative_window(const ModelFit& fit);

struct DerivativeRow {
    double u = 0.0;
    double t = 0.0;
    double derivative = 0.0;
    bool extrapolated = false;
};

/// Derivative table on `u_count` equally spaced index values between the
/// boundary knots, for each requested grid probability.
std::vector<DerivativeRow> derivative_table(const ModelFit& fit, int u_count, const std::vector<double>& t_list);

void write_derivative_csv(std::ostream& out, const std::vector<DerivativeRow>& rows);

struct AxisRange {
    double from = 0.0;
    double to = 0.0;
    double step = 1.0;

    /// from, from + step, ... up to `to` (inclusive within a small tolerance).
    std::vector<double> values() const;
};

struct GridCell {
    double x1 = 0.0; // raw covariate scale
    double x2 = 0.0;
    Eigen::VectorXd prediction; // projected prediction on the full grid
    double integral = 0.0;      // trapezoid of the prediction over [0, 1]
};

inline const std::vector<double> kDefaultHeatmapLevels{0.5, 0.75, 0.9, 0.97};

/// Predictions over a 2-D grid of the two index covariates (raw scale), with
/// the linear covariates fixed at `z_fixed` (raw scale). Both are standardized
/// with the fit's constants before prediction.
std::vector<GridCell> prediction_grid(const ModelFit& fit, const AxisRange& x1, const AxisRange& x2,
                                      const Eigen::Ref<const Eigen::VectorXd>& z_fixed, std::size_t threads = 1);

/// Long table `<x1>,<x2>,t,yhat` with one row per cell and level in `t_list`.
void write_heatmap_csv(std::ostream& out, const ModelFit& fit, const std::vector<GridCell>& cells,
                       const std::vector<double>& t_list);

/// `<x1>,<x2>,integral`, one row per cell.
void write_heatmap_integral_csv(std::ostream& out, const ModelFit& fit, const std::vector<GridCell>& cells);

struct ClinicalScale {
    double steps_per_unit = 1000.0;
    double mortality_pct_per_unit = 4.0;
};

struct ClinicalEquivalent {
    double steps_per_day = 0.0;
    double annual_mortality_change_pct = 0.0;
};

/// Linear conversion of a change in daily activity units to daily steps and
/// percent change in annual mortality.
ClinicalEquivalent mims_to_clinical(double delta_daily_mims, const ClinicalScale& scale = {});

} // namespace plfsi
