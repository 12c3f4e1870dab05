#include "plfsi/interpretation.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"
#include "plfsi/parallel.hpp"

#include <cmath>
#include <ostream>

namespace plfsi {

namespace {

void require_plsi(const ModelFit& fit)
{
    if (fit.kind != ModelKind::plsi || !fit.spline) {
        throw InputError("index derivatives require a single-index fit");
    }
}

// Grid index of probability t; t must coincide with a grid point.
std::size_t grid_index(const ProbabilityGrid& grid, double t)
{
    if (!(t >= 0.0 && t <= 1.0)) {
        throw InputError("probability level " + csv::format(t) + " is outside [0, 1]");
    }
    const auto j = static_cast<std::size_t>(std::lround(t / grid.step()));
    if (std::abs(grid[j] - t) > 1e-9) {
        throw InputError("probability level " + csv::format(t) + " is not a grid point (m = " +
                         std::to_string(grid.size()) + ")");
    }
    return j;
}

bool outside(const std::pair<double, double>& window, double u)
{
    return u < window.first || u > window.second;
}

} // namespace

std::pair<double, double> derivative_window(const ModelFit& fit)
{
    require_plsi(fit);
    const auto& interior = fit.spline->interior_knots();
    return {interior.front(), interior.back()};
}

IndexDerivative index_derivative(const ModelFit& fit, double u, std::size_t t_index)
{
    require_plsi(fit);
    if (t_index >= fit.grid.size()) {
        throw InputError("grid index out of range");
    }
    if (!std::isfinite(u)) {
        throw InputError("index value must be finite");
    }
    const Eigen::VectorXd d = fit.spline->eval_derivative(u);
    const Eigen::MatrixXd gamma = fit.gamma();
    const double value = gamma.col(static_cast<Eigen::Index>(t_index)).dot(d);
    return {value, outside(derivative_window(fit), u)};
}

Eigen::VectorXd index_derivative_curve(const ModelFit& fit, double u)
{
    require_plsi(fit);
    const Eigen::VectorXd d = fit.spline->eval_derivative(u);
    return fit.gamma().transpose() * d;
}

std::vector<DerivativeRow> derivative_table(const ModelFit& fit, int u_count, const std::vector<double>& t_list)
{
    require_plsi(fit);
    if (u_count < 2) {
        throw InputError("need at least two index values");
    }
    std::vector<std::size_t> cols;
    for (double t : t_list) {
        cols.push_back(grid_index(fit.grid, t));
    }
    const auto window = derivative_window(fit);
    const double lo = fit.spline->lower();
    const double hi = fit.spline->upper();
    std::vector<DerivativeRow> rows;
    for (int k = 0; k < u_count; ++k) {
        const double u = lo + (hi - lo) * k / (u_count - 1);
        const Eigen::VectorXd curve = index_derivative_curve(fit, u);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            rows.push_back({u, t_list[j], curve[static_cast<Eigen::Index>(cols[j])], outside(window, u)});
        }
    }
    return rows;
}

void write_derivative_csv(std::ostream& out, const std::vector<DerivativeRow>& rows)
{
    csv::write_row(out, {"u", "t", "dyd_u", "extrapolated"});
    for (const auto& r : rows) {
        csv::write_row(out, {csv::format(r.u), csv::format(r.t), csv::format(r.derivative), r.extrapolated ? "1" : "0"});
    }
}

std::vector<double> AxisRange::values() const
{
    if (!std::isfinite(from) || !std::isfinite(to) || !(step > 0.0) || to < from) {
        throw InputError("axis range needs finite from <= to and a positive step");
    }
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long k = 0; k <= count; ++k) {
        out.push_back(from + step * static_cast<double>(k));
    }
    return out;
}

std::vector<GridCell> prediction_grid(const ModelFit& fit, const AxisRange& x1, const AxisRange& x2,
                                      const Eigen::Ref<const Eigen::VectorXd>& z_fixed, std::size_t threads)
{
    if (fit.p_x() != 2) {
        throw InputError("prediction grid needs exactly two index covariates, the fit has " +
                         std::to_string(fit.p_x()));
    }
    if (z_fixed.size() != fit.p_z()) {
        throw InputError("expected " + std::to_string(fit.p_z()) + " fixed linear covariates, got " +
                         std::to_string(z_fixed.size()));
    }
    const auto a = x1.values();
    const auto b = x2.values();
    const Eigen::VectorXd z = fit.z_standardization.empty() ? Eigen::VectorXd(z_fixed)
                                                            : fit.z_standardization.apply(z_fixed);
    std::vector<GridCell> cells(a.size() * b.size());
    parallel_for(cells.size(), threads, [&](std::size_t c) {
        GridCell& cell = cells[c];
        cell.x1 = a[c / b.size()];
        cell.x2 = b[c % b.size()];
        Eigen::VectorXd raw(2);
        raw << cell.x1, cell.x2;
        const Eigen::VectorXd x = fit.x_standardization.empty() ? raw : fit.x_standardization.apply(raw);
        const QuantileFunction q = predict(fit, z, x);
        cell.prediction = q.values();
        cell.integral = fit.grid.integrate(cell.prediction);
    });
    return cells;
}

void write_heatmap_csv(std::ostream& out, const ModelFit& fit, const std::vector<GridCell>& cells,
                       const std::vector<double>& t_list)
{
    std::vector<std::size_t> cols;
    for (double t : t_list) {
        cols.push_back(grid_index(fit.grid, t));
    }
    csv::write_row(out, {fit.x_names.at(0), fit.x_names.at(1), "t", "yhat"});
    for (const auto& cell : cells) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            csv::write_row(out, {csv::format(cell.x1), csv::format(cell.x2), csv::format(t_list[j]),
                                 csv::format(cell.prediction[static_cast<Eigen::Index>(cols[j])])});
        }
    }
}

void write_heatmap_integral_csv(std::ostream& out, const ModelFit& fit, const std::vector<GridCell>& cells)
{
    csv::write_row(out, {fit.x_names.at(0), fit.x_names.at(1), "integral"});
    for (const auto& cell : cells) {
        csv::write_row(out, {csv::format(cell.x1), csv::format(cell.x2), csv::format(cell.integral)});
    }
}

ClinicalEquivalent mims_to_clinical(double delta_daily_mims, const ClinicalScale& scale)
{
    if (!std::isfinite(delta_daily_mims)) {
        throw InputError("activity change must be finite");
    }
    return {scale.steps_per_unit * delta_daily_mims, scale.mortality_pct_per_unit * delta_daily_mims};
}

} // namespace plfsi
