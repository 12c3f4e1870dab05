#include "plfsi/metrics.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <ostream>

namespace plfsi {

double frechet_r2(const ProbabilityGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& observed,
                  const Eigen::Ref<const Eigen::MatrixXd>& fitted, std::span<const double> weights)
{
    if (observed.rows() != fitted.rows() || observed.cols() != fitted.cols() ||
        static_cast<Eigen::Index>(weights.size()) != observed.rows() ||
        static_cast<std::size_t>(observed.cols()) != grid.size()) {
        throw InputError("R^2 inputs have mismatched dimensions");
    }
    const Eigen::VectorXd mean = weighted_frechet_mean(observed, weights);
    const auto& trap = grid.trapezoid_weights();
    double resid = 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < observed.rows(); ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        resid += w * trap.dot((observed.row(i) - fitted.row(i)).array().square().matrix().transpose());
        total += w * trap.dot((observed.row(i).transpose() - mean).array().square().matrix());
    }
    if (!(total > 0.0)) {
        throw NumericalError("degenerate response");
    }
    return 1.0 - resid / total;
}

double adjusted_r2(double r2, Eigen::Index n, Eigen::Index q)
{
    if (q < 0 || n <= q + 1) {
        throw InputError("adjusted R^2 needs n > q + 1 (n = " + std::to_string(n) + ", q = " + std::to_string(q) + ")");
    }
    return r2 - (1.0 - r2) * static_cast<double>(q) / static_cast<double>(n - q - 1);
}

Eigen::Index parameter_count(const ModelFit& fit)
{
    if (fit.kind == ModelKind::plsi) {
        return 1 + fit.p_z() + fit.spline->basis_dim();
    }
    return 1 + fit.p_z() + fit.p_x();
}

double band_multiplier(double level)
{
    if (!(level > 0.0 && level < 1.0)) {
        throw InputError("confidence level must lie in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>{}, 0.5 + level / 2.0);
}

std::vector<BandRow> confidence_bands(const ModelFit& fit, double level, double t_max)
{
    const double z = band_multiplier(level);
    std::vector<BandRow> rows;
    for (Eigen::Index c = 0; c < fit.coefficients.rows(); ++c) {
        for (std::size_t t = 0; t < fit.grid.size(); ++t) {
            if (fit.grid[t] > t_max + 1e-12) {
                break;
            }
            const auto tt = static_cast<Eigen::Index>(t);
            const double est = fit.coefficients(c, tt);
            const double hw = z * fit.std_error(c, tt);
            rows.push_back({fit.coefficient_names[static_cast<std::size_t>(c)], fit.grid[t], est, est - hw, est + hw});
        }
    }
    return rows;
}

MetricsRow compute_metrics(const ModelFit& fit, const Dataset& data)
{
    const Eigen::MatrixXd fitted = predict_dataset(fit, data);
    const double r2 = frechet_r2(data.grid, data.y, fitted, data.weights);
    const auto q = parameter_count(fit);
    return {to_string(fit.kind), r2, adjusted_r2(r2, data.n(), q), data.n(), q};
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows)
{
    csv::write_row(out, {"model", "r2", "adj_r2", "n", "q"});
    for (const auto& r : rows) {
        csv::write_row(out, {r.model, csv::format(r.r2), csv::format(r.adj_r2), std::to_string(r.n), std::to_string(r.q)});
    }
}

void write_bands_csv(std::ostream& out, const std::vector<BandRow>& rows)
{
    csv::write_row(out, {"coef", "t", "est", "lo", "hi"});
    for (const auto& r : rows) {
        csv::write_row(out, {r.coefficient, csv::format(r.t), csv::format(r.estimate), csv::format(r.lower),
                             csv::format(r.upper)});
    }
}

} // namespace plfsi
