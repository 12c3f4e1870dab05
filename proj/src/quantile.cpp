#include "plfsi/quantile.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace plfsi {

ProbabilityGrid::ProbabilityGrid(std::size_t m)
{
    if (m < 2) {
        throw InputError("probability grid needs at least 2 points");
    }
    points_.resize(m);
    const double denom = static_cast<double>(m - 1);
    for (std::size_t j = 0; j < m; ++j) {
        points_[j] = static_cast<double>(j) / denom;
    }
    trap_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1.0 / denom);
    trap_[0] *= 0.5;
    trap_[static_cast<Eigen::Index>(m - 1)] *= 0.5;
}

double ProbabilityGrid::integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const
{
    if (static_cast<std::size_t>(values.size()) != size()) {
        throw InputError("grid function length does not match grid");
    }
    return trap_.dot(values);
}

std::size_t ProbabilityGrid::floor_index(double t) const
{
    // The small offset keeps t = j/(m-1) on index j despite rounding.
    const double pos = std::clamp(t, 0.0, 1.0) * static_cast<double>(size() - 1);
    return std::min(static_cast<std::size_t>(std::floor(pos + 1e-9)), size() - 1);
}

double ProbabilityGrid::interpolate(const Eigen::Ref<const Eigen::VectorXd>& values, double t) const
{
    if (static_cast<std::size_t>(values.size()) != size()) {
        throw InputError("grid function length does not match grid");
    }
    const double pos = std::clamp(t, 0.0, 1.0) * static_cast<double>(size() - 1);
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-9) {
        return values[static_cast<Eigen::Index>(nearest)];
    }
    const auto j = std::min(static_cast<std::size_t>(std::floor(pos)), size() - 2);
    const double frac = pos - static_cast<double>(j);
    const auto jj = static_cast<Eigen::Index>(j);
    return (1.0 - frac) * values[jj] + frac * values[jj + 1];
}

QuantileFunction::QuantileFunction(ProbabilityGrid grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values))
{
    if (static_cast<std::size_t>(values_.size()) != grid_.size()) {
        throw InputError("quantile function length does not match grid");
    }
    for (Eigen::Index j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j])) {
            throw InputError("quantile function has non-finite value");
        }
        if (j > 0 && values_[j] < values_[j - 1]) {
            throw InputError("quantile function is not nondecreasing at grid index " + std::to_string(j));
        }
    }
}

void RawActivitySeries::validate() const
{
    if (times.size() != measurements.size()) {
        throw InputError("series " + subject_id + ": times and measurements differ in length");
    }
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (j > 0 && times[j] < times[j - 1]) {
            throw InputError("series " + subject_id + ": times are not nondecreasing");
        }
        if (!(measurements[j] >= 0.0) || !std::isfinite(measurements[j])) {
            throw InputError("series " + subject_id + ": negative or non-finite measurement");
        }
    }
}

double empirical_quantile_at(std::span<const double> sorted, double t)
{
    if (sorted.empty()) {
        throw InputError("empty sample");
    }
    const auto n = sorted.size();
    if (t <= 0.0) {
        return sorted.front();
    }
    // smallest k with k/n >= t
    auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * t - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    return sorted[k - 1];
}

QuantileFunction empirical_quantile(std::span<const double> samples, const ProbabilityGrid& grid)
{
    if (samples.empty()) {
        throw InputError("empty sample");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) {
            throw InputError("non-finite sample");
        }
    }
    std::sort(sorted.begin(), sorted.end());

    // On the grid t_j = j/(m-1) the condition k/n >= t_j is k*(m-1) >= j*n,
    // which is exact in integer arithmetic.
    const std::size_t n = sorted.size();
    const std::size_t m1 = grid.size() - 1;
    Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j <= m1; ++j) {
        std::size_t k = (j * n + m1 - 1) / m1; // ceil(j n / (m-1))
        k = std::max<std::size_t>(k, 1);
        values[static_cast<Eigen::Index>(j)] = sorted[k - 1];
    }
    return QuantileFunction(grid, std::move(values));
}

double l2_distance(const ProbabilityGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b)
{
    if (a.size() != b.size() || static_cast<std::size_t>(a.size()) != grid.size()) {
        throw InputError("grid functions have mismatched lengths");
    }
    const Eigen::VectorXd d = (a - b).array().square();
    return std::sqrt(std::max(0.0, grid.integrate(d)));
}

double wasserstein_distance(const QuantileFunction& a, const QuantileFunction& b)
{
    if (!(a.grid() == b.grid())) {
        throw InputError("quantile functions are on different grids");
    }
    return l2_distance(a.grid(), a.values(), b.values());
}

Eigen::VectorXd weighted_frechet_mean(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::span<const double> weights)
{
    if (rows.rows() == 0) {
        throw InputError("Frechet mean of an empty collection");
    }
    if (static_cast<Eigen::Index>(weights.size()) != rows.rows()) {
        throw InputError("weights length does not match number of functions");
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(rows.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        if (!(w > 0.0)) {
            throw InputError("weights must be positive");
        }
        acc += w * rows.row(i).transpose();
        total += w;
    }
    return acc / total;
}

QuantileFunction weighted_frechet_mean(std::span<const QuantileFunction> qs, std::span<const double> weights)
{
    if (qs.empty()) {
        throw InputError("Frechet mean of an empty collection");
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(qs.size()), static_cast<Eigen::Index>(qs.front().size()));
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (!(qs[i].grid() == qs.front().grid())) {
            throw InputError("quantile functions are on different grids");
        }
        rows.row(static_cast<Eigen::Index>(i)) = qs[i].values().transpose();
    }
    Eigen::VectorXd mean = weighted_frechet_mean(rows, weights);
    // A convex combination of nondecreasing vectors is nondecreasing up to
    // rounding; remove last-bit inversions.
    for (Eigen::Index j = 1; j < mean.size(); ++j) {
        mean[j] = std::max(mean[j], mean[j - 1]);
    }
    return QuantileFunction(qs.front().grid(), std::move(mean));
}

void write_quantile_csv(std::ostream& out, const QuantileTable& table)
{
    const auto m = table.grid.size();
    out << "# grid: equidistant, m=" << m << '\n';
    std::vector<std::string> fields{"subject_id"};
    for (std::size_t j = 0; j < m; ++j) {
        fields.push_back("q_" + std::to_string(j));
    }
    csv::write_row(out, fields);
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        fields.assign(1, table.ids[i]);
        for (std::size_t j = 0; j < m; ++j) {
            fields.push_back(csv::format(table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
        csv::write_row(out, fields);
    }
}

QuantileTable read_quantile_csv(std::istream& in, const std::string& source)
{
    auto doc = csv::read(in, source);
    std::size_t m = 0;
    for (const auto& c : doc.comments) {
        const auto pos = c.find("m=");
        if (c.find("grid:") != std::string::npos && pos != std::string::npos) {
            m = static_cast<std::size_t>(std::stoul(c.substr(pos + 2)));
        }
    }
    if (m == 0) {
        throw InputError(source + ": missing '# grid: equidistant, m=<m>' header");
    }
    if (doc.header.size() != m + 1 || doc.header[0] != "subject_id") {
        throw InputError(source + ": header must be subject_id followed by " + std::to_string(m) + " quantile columns");
    }
    QuantileTable table{ProbabilityGrid(m), {}, Eigen::MatrixXd(static_cast<Eigen::Index>(doc.rows.size()), static_cast<Eigen::Index>(m))};
    for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        const auto& row = doc.rows[i];
        table.ids.push_back(row.fields[0]);
        for (std::size_t j = 0; j < m; ++j) {
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                csv::parse_double(row.fields[j + 1], source, row.line);
        }
    }
    return table;
}

} // namespace plfsi
