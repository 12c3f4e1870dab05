#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace plfsi {

/// Equidistant probability grid 0 = t_0 < t_1 < ... < t_{m-1} = 1.
class ProbabilityGrid {
public:
    explicit ProbabilityGrid(std::size_t m = 101);

    std::size_t size() const noexcept { return points_.size(); }
    double step() const noexcept { return 1.0 / static_cast<double>(points_.size() - 1); }
    double operator[](std::size_t j) const { return points_[j]; }
    const std::vector<double>& points() const noexcept { return points_; }

    /// Trapezoidal quadrature weights; they sum to 1.
    const Eigen::VectorXd& trapezoid_weights() const noexcept { return trap_; }

    /// Trapezoidal approximation of the integral over [0,1] of a grid function.
    double integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const;

    /// Index of the last grid point <= t (t clipped to [0,1]).
    std::size_t floor_index(double t) const;

    /// Piecewise-linear interpolation of a grid function at t.
    double interpolate(const Eigen::Ref<const Eigen::VectorXd>& values, double t) const;

    bool operator==(const ProbabilityGrid& other) const noexcept { return size() == other.size(); }

private:
    std::vector<double> points_;
    Eigen::VectorXd trap_;
};

/// Nondecreasing function values on a probability grid.
class QuantileFunction {
public:
    /// Throws InputError if values are not finite, not nondecreasing, or the
    /// length does not match the grid.
    QuantileFunction(ProbabilityGrid grid, Eigen::VectorXd values);

    const ProbabilityGrid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    double operator[](std::size_t j) const { return values_[static_cast<Eigen::Index>(j)]; }
    std::size_t size() const noexcept { return grid_.size(); }

    /// Mean of the represented distribution, i.e. the integral of Q over [0,1].
    double mean() const { return grid_.integrate(values_); }

private:
    ProbabilityGrid grid_;
    Eigen::VectorXd values_;
};

/// Irregularly time-stamped nonnegative activity measurements of one subject.
struct RawActivitySeries {
    std::string subject_id;
    std::vector<double> times;        // days
    std::vector<double> measurements; // activity units

    std::size_t size() const noexcept { return measurements.size(); }
    void validate() const;
};

/// Left-continuous generalized inverse of the empirical CDF evaluated on the
/// grid: Q(t) = inf{a : F(a) >= t}, Q(0) = min.
QuantileFunction empirical_quantile(std::span<const double> samples, const ProbabilityGrid& grid);

/// Same, at a single probability level.
double empirical_quantile_at(std::span<const double> sorted_samples, double t);

/// 2-Wasserstein distance, i.e. the L2[0,1] distance between quantile functions.
double wasserstein_distance(const QuantileFunction& a, const QuantileFunction& b);

/// Trapezoidal L2 distance between two arbitrary grid functions.
double l2_distance(const ProbabilityGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b);

/// Pointwise weighted average; the Frechet mean under W2.
QuantileFunction weighted_frechet_mean(std::span<const QuantileFunction> qs, std::span<const double> weights);

/// Row-wise weighted mean of an n x m matrix of grid functions.
Eigen::VectorXd weighted_frechet_mean(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                      std::span<const double> weights);

// CSV form: "# grid: equidistant, m=<m>" then "subject_id,q_0,...,q_{m-1}".
struct QuantileTable {
    ProbabilityGrid grid;
    std::vector<std::string> ids;
    Eigen::MatrixXd values; // one row per subject
};

void write_quantile_csv(std::ostream& out, const QuantileTable& table);
QuantileTable read_quantile_csv(std::istream& in, const std::string& source_name = "<stream>");

} // namespace plfsi
