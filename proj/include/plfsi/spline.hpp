#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace plfsi {

/// Clamped B-spline basis of order `order` (degree order-1) with `interior`
/// interior knots. Boundary knots are repeated `order` times, so the basis
/// has interior + order functions.
class SplineConfig {
public:
    SplineConfig(int order, double lower, double upper, std::vector<double> interior_knots);

    int order() const noexcept { return order_; }
    int interior_count() const noexcept { return static_cast<int>(interior_.size()); }
    int basis_dim() const noexcept { return interior_count() + order_; }
    double lower() const noexcept { return knots_.front(); }
    double upper() const noexcept { return knots_.back(); }
    const std::vector<double>& interior_knots() const noexcept { return interior_; }
    /// Full knot vector, length interior + 2*order.
    const std::vector<double>& knots() const noexcept { return knots_; }

    /// Basis values at u (clamped to the boundary knots). Throws on NaN.
    Eigen::VectorXd eval(double u) const;
    /// First derivatives of the basis functions at u (clamped).
    Eigen::VectorXd eval_derivative(double u) const;

    /// Writes basis values into `out` (length basis_dim) without allocating.
    void eval_into(double u, std::span<double> out) const;

    bool operator==(const SplineConfig& o) const noexcept { return order_ == o.order_ && knots_ == o.knots_; }

private:
    // Index of the knot span [knots_[span], knots_[span+1]) containing u.
    int find_span(double u) const;
    // Nonzero basis functions (and optionally derivatives) at u on `span`.
    void local_basis(int span, double u, double* values, double* derivs) const;

    int order_;
    std::vector<double> interior_;
    std::vector<double> knots_;
};

/// Boundary knots at min/max of `index_values`; interior knots at the
/// empirical percentiles 100 j/(K+1), j = 1..K (linear interpolation between
/// order statistics). Throws if there are fewer than K+2 distinct values or
/// an interior knot coincides with a boundary.
SplineConfig make_knots(std::span<const double> index_values, int interior_count, int order);

/// Sample percentile by linear interpolation between order statistics
/// (the "type 7" definition). `sorted` must be ascending.
double percentile_sorted(std::span<const double> sorted, double p);

inline Eigen::VectorXd eval_basis(double u, const SplineConfig& cfg) { return cfg.eval(u); }
inline Eigen::VectorXd eval_basis_derivative(double u, const SplineConfig& cfg) { return cfg.eval_derivative(u); }

} // namespace plfsi
