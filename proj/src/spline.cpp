#include "plfsi/spline.hpp"

#include "plfsi/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace plfsi {

namespace {
constexpr int kMaxOrder = 16;
}

SplineConfig::SplineConfig(int order, double lower, double upper, std::vector<double> interior_knots)
    : order_(order), interior_(std::move(interior_knots))
{
    if (order_ < 2 || order_ > kMaxOrder) {
        throw InputError("spline order must be between 2 and " + std::to_string(kMaxOrder));
    }
    if (interior_.empty()) {
        throw InputError("spline needs at least one interior knot");
    }
    if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper)) {
        throw InputError("spline boundary knots must be finite with lower < upper");
    }
    for (std::size_t j = 0; j < interior_.size(); ++j) {
        if (!(interior_[j] > lower && interior_[j] < upper)) {
            throw InputError("interior knot " + std::to_string(interior_[j]) + " is not strictly inside the boundary knots");
        }
        if (j > 0 && interior_[j] < interior_[j - 1]) {
            throw InputError("interior knots must be nondecreasing");
        }
    }
    knots_.assign(static_cast<std::size_t>(order_), lower);
    knots_.insert(knots_.end(), interior_.begin(), interior_.end());
    knots_.insert(knots_.end(), static_cast<std::size_t>(order_), upper);
}

int SplineConfig::find_span(double u) const
{
    const int n_basis = basis_dim();
    // The last nonempty span ends at the upper boundary; u == upper belongs to it.
    if (u >= knots_[static_cast<std::size_t>(n_basis)]) {
        int span = n_basis - 1;
        while (span > order_ - 1 && knots_[static_cast<std::size_t>(span)] == knots_[static_cast<std::size_t>(span + 1)]) {
            --span;
        }
        return span;
    }
    // upper_bound over the knots; span is the last index with knots[span] <= u.
    const auto it = std::upper_bound(knots_.begin() + order_ - 1, knots_.begin() + n_basis + 1, u);
    return static_cast<int>(it - knots_.begin()) - 1;
}

// de Boor's triangular scheme for the `order` nonzero functions
// N_{span-order+1..span} and their first derivatives.
void SplineConfig::local_basis(int span, double u, double* values, double* derivs) const
{
    const int p = order_ - 1; // degree
    std::array<double, kMaxOrder + 1> left{}, right{};
    // Degree p-1 functions, kept for the derivative formula.
    std::array<double, kMaxOrder> lower_degree{};

    values[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        if (j == p) {
            std::copy(values, values + p, lower_degree.begin());
        }
        left[static_cast<std::size_t>(j)] = u - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double temp = denom != 0.0 ? values[r] / denom : 0.0;
            values[r] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        values[j] = saved;
    }
    if (derivs == nullptr) {
        return;
    }
    // N'_{i,p} = p * (N_{i,p-1}/(t_{i+p}-t_i) - N_{i+1,p-1}/(t_{i+p+1}-t_{i+1}))
    // with the degree-(p-1) functions N_{span-p+1..span} stored in lower_degree.
    if (p == 0) {
        derivs[0] = 0.0;
        return;
    }
    for (int r = 0; r <= p; ++r) {
        const int i = span - p + r; // global index of this function
        double d = 0.0;
        if (r >= 1) {
            const double denom = knots_[static_cast<std::size_t>(i + p)] - knots_[static_cast<std::size_t>(i)];
            if (denom != 0.0) {
                d += lower_degree[static_cast<std::size_t>(r - 1)] / denom;
            }
        }
        if (r <= p - 1) {
            const double denom = knots_[static_cast<std::size_t>(i + p + 1)] - knots_[static_cast<std::size_t>(i + 1)];
            if (denom != 0.0) {
                d -= lower_degree[static_cast<std::size_t>(r)] / denom;
            }
        }
        derivs[r] = p * d;
    }
}

void SplineConfig::eval_into(double u, std::span<double> out) const
{
    if (std::isnan(u)) {
        throw InputError("spline evaluation at NaN");
    }
    std::fill(out.begin(), out.end(), 0.0);
    u = std::clamp(u, lower(), upper());
    const int span = find_span(u);
    std::array<double, kMaxOrder> local{};
    local_basis(span, u, local.data(), nullptr);
    for (int r = 0; r < order_; ++r) {
        out[static_cast<std::size_t>(span - order_ + 1 + r)] = local[static_cast<std::size_t>(r)];
    }
}

Eigen::VectorXd SplineConfig::eval(double u) const
{
    Eigen::VectorXd out(basis_dim());
    eval_into(u, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

Eigen::VectorXd SplineConfig::eval_derivative(double u) const
{
    if (std::isnan(u)) {
        throw InputError("spline evaluation at NaN");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(basis_dim());
    u = std::clamp(u, lower(), upper());
    const int span = find_span(u);
    std::array<double, kMaxOrder> values{}, derivs{};
    local_basis(span, u, values.data(), derivs.data());
    for (int r = 0; r < order_; ++r) {
        out[span - order_ + 1 + r] = derivs[static_cast<std::size_t>(r)];
    }
    return out;
}

double percentile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) {
        throw InputError("percentile of empty sample");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SplineConfig make_knots(std::span<const double> index_values, int interior_count, int order)
{
    if (interior_count < 1) {
        throw InputError("interior knot count must be at least 1");
    }
    std::vector<double> sorted(index_values.begin(), index_values.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t n_distinct = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        n_distinct += sorted[i] != sorted[i - 1];
    }
    if (n_distinct < static_cast<std::size_t>(interior_count + 2)) {
        throw InputError("too few distinct index values (" + std::to_string(n_distinct) + ") for " +
                         std::to_string(interior_count) + " interior knots");
    }
    std::vector<double> interior;
    interior.reserve(static_cast<std::size_t>(interior_count));
    for (int j = 1; j <= interior_count; ++j) {
        interior.push_back(percentile_sorted(sorted, static_cast<double>(j) / (interior_count + 1)));
    }
    return SplineConfig(order, sorted.front(), sorted.back(), std::move(interior));
}

} // namespace plfsi
