#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "plfsi/errors.hpp"
#include "plfsi/spline.hpp"

#include <random>

using namespace plfsi;

namespace {

SplineConfig random_config(std::mt19937_64& rng, int order)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<double> interior;
    for (int j = 0; j < k; ++j) {
        interior.push_back(-2.0 + 5.0 * (0.05 + 0.9 * u(rng)));
    }
    std::sort(interior.begin(), interior.end());
    return SplineConfig(order, -2.0, 3.0, interior);
}

} // namespace

TEST_CASE("knot vector layout")
{
    const SplineConfig s(4, 0.0, 1.0, {0.25, 0.5, 0.75});
    CHECK(s.basis_dim() == 7);
    CHECK(s.knots().size() == 11);
    CHECK(s.knots().front() == 0.0);
    CHECK(s.knots()[3] == 0.0);
    CHECK(s.knots()[4] == 0.25);
    CHECK(s.knots()[7] == 1.0);
    CHECK_THROWS_AS(SplineConfig(1, 0.0, 1.0, {0.5}), InputError);
    CHECK_THROWS_AS(SplineConfig(4, 0.0, 1.0, {1.0}), InputError);
    CHECK_THROWS_AS(SplineConfig(4, 0.0, 1.0, {0.6, 0.4}), InputError);
    CHECK_THROWS_AS(SplineConfig(4, 1.0, 0.0, {0.5}), InputError);
}

TEST_CASE("basis values and derivatives match the Cox-de Boor recursion")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    for (int order = 2; order <= 6; ++order) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto s = random_config(rng, order);
            for (int k = 0; k < 25; ++k) {
                const double x = k == 0 ? -2.0 : (k == 1 ? 3.0 : u(rng));
                const Eigen::VectorXd b = s.eval(x);
                const Eigen::VectorXd d = s.eval_derivative(x);
                for (int i = 0; i < s.basis_dim(); ++i) {
                    CHECK(b[i] == doctest::Approx(oracle::bspline(s.knots(), i, order, x)).epsilon(1e-12).scale(1.0));
                    if (x != 3.0 || order > 2) {
                        // At the right end the derivative is the left limit; the
                        // recursion oracle only covers it through the closed last span.
                        CHECK(d[i] == doctest::Approx(oracle::bspline_derivative(s.knots(), i, order, x))
                                          .epsilon(1e-9)
                                          .scale(1.0));
                    }
                }
            }
        }
    }
}

TEST_CASE("partition of unity, nonnegativity, local support")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    for (int order = 2; order <= 5; ++order) {
        const auto s = random_config(rng, order);
        for (int k = 0; k < 200; ++k) {
            const double x = u(rng);
            const Eigen::VectorXd b = s.eval(x);
            CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(b.minCoeff() >= 0.0);
            CHECK((b.array() > 0.0).count() <= order);
            CHECK(std::abs(s.eval_derivative(x).sum()) <= 1e-9);
        }
    }
}

TEST_CASE("derivative matches central differences away from knots")
{
    const SplineConfig s(4, 0.0, 10.0, {2.0, 4.5, 7.0});
    for (double x : {0.7, 1.3, 3.1, 5.9, 8.8}) {
        const Eigen::VectorXd d = s.eval_derivative(x);
        for (int i = 0; i < s.basis_dim(); ++i) {
            const double fd = oracle::central_difference([&](double v) { return s.eval(v)[i]; }, x, 1e-6);
            CHECK(d[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("cubic B-splines reproduce linear functions")
{
    const SplineConfig s(4, 0.0, 1.0, {0.2, 0.4, 0.6, 0.8});
    // Greville abscissae give the coefficients of the identity.
    const auto& t = s.knots();
    Eigen::VectorXd c(s.basis_dim());
    for (int i = 0; i < s.basis_dim(); ++i) {
        c[i] = (t[static_cast<std::size_t>(i + 1)] + t[static_cast<std::size_t>(i + 2)] + t[static_cast<std::size_t>(i + 3)]) / 3.0;
    }
    for (double x = 0.0; x <= 1.0; x += 0.01) {
        CHECK(s.eval(x).dot(c) == doctest::Approx(x).epsilon(1e-12).scale(1.0));
        CHECK(s.eval_derivative(x).dot(c) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("inputs outside the boundary are clamped")
{
    const SplineConfig s(3, 0.0, 1.0, {0.5});
    CHECK(s.eval(-5.0).isApprox(s.eval(0.0)));
    CHECK(s.eval(7.0).isApprox(s.eval(1.0)));
    CHECK_THROWS_AS(s.eval(NAN), InputError);
}

TEST_CASE("eval_into agrees with eval")
{
    const SplineConfig s(4, 0.0, 1.0, {0.3, 0.6});
    std::vector<double> buf(static_cast<std::size_t>(s.basis_dim()));
    for (double x : {0.0, 0.1, 0.3, 0.55, 1.0}) {
        s.eval_into(x, buf);
        const Eigen::VectorXd b = s.eval(x);
        for (int i = 0; i < s.basis_dim(); ++i) {
            CHECK(buf[static_cast<std::size_t>(i)] == b[i]);
        }
    }
}

TEST_CASE("make_knots places interior knots at type-7 percentiles")
{
    std::vector<double> v;
    for (int i = 0; i < 13; ++i) {
        v.push_back(static_cast<double>((i * 7) % 13));
    }
    const auto s = make_knots(v, 5, 4);
    CHECK(s.lower() == 0.0);
    CHECK(s.upper() == 12.0);
    REQUIRE(s.interior_knots().size() == 5);
    // Sorted values are 0..12, so the p-th percentile is 12 p.
    for (int j = 1; j <= 5; ++j) {
        CHECK(s.interior_knots()[static_cast<std::size_t>(j - 1)] == doctest::Approx(12.0 * j / 6.0));
    }
    const std::vector<double> sorted{1.0, 2.0, 4.0, 8.0};
    CHECK(percentile_sorted(sorted, 0.5) == doctest::Approx(3.0));
    CHECK(percentile_sorted(sorted, 1.0) == 8.0);
    CHECK(percentile_sorted(sorted, 0.0) == 1.0);

    const std::vector<double> few{1.0, 1.0, 2.0, 3.0, 3.0, 4.0};
    CHECK_THROWS_AS(make_knots(few, 5, 4), InputError);
}

TEST_CASE("equidistant index values put interior knots at sixths")
{
    std::vector<double> v;
    for (int i = 0; i <= 1000; ++i) {
        v.push_back(i / 1000.0);
    }
    const auto s = make_knots(v, 5, 4);
    for (int j = 1; j <= 5; ++j) {
        CHECK(std::abs(s.interior_knots()[static_cast<std::size_t>(j - 1)] - j / 6.0) <= 1e-3);
    }
}

TEST_CASE("knots with duplicated values follow the order statistics and ignore input order")
{
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> level(0, 9);
    std::vector<double> v(57);
    for (auto& x : v) {
        x = level(rng) * 0.5;
    }
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    const auto s = make_knots(v, 5, 4);
    for (int j = 1; j <= 5; ++j) {
        // type 7: h = (n - 1) p, interpolate between order statistics floor(h) and floor(h) + 1
        const double h = (sorted.size() - 1) * (j / 6.0);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double want = sorted[lo] + (h - std::floor(h)) * (sorted[std::min(lo + 1, sorted.size() - 1)] - sorted[lo]);
        CHECK(s.interior_knots()[static_cast<std::size_t>(j - 1)] == doctest::Approx(want).epsilon(1e-14));
    }
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(v.begin(), v.end(), rng);
        CHECK(make_knots(v, 5, 4).knots() == s.knots());
    }
}
