#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "plfsi/metrics.hpp"
#include "plfsi/synthetic.hpp"

#include <random>
#include <sstream>

using namespace plfsi;

namespace {

Eigen::MatrixXd random_quantiles(Eigen::Index n, std::size_t m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> step(5.0);
    std::normal_distribution<double> start(0.0, 1.0);
    Eigen::MatrixXd y(n, static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = start(rng);
        for (Eigen::Index j = 1; j < y.cols(); ++j) {
            y(i, j) = y(i, j - 1) + step(rng);
        }
    }
    return y;
}

std::vector<double> random_weights(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::vector<double> w(n);
    for (auto& v : w) {
        v = u(rng);
    }
    return w;
}

} // namespace

TEST_CASE("R^2 is one for a perfect fit and zero for the Frechet mean")
{
    const ProbabilityGrid grid(41);
    const auto y = random_quantiles(30, grid.size(), 1);
    const auto w = random_weights(30, 2);
    CHECK(frechet_r2(grid, y, y, w) == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::VectorXd mean = weighted_frechet_mean(y, w);
    const Eigen::MatrixXd flat = mean.transpose().replicate(y.rows(), 1);
    CHECK(std::abs(frechet_r2(grid, y, flat, w)) <= 1e-12);
}

TEST_CASE("R^2 matches a longhand computation")
{
    const ProbabilityGrid grid(21);
    const auto y = random_quantiles(15, grid.size(), 3);
    const auto f = random_quantiles(15, grid.size(), 4);
    const auto w = random_weights(15, 5);
    double sw = 0.0;
    std::vector<double> mean(grid.size(), 0.0);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        sw += w[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < grid.size(); ++j) {
            mean[j] += w[static_cast<std::size_t>(i)] * y(i, static_cast<Eigen::Index>(j));
        }
    }
    for (auto& v : mean) {
        v /= sw;
    }
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        std::vector<double> e(grid.size());
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            e[j] = (y(i, jj) - f(i, jj)) * (y(i, jj) - f(i, jj));
            v[j] = (y(i, jj) - mean[j]) * (y(i, jj) - mean[j]);
        }
        num += w[static_cast<std::size_t>(i)] * oracle::trapezoid(e);
        den += w[static_cast<std::size_t>(i)] * oracle::trapezoid(v);
    }
    CHECK(frechet_r2(grid, y, f, w) == doctest::Approx(1.0 - num / den).epsilon(1e-12));
}

TEST_CASE("R^2 rejects degenerate responses and mismatched shapes")
{
    const ProbabilityGrid grid(11);
    const Eigen::MatrixXd same = Eigen::RowVectorXd::LinSpaced(11, 0.0, 1.0).replicate(5, 1);
    const std::vector<double> w(5, 1.0);
    CHECK_THROWS_AS(frechet_r2(grid, same, same, w), NumericalError);
    CHECK_THROWS_AS(frechet_r2(grid, same, same.topRows(4), w), InputError);
}

TEST_CASE("adjusted R^2 hand values")
{
    CHECK(adjusted_r2(0.5, 100, 4) == doctest::Approx(0.5 - 0.5 * 4.0 / 95.0));
    CHECK(adjusted_r2(1.0, 20, 7) == 1.0);
    CHECK(adjusted_r2(0.9, 12, 5) == doctest::Approx(0.9 - 0.1 * 5.0 / 6.0));
    CHECK_THROWS_AS(adjusted_r2(0.5, 5, 4), InputError);
}

TEST_CASE("band multiplier")
{
    CHECK(band_multiplier(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(band_multiplier(0.90) == doctest::Approx(1.644854).epsilon(1e-6));
    CHECK(band_multiplier(0.99) == doctest::Approx(2.575829).epsilon(1e-6));
    CHECK_THROWS_AS(band_multiplier(1.0), InputError);
    CHECK_THROWS_AS(band_multiplier(0.0), InputError);
}

TEST_CASE("parameter counts and metrics on fitted models")
{
    SyntheticConfig c;
    c.n = 150;
    c.p_z = 2;
    c.noise_sd = 0.2;
    c.seed = 11;
    const auto sim = generate(c);
    const auto plsi = fit_plsi(sim.data);
    const auto global = fit_global(sim.data);
    CHECK(parameter_count(plsi) == 1 + 2 + 5 + 4);
    CHECK(parameter_count(global) == 1 + 2 + 2);
    const auto m = compute_metrics(plsi, sim.data);
    CHECK(m.model == "plsi");
    CHECK(m.n == 150);
    CHECK(m.r2 == doctest::Approx(frechet_r2(sim.data.grid, sim.data.y, predict_dataset(plsi, sim.data), sim.data.weights)));
    CHECK(m.adj_r2 == doctest::Approx(adjusted_r2(m.r2, 150, 12)));
    CHECK(m.adj_r2 < m.r2);
    CHECK(m.r2 > compute_metrics(global, sim.data).r2);
}

TEST_CASE("confidence bands")
{
    SyntheticConfig c;
    c.n = 100;
    c.noise_sd = 0.2;
    c.seed = 12;
    const auto sim = generate(c);
    const auto fit = fit_global(sim.data);
    const auto rows = confidence_bands(fit, 0.95, 0.97);
    // 98 grid points (t <= 0.97) per coefficient
    CHECK(rows.size() == static_cast<std::size_t>(fit.coefficients.rows()) * 98);
    const double z = band_multiplier(0.95);
    for (const auto& r : rows) {
        CHECK(r.t <= 0.97 + 1e-12);
        CHECK(r.lower <= r.estimate);
        CHECK(r.upper >= r.estimate);
        CHECK((r.upper - r.estimate) == doctest::Approx(r.estimate - r.lower));
    }
    CHECK(rows.front().coefficient == fit.coefficient_names.front());
    CHECK(rows.front().upper - rows.front().estimate == doctest::Approx(z * fit.std_error(0, 0)));

    std::ostringstream out;
    write_bands_csv(out, rows);
    CHECK(out.str().rfind("coef,t,est,lo,hi\n", 0) == 0);
    std::ostringstream mout;
    write_metrics_csv(mout, {compute_metrics(fit, sim.data)});
    CHECK(mout.str().rfind("model,r2,adj_r2,n,q\nglobal,", 0) == 0);
}

TEST_CASE("R^2 toy case by hand")
{
    // m = 3: trapezoid weights 1/4, 1/2, 1/4. Unit weights, n = 3.
    const ProbabilityGrid grid(3);
    Eigen::MatrixXd y(3, 3);
    y << 0, 1, 2,
         1, 2, 3,
         2, 3, 4;
    Eigen::MatrixXd f(3, 3);
    f << 0, 1, 2,
         1, 2, 3,
         1, 2, 3;
    // Mean is the middle row; residual sum 1; total sum 1 + 0 + 1 = 2.
    const std::vector<double> w(3, 1.0);
    CHECK(frechet_r2(grid, y, f, w) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("R^2 does not depend on the scale of the weights; adjustment never raises it")
{
    const ProbabilityGrid grid(31);
    const auto y = random_quantiles(25, grid.size(), 8);
    const auto f = random_quantiles(25, grid.size(), 9);
    auto w = random_weights(25, 10);
    const double base = frechet_r2(grid, y, f, w);
    for (auto& v : w) {
        v *= 16.0;
    }
    CHECK(frechet_r2(grid, y, f, w) == base);
    for (auto& v : w) {
        v *= 0.37;
    }
    CHECK(frechet_r2(grid, y, f, w) == doctest::Approx(base).epsilon(1e-13));

    for (double r2 : {-0.5, 0.0, 0.3, 0.99, 1.0}) {
        for (Eigen::Index q : {1, 3, 12}) {
            CHECK(adjusted_r2(r2, 40, q) <= r2);
        }
    }
}
