#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "plfsi/errors.hpp"
#include "plfsi/quantile.hpp"

#include <boost/math/distributions/normal.hpp>

#include <random>
#include <sstream>

using namespace plfsi;

TEST_CASE("grid points and trapezoid weights")
{
    const ProbabilityGrid g(5);
    CHECK(g.size() == 5);
    CHECK(g[0] == 0.0);
    CHECK(g[2] == 0.5);
    CHECK(g[4] == 1.0);
    const auto& w = g.trapezoid_weights();
    CHECK(w[0] == doctest::Approx(0.125));
    CHECK(w[1] == doctest::Approx(0.25));
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(ProbabilityGrid(1), InputError);
}

TEST_CASE("integrate matches a longhand trapezoid")
{
    const ProbabilityGrid g(11);
    std::vector<double> f;
    Eigen::VectorXd v(11);
    for (std::size_t j = 0; j < 11; ++j) {
        f.push_back(g[j] * g[j]);
        v[static_cast<Eigen::Index>(j)] = f.back();
    }
    // Trapezoid of t^2 with h = 0.1 is 1/3 + h^2/6.
    CHECK(g.integrate(v) == doctest::Approx(oracle::trapezoid(f)).epsilon(1e-14));
    CHECK(g.integrate(v) == doctest::Approx(1.0 / 3.0 + 0.01 / 6.0).epsilon(1e-14));
}

TEST_CASE("interpolate is exact at grid points and linear between them")
{
    const ProbabilityGrid g(101);
    Eigen::VectorXd v(101);
    for (Eigen::Index j = 0; j < 101; ++j) {
        v[j] = std::exp(static_cast<double>(j) / 10.0);
    }
    for (std::size_t j = 0; j < 101; ++j) {
        CHECK(g.interpolate(v, g[j]) == v[static_cast<Eigen::Index>(j)]);
        CHECK(g.floor_index(g[j]) == j);
    }
    CHECK(g.interpolate(v, 0.005) == doctest::Approx(0.5 * (v[0] + v[1])));
    CHECK(g.interpolate(v, -1.0) == v[0]);
    CHECK(g.interpolate(v, 2.0) == v[100]);
}

TEST_CASE("empirical quantile equals the brute-force ECDF inverse")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        const std::size_t m = 2 + rng() % 30;
        std::vector<double> sample(n);
        for (auto& s : sample) {
            s = static_cast<double>(rng() % 7); // ties on purpose
        }
        const ProbabilityGrid g(m);
        const auto q = empirical_quantile(sample, g);
        for (std::size_t j = 0; j < m; ++j) {
            const double want = j == 0 ? *std::min_element(sample.begin(), sample.end())
                                       : oracle::ecdf_inverse(sample, g[j]);
            CHECK(q[j] == want);
        }
        std::vector<double> sorted = sample;
        std::sort(sorted.begin(), sorted.end());
        CHECK(empirical_quantile_at(sorted, 0.0) == sorted.front());
        CHECK(empirical_quantile_at(sorted, 1.0) == sorted.back());
    }
}

TEST_CASE("empirical quantile worked example")
{
    const std::vector<double> s{3.0, 1.0, 2.0, 4.0};
    const auto q = empirical_quantile(s, ProbabilityGrid(5));
    // t = 0, .25, .5, .75, 1 -> 1, 1, 2, 3, 4
    CHECK(q[0] == 1.0);
    CHECK(q[1] == 1.0);
    CHECK(q[2] == 2.0);
    CHECK(q[3] == 3.0);
    CHECK(q[4] == 4.0);
    CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, ProbabilityGrid(5)), InputError);
}

TEST_CASE("quantile function invariants are enforced")
{
    const ProbabilityGrid g(3);
    CHECK_NOTHROW(QuantileFunction(g, Eigen::Vector3d(1, 1, 2)));
    CHECK_THROWS_AS(QuantileFunction(g, Eigen::Vector3d(1, 0, 2)), InputError);
    CHECK_THROWS_AS(QuantileFunction(g, Eigen::Vector3d(1, NAN, 2)), InputError);
    CHECK_THROWS_AS(QuantileFunction(g, Eigen::Vector2d(1, 2)), InputError);
}

TEST_CASE("W2 distance is a metric on random quantile functions")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    const ProbabilityGrid g(51);
    auto draw = [&] {
        Eigen::VectorXd v(51);
        double acc = nd(rng);
        for (Eigen::Index j = 0; j < 51; ++j) {
            acc += std::abs(nd(rng));
            v[j] = acc;
        }
        return QuantileFunction(g, v);
    };
    for (int t = 0; t < 100; ++t) {
        const auto a = draw();
        const auto b = draw();
        const auto c = draw();
        CHECK(wasserstein_distance(a, a) == 0.0);
        CHECK(wasserstein_distance(a, b) == wasserstein_distance(b, a));
        CHECK(wasserstein_distance(a, c) <= wasserstein_distance(a, b) + wasserstein_distance(b, c) + 1e-12);
    }
}

TEST_CASE("W2 of a location shift is the shift")
{
    const ProbabilityGrid g(101);
    Eigen::VectorXd v(101);
    for (Eigen::Index j = 0; j < 101; ++j) {
        v[j] = std::sqrt(static_cast<double>(j));
    }
    const QuantileFunction a(g, v);
    const QuantileFunction b(g, (v.array() + 2.5).matrix());
    CHECK(wasserstein_distance(a, b) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("Gaussian quantile functions: W2 between N(0,1) and N(1,2) is sqrt(2)")
{
    // The endpoints are infinite; the grid is truncated half a step inside.
    const ProbabilityGrid g(1001);
    const boost::math::normal_distribution<double> n01(0.0, 1.0);
    const boost::math::normal_distribution<double> n12(1.0, 2.0);
    const double eps = 0.5 / 1000.0;
    Eigen::VectorXd a(1001);
    Eigen::VectorXd b(1001);
    for (std::size_t j = 0; j < 1001; ++j) {
        const double t = std::clamp(g[j], eps, 1.0 - eps);
        a[static_cast<Eigen::Index>(j)] = boost::math::quantile(n01, t);
        b[static_cast<Eigen::Index>(j)] = boost::math::quantile(n12, t);
    }
    CHECK(std::abs(wasserstein_distance({g, a}, {g, b}) - std::sqrt(2.0)) <= 2e-2);
}

TEST_CASE("Frechet mean is the pointwise weighted mean and minimizes weighted W2^2")
{
    const ProbabilityGrid g(21);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<QuantileFunction> qs;
    std::vector<double> w;
    for (int i = 0; i < 6; ++i) {
        Eigen::VectorXd v(21);
        double acc = u(rng);
        for (Eigen::Index j = 0; j < 21; ++j) {
            acc += u(rng);
            v[j] = acc;
        }
        qs.emplace_back(g, v);
        w.push_back(0.5 + u(rng));
    }
    const auto mean = weighted_frechet_mean(qs, w);
    double wsum = 0.0;
    Eigen::VectorXd manual = Eigen::VectorXd::Zero(21);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        manual += w[i] * qs[i].values();
        wsum += w[i];
    }
    manual /= wsum;
    CHECK((mean.values() - manual).cwiseAbs().maxCoeff() <= 1e-12);

    auto loss = [&](const Eigen::VectorXd& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const double d = l2_distance(g, qs[i].values(), c);
            s += w[i] * d * d;
        }
        return s;
    };
    const double at_mean = loss(mean.values());
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd p = mean.values();
        p[static_cast<Eigen::Index>(rng() % 21)] += (u(rng) - 0.5) * 0.1;
        CHECK(loss(p) >= at_mean);
    }
}

TEST_CASE("quantile CSV round-trips bit for bit")
{
    const ProbabilityGrid g(7);
    QuantileTable t{g, {"a", "b"}, Eigen::MatrixXd(2, 7)};
    for (Eigen::Index j = 0; j < 7; ++j) {
        t.values(0, j) = 0.1 * static_cast<double>(j) + 1.0 / 3.0;
        t.values(1, j) = std::exp(0.3 * static_cast<double>(j));
    }
    std::stringstream s;
    write_quantile_csv(s, t);
    CHECK(s.str().rfind("# grid: equidistant, m=7\nsubject_id,q_0,", 0) == 0);
    const auto back = read_quantile_csv(s, "mem");
    CHECK(back.ids == t.ids);
    CHECK(back.grid.size() == 7);
    CHECK((back.values.array() == t.values.array()).all());

    std::istringstream no_grid("subject_id,q_0\na,1\n");
    CHECK_THROWS_AS(read_quantile_csv(no_grid), InputError);
}

TEST_CASE("generalized inverse examples")
{
    const std::vector<double> three{1.0, 2.0, 3.0};
    CHECK(empirical_quantile_at(three, 0.5) == 2.0);
    CHECK(empirical_quantile(three, ProbabilityGrid(3))[1] == 2.0);
    const std::vector<double> lumpy{0.0, 0.0, 0.0, 10.0};
    const auto q = empirical_quantile(lumpy, ProbabilityGrid(5));
    for (std::size_t j : {0UL, 1UL, 3UL, 4UL}) {
        CHECK(q[j] == oracle::ecdf_inverse(lumpy, ProbabilityGrid(5)[j]));
    }
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 0.0);
    CHECK(q[3] == 0.0);
    CHECK(q[4] == 10.0);
}

TEST_CASE("Frechet mean does not depend on the scale of the weights")
{
    const ProbabilityGrid g(11);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    Eigen::MatrixXd rows(7, 11);
    std::vector<double> w(7);
    for (Eigen::Index i = 0; i < 7; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < 11; ++j) {
            acc += u(rng);
            rows(i, j) = acc;
        }
        w[static_cast<std::size_t>(i)] = u(rng);
    }
    const Eigen::VectorXd base = weighted_frechet_mean(rows, w);
    // Powers of two scale every partial sum exactly.
    for (double c : {0.25, 8.0}) {
        std::vector<double> scaled(w);
        for (auto& v : scaled) {
            v *= c;
        }
        CHECK((weighted_frechet_mean(rows, scaled).array() == base.array()).all());
    }
    std::vector<double> scaled(w);
    for (auto& v : scaled) {
        v *= 3.7;
    }
    CHECK((weighted_frechet_mean(rows, scaled) - base).cwiseAbs().maxCoeff() <= 1e-14 * base.cwiseAbs().maxCoeff());
}
