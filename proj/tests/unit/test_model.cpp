#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "plfsi/metrics.hpp"
#include "plfsi/model.hpp"
#include "plfsi/survey_wls.hpp"
#include "plfsi/synthetic.hpp"

#include <numbers>
#include <random>
#include <sstream>

using namespace plfsi;

namespace {

SyntheticData sample(std::size_t n, const std::string& link, double noise, std::uint64_t seed)
{
    SyntheticConfig c;
    c.n = n;
    c.link = link;
    c.noise_sd = noise;
    c.seed = seed;
    c.weights = WeightScheme::random;
    return generate(c);
}

} // namespace

TEST_CASE("angle parameterization round-trips and stays on the sphere")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-std::numbers::pi / 2, std::numbers::pi / 2);
    for (int p = 2; p <= 5; ++p) {
        for (int k = 0; k < 50; ++k) {
            Eigen::VectorXd a(p - 1);
            for (auto& v : a) {
                v = u(rng);
            }
            const auto th = angles_to_theta(a);
            CHECK(th.theta().norm() == doctest::Approx(1.0).epsilon(1e-14));
            if (th.theta()[0] > 1e-6) {
                const auto back = theta_to_angles(th);
                CHECK((angles_to_theta(back).theta() - th.theta()).norm() <= 1e-12);
            }
        }
    }
    const auto t2 = angles_to_theta(Eigen::VectorXd::Constant(1, 0.3));
    CHECK(t2.theta()[0] == doctest::Approx(std::cos(0.3)));
    CHECK(t2.theta()[1] == doctest::Approx(std::sin(0.3)));
}

TEST_CASE("canonical direction: unit norm, first nonzero component positive")
{
    const auto a = IndexParam::canonical(Eigen::Vector2d(-3.0, 4.0));
    CHECK(a.theta()[0] == doctest::Approx(0.6));
    CHECK(a.theta()[1] == doctest::Approx(-0.8));
    const auto b = IndexParam::canonical(Eigen::Vector3d(0.0, -2.0, 0.0));
    CHECK(b.theta()[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(IndexParam::canonical(Eigen::Vector2d::Zero()), InputError);
    CHECK_THROWS_AS(IndexParam(Eigen::Vector2d(0.6, 0.7)), InputError);
    CHECK_THROWS_AS(IndexParam(Eigen::Vector2d(-0.6, 0.8)), InputError);
    CHECK(IndexParam(Eigen::Vector2d(0.6, 0.8)).index(Eigen::Vector2d(1.0, 2.0)) == doctest::Approx(2.2));
}

TEST_CASE("global model equals per-grid-point WLS and design standard errors")
{
    const auto sim = sample(120, "linear", 0.3, 3);
    const auto& d = sim.data;
    const auto fit = fit_global(d);
    CHECK(fit.coefficients.rows() == 1 + d.p_z() + d.p_x());
    Eigen::MatrixXd x(d.n(), 1 + d.p_z() + d.p_x());
    x << Eigen::VectorXd::Ones(d.n()), d.z, d.x;
    for (Eigen::Index t = 0; t < d.y.cols(); t += 10) {
        const Eigen::VectorXd b = fit_wls(x, d.y.col(t), d.weights);
        CHECK((fit.coefficients.col(t) - b).cwiseAbs().maxCoeff() <= 1e-10);
        const Eigen::MatrixXd v = design_variance(x, d.y.col(t), d.weights, d.survey, b);
        CHECK((fit.std_error.col(t) - v.diagonal().cwiseSqrt()).cwiseAbs().maxCoeff() <= 1e-10);
    }
    CHECK(fit.alpha().size() == static_cast<Eigen::Index>(d.grid.size()));
    CHECK(fit.beta().rows() == d.p_z() + d.p_x());
    CHECK(fit.gamma().size() == 0);
}

TEST_CASE("noiseless linear link is fitted exactly by both models")
{
    const auto sim = sample(80, "linear", 0.0, 4);
    for (const auto& fit : {fit_plsi(sim.data), fit_global(sim.data)}) {
        const auto m = compute_metrics(fit, sim.data);
        CHECK(m.r2 == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("single-index fit: shapes, projection, objective, predictions")
{
    const auto sim = sample(250, "sigmoid-ramp", 0.15, 5);
    const auto& d = sim.data;
    const auto fit = fit_plsi(d);
    REQUIRE(fit.theta);
    REQUIRE(fit.spline);
    CHECK(fit.theta->theta().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.theta->theta()[0] > 0.0);
    CHECK((fit.theta->theta() - sim.truth.config.theta0).norm() <= 0.1);
    CHECK(fit.coefficients.rows() == 1 + d.p_z() + fit.spline->basis_dim() - 1);
    const Eigen::MatrixXd g = fit.gamma();
    CHECK(g.rows() == fit.spline->basis_dim());
    CHECK(g.row(0).isZero(0.0));
    CHECK(fit.starts.size() == 4);

    const auto prof = profile_fit(*fit.theta, d, fit.config.spline);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        for (Eigen::Index t = 1; t < prof.fitted.cols(); ++t) {
            CHECK(prof.fitted(i, t) >= prof.fitted(i, t - 1));
        }
    }
    double wn = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double dist = l2_distance(d.grid, d.y.row(i).transpose(), prof.fitted.row(i).transpose());
        wn += d.weights[static_cast<std::size_t>(i)] * dist * dist;
    }
    CHECK(prof.objective == doctest::Approx(wn).epsilon(1e-10));
    CHECK(fit.objective == doctest::Approx(wn).epsilon(1e-10));

    // Training fitted values and predict() agree bit for bit.
    const Eigen::MatrixXd pred = predict_dataset(fit, d);
    CHECK((pred.array() == prof.fitted.array()).all());

    // Pre-projection prediction by index equals prediction by covariates.
    const Eigen::VectorXd x0 = d.x.row(0).transpose();
    const Eigen::VectorXd z0 = d.z.row(0).transpose();
    CHECK((predict_raw(fit, z0, x0) - predict_raw_at_index(fit, z0, fit.theta->index(x0))).norm() <= 1e-12);

    // The fitted direction is no worse than the truth for the profiled criterion.
    CHECK(fit.objective <= objective(IndexParam(sim.truth.config.theta0), d, fit.config.spline) * (1 + 1e-9));
}

TEST_CASE("results do not depend on the thread count")
{
    const auto sim = sample(150, "sigmoid-ramp", 0.2, 6);
    FitConfig one;
    one.optimizer.threads = 1;
    FitConfig many;
    many.optimizer.threads = 4;
    const auto a = fit_plsi(sim.data, one);
    const auto b = fit_plsi(sim.data, many);
    CHECK((a.theta->theta().array() == b.theta->theta().array()).all());
    CHECK((a.coefficients.array() == b.coefficients.array()).all());
    CHECK(a.objective == b.objective);
}

TEST_CASE("one index covariate needs no search")
{
    SyntheticConfig c;
    c.n = 100;
    c.theta0 = Eigen::VectorXd::Ones(1);
    c.noise_sd = 0.1;
    const auto sim = generate(c);
    const auto fit = fit_plsi(sim.data);
    CHECK(fit.theta->theta()[0] == 1.0);
    CHECK(fit.starts.empty());
}

TEST_CASE("model file round trip preserves predictions exactly")
{
    const auto sim = sample(120, "sigmoid-ramp", 0.2, 7);
    const auto fit = fit_plsi(sim.data);
    std::stringstream s;
    write_model_fit(s, fit);
    const auto back = read_model_fit(s, "mem");
    CHECK(back.kind == fit.kind);
    CHECK((back.theta->theta().array() == fit.theta->theta().array()).all());
    CHECK((back.coefficients.array() == fit.coefficients.array()).all());
    CHECK((back.std_error.array() == fit.std_error.array()).all());
    CHECK((predict_dataset(back, sim.data).array() == predict_dataset(fit, sim.data).array()).all());
    CHECK(back.starts.size() == fit.starts.size());

    std::istringstream broken("{\"format_version\": 1}");
    CHECK_THROWS_AS(read_model_fit(broken), InputError);
}

TEST_CASE("optimizer failure carries the best fit")
{
    const auto sim = sample(120, "sigmoid-ramp", 0.2, 8);
    FitConfig c;
    c.optimizer.max_iterations = 1;
    c.optimizer.tolerance = 1e-300;
    try {
        fit_plsi(sim.data, c);
        FAIL("expected OptimizerFailure");
    } catch (const OptimizerFailure& e) {
        CHECK(std::isfinite(e.best().objective));
        CHECK(e.best().theta.has_value());
    }
}

TEST_CASE("input errors")
{
    const auto sim = sample(11, "linear", 0.1, 9);
    CHECK_THROWS_AS(fit_plsi(sim.data), InputError); // n too small for the spline design

    auto dup = sample(60, "linear", 0.1, 10).data;
    dup.z.conservativeResize(Eigen::NoChange, 2);
    dup.z.col(1) = dup.z.col(0);
    dup.z_names.push_back("copy");
    CHECK_THROWS_AS(fit_global(dup), NumericalError);
    CHECK_THROWS_AS(model_kind_from_string("lasso"), InputError);
}

TEST_CASE("noiseless linear data are reproduced uniformly")
{
    const auto sim = sample(500, "linear", 0.0, 11);
    const auto fit = fit_plsi(sim.data);
    CHECK((predict_dataset(fit, sim.data) - sim.data.y).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("on linear data both models explain the same share")
{
    const auto sim = sample(400, "linear", 0.3, 12);
    const double a = compute_metrics(fit_plsi(sim.data), sim.data).r2;
    const double b = compute_metrics(fit_global(sim.data), sim.data).r2;
    CHECK(std::abs(a - b) <= 0.02);
}

TEST_CASE("projection moves each prediction no further than the observed response")
{
    const auto sim = sample(200, "sine", 0.4, 13);
    const auto fit = fit_plsi(sim.data);
    const auto& d = sim.data;
    const Eigen::MatrixXd projected = predict_dataset(fit, d);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const Eigen::VectorXd raw = predict_raw(fit, d.z.row(i).transpose(), d.x.row(i).transpose());
        const double to_projection = l2_distance(d.grid, projected.row(i).transpose(), raw);
        const double to_response = l2_distance(d.grid, d.y.row(i).transpose(), raw);
        CHECK(to_projection <= to_response + 1e-12);
    }
}

TEST_CASE("extreme covariates are clamped to the spline range")
{
    const auto sim = sample(150, "sigmoid-ramp", 0.2, 14);
    const auto fit = fit_plsi(sim.data);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(fit.p_z());
    const Eigen::Vector2d far(1e6, 1e6);
    const auto q = predict(fit, z, far);
    CHECK(q.values().allFinite());
    const Eigen::VectorXd at_edge = predict_raw_at_index(fit, z, fit.spline->upper());
    CHECK((predict_raw(fit, z, far) - at_edge).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((predict_raw(fit, z, -far) - predict_raw_at_index(fit, z, fit.spline->lower())).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("the fitted direction does not depend on the scale of the weights")
{
    auto sim = sample(200, "sigmoid-ramp", 0.2, 15);
    const auto a = fit_plsi(sim.data);
    for (auto& w : sim.data.weights) {
        w *= 7.3;
    }
    const auto b = fit_plsi(sim.data);
    CHECK((a.theta->theta() - b.theta->theta()).norm() <= 1e-4);
}

TEST_CASE("the selected fit is no worse than any start")
{
    const auto sim = sample(200, "sine", 0.3, 16);
    const auto fit = fit_plsi(sim.data);
    REQUIRE(fit.starts.size() == 4);
    for (const auto& s : fit.starts) {
        const double at_start = objective(angles_to_theta(s.start_angles), sim.data, fit.config.spline);
        CHECK(s.start_objective == doctest::Approx(at_start).epsilon(1e-12));
        CHECK(fit.objective <= at_start);
        CHECK(fit.objective <= s.objective);
        CHECK(s.objective <= s.start_objective);
    }
    // starts are the cell centres of [-pi/2, pi/2]
    std::vector<double> angles;
    for (const auto& s : fit.starts) {
        angles.push_back(s.start_angles[0]);
    }
    std::sort(angles.begin(), angles.end());
    for (int k = 0; k < 4; ++k) {
        CHECK(angles[static_cast<std::size_t>(k)] == doctest::Approx(-std::numbers::pi / 2 + (k + 0.5) * std::numbers::pi / 4));
    }
}
