#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plfsi/optimizer.hpp"

#include <cmath>

using namespace plfsi;

TEST_CASE("unconstrained quadratic")
{
    const Objective f = [](const Eigen::VectorXd& x) {
        return (x[0] - 0.3) * (x[0] - 0.3) + 4.0 * (x[1] + 0.2) * (x[1] + 0.2) + x[0] * x[1];
    };
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.5);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.5);
    const auto r = minimize_box(f, Eigen::Vector2d(1.0, 1.0), lo, hi);
    CHECK(r.converged);
    // Stationary point of the quadratic: 2(x0 - .3) + x1 = 0, 8(x1 + .2) + x0 = 0.
    Eigen::Matrix2d a;
    a << 2, 1, 1, 8;
    const Eigen::Vector2d want = a.inverse() * Eigen::Vector2d(0.6, -1.6);
    CHECK((r.x - want).norm() <= 1e-4);
}

TEST_CASE("active bound")
{
    const Objective f = [](const Eigen::VectorXd& x) { return (x[0] - 3.0) * (x[0] - 3.0); };
    const auto r = minimize_box(f, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, -1.0),
                                Eigen::VectorXd::Constant(1, 1.0));
    CHECK(r.converged);
    CHECK(r.x[0] == 1.0);
}

TEST_CASE("Rosenbrock inside a box")
{
    const Objective f = [](const Eigen::VectorXd& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    BoxOptions o;
    o.max_iterations = 500;
    o.tolerance = 1e-14;
    const auto r = minimize_box(f, Eigen::Vector2d(-1.2, 1.0), Eigen::VectorXd::Constant(2, -2.0),
                                Eigen::VectorXd::Constant(2, 2.0), o);
    CHECK((r.x - Eigen::Vector2d(1.0, 1.0)).norm() <= 1e-3);
}

TEST_CASE("iterates stay feasible and the value never increases")
{
    int calls = 0;
    const Objective f = [&](const Eigen::VectorXd& x) {
        ++calls;
        return std::sin(3.0 * x[0]) + 0.1 * x[0] * x[0];
    };
    const auto r = minimize_box(f, Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, -1.0),
                                Eigen::VectorXd::Constant(1, 1.0));
    CHECK(r.x[0] >= -1.0);
    CHECK(r.x[0] <= 1.0);
    CHECK(r.value <= f(Eigen::VectorXd::Constant(1, 0.4)));
    CHECK(r.evaluations > 0);
}

TEST_CASE("deterministic")
{
    const Objective f = [](const Eigen::VectorXd& x) { return std::cos(x[0]) * std::sin(x[1]) + 0.05 * x.squaredNorm(); };
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.5);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.5);
    const auto a = minimize_box(f, Eigen::Vector2d(0.2, 0.1), lo, hi);
    const auto b = minimize_box(f, Eigen::Vector2d(0.2, 0.1), lo, hi);
    CHECK((a.x.array() == b.x.array()).all());
    CHECK(a.value == b.value);
}

TEST_CASE("infinite objective regions are avoided")
{
    const Objective f = [](const Eigen::VectorXd& x) {
        if (x[0] > 0.5) {
            return std::numeric_limits<double>::infinity();
        }
        return (x[0] - 1.0) * (x[0] - 1.0);
    };
    const auto r = minimize_box(f, Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, -1.0),
                                Eigen::VectorXd::Constant(1, 1.0));
    CHECK(std::isfinite(r.value));
    CHECK(r.x[0] <= 0.5);
}
