#pragma once

#include "plfsi/dataset.hpp"
#include "plfsi/errors.hpp"
#include "plfsi/optimizer.hpp"
#include "plfsi/quantile.hpp"
#include "plfsi/spline.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace plfsi {

/// Unit-norm index direction whose first nonzero component is positive.
class IndexParam {
public:
    /// Normalizes `theta` and flips its sign if needed. Throws on a zero vector.
    static IndexParam canonical(const Eigen::Ref<const Eigen::VectorXd>& theta);

    /// Stores `theta` as given after checking both invariants (norm within 1e-10).
    explicit IndexParam(Eigen::VectorXd theta);

    const Eigen::VectorXd& theta() const noexcept { return theta_; }
    Eigen::Index size() const noexcept { return theta_.size(); }

    /// theta^T x with a fixed left-to-right summation order.
    double index(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    IndexParam() = default;
    Eigen::VectorXd theta_;
};

/// Spherical coordinates -> direction. For p_x = 2, theta = (cos a, sin a);
/// in general theta_1 = prod cos(a_j), theta_p = sin(a_1). Angles must lie in
/// [-pi/2, pi/2].
IndexParam angles_to_theta(const Eigen::Ref<const Eigen::VectorXd>& angles);

/// Inverse of angles_to_theta for a direction with theta_1 >= 0.
Eigen::VectorXd theta_to_angles(const IndexParam& theta);

struct SplineSettings {
    int order = 4;
    int interior_knots = 5;
};

struct OptimizerSettings {
    int starts_per_dim = 4;
    int max_iterations = 200;
    double tolerance = 1e-8;
    double fd_step = 1e-6;
    std::size_t threads = 0; // 0 = hardware concurrency
};

struct FitConfig {
    SplineSettings spline;
    OptimizerSettings optimizer;
    double band_level = 0.95;
};

enum class ModelKind { plsi, global };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct StartDiagnostics {
    Eigen::VectorXd start_angles;
    Eigen::VectorXd final_angles;
    double start_objective = 0.0;
    double objective = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
};

/// Result of the profiled least-squares step at a fixed index direction.
struct ProfileResult {
    std::optional<SplineConfig> spline;
    Eigen::MatrixXd coefficients; // d x m, design-column order
    Eigen::MatrixXd raw_fitted;   // n x m, before monotone projection
    Eigen::MatrixXd fitted;       // n x m, projected
    double objective = 0.0;       // sum_i w_i int (Y_i - Yhat_i)^2
};

/// A fitted model. Coefficients are stored in design-column order:
///   plsi:   [intercept, z_1..z_pz, basis_2..basis_{K+s}]
///   global: [intercept, z_1..z_pz, x_1..x_px]
/// The first B-spline basis function is dropped from the plsi design because
/// the basis sums to one and would otherwise be collinear with the intercept;
/// its coefficient is identically zero.
struct ModelFit {
    static constexpr int kFormatVersion = 1;

    ModelKind kind = ModelKind::plsi;
    ProbabilityGrid grid;
    std::optional<IndexParam> theta;
    std::optional<SplineConfig> spline;
    Eigen::MatrixXd coefficients; // d x m
    Eigen::MatrixXd std_error;    // d x m, design-based standard errors
    std::vector<std::string> coefficient_names;
    double objective = 0.0;
    double weight_sum = 0.0;
    Eigen::Index n_obs = 0;
    std::vector<std::string> x_names;
    std::vector<std::string> z_names;
    Standardization x_standardization;
    Standardization z_standardization;
    FitConfig config;
    std::vector<StartDiagnostics> starts;

    Eigen::Index p_x() const noexcept { return static_cast<Eigen::Index>(x_names.size()); }
    Eigen::Index p_z() const noexcept { return static_cast<Eigen::Index>(z_names.size()); }

    Eigen::VectorXd alpha() const;
    /// p_z x m for plsi; (p_z + p_x) x m for global (z rows then x rows).
    Eigen::MatrixXd beta() const;
    /// (K+s) x m, first row zero. Empty for the global model.
    Eigen::MatrixXd gamma() const;

    /// Pointwise half-widths of confidence bands at `level`.
    Eigen::MatrixXd half_widths(double level) const;
};

/// Thrown when no start converged; carries the best fit found.
class OptimizerFailure : public NumericalError {
public:
    OptimizerFailure(const std::string& what, ModelFit best) : NumericalError(what), best_(std::move(best)) {}
    const ModelFit& best() const noexcept { return best_; }

private:
    ModelFit best_;
};

/// Design row for one subject, in the ModelFit coefficient order.
Eigen::VectorXd design_row(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

/// Fits the survey-weighted least squares problem at every grid point for a
/// fixed direction, then projects each subject's fitted curve monotone.
ProfileResult profile_fit(const IndexParam& theta, const Dataset& data, const SplineSettings& spline);

/// W_n(theta) = sum_i w_i int (Y_i - Yhat_i(theta))^2 dt (trapezoidal).
double objective(const IndexParam& theta, const Dataset& data, const SplineSettings& spline);

/// Partially linear single-index fit with multi-start angular search.
ModelFit fit_plsi(const Dataset& data, const FitConfig& config = {});

/// Global Frechet regression: all covariates linear, design [1, Z, X].
ModelFit fit_global(const Dataset& data, const FitConfig& config = {});

/// Pre-projection prediction Y*(t; z, x) on the grid (model-scale covariates).
Eigen::VectorXd predict_raw(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// Y* as a function of the index value u directly (plsi only).
Eigen::VectorXd predict_raw_at_index(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z, double u);

/// Projected prediction Yhat(t; z, x) (model-scale covariates).
QuantileFunction predict(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& x);

/// Projected predictions for every subject of a dataset, n x m.
Eigen::MatrixXd predict_dataset(const ModelFit& fit, const Dataset& data);

void write_model_fit(std::ostream& out, const ModelFit& fit);
ModelFit read_model_fit(std::istream& in, const std::string& source = "<stream>");

} // namespace plfsi
