#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace plfsi {

/// Coefficients and design-based covariance at a single grid point.
struct WlsFit {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    double t = 0.0;
};

/// Weighted least squares solver for a fixed design and weights, reusable
/// across many response vectors (one per probability grid point).
///
/// The system sqrt(W) X b = sqrt(W) y is factored once with a column-pivoting
/// Householder QR. Construction throws NumericalError if the design is rank
/// deficient, naming the columns that are linear combinations of others.
class WlsSolver {
public:
    WlsSolver(Eigen::MatrixXd design, std::span<const double> weights,
              std::vector<std::string> column_names = {});

    Eigen::Index rows() const noexcept { return design_.rows(); }
    Eigen::Index cols() const noexcept { return design_.cols(); }
    const Eigen::MatrixXd& design() const noexcept { return design_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    /// Solves for every column of `responses` (n x m); returns d x m.
    Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& responses) const;

    /// (X^T W X)^{-1}, computed from the R factor.
    const Eigen::MatrixXd& bread() const noexcept { return bread_; }

private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd sqrt_w_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    Eigen::MatrixXd bread_;
};

/// Minimizes sum_i w_i (y_i - x_i^T b)^2.
Eigen::VectorXd fit_wls(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& response,
                        std::span<const double> weights);

/// Survey design labels per observation.
struct SurveyDesign {
    std::vector<std::string> strata;
    std::vector<std::string> psus; // PSU labels are nested within strata
};

/// Taylor-linearization (sandwich) covariance of WLS coefficients:
/// bread * meat * bread, with the meat the with-replacement between-PSU
/// covariance of weighted score totals w_i x_i r_i within strata, scaled by
/// n_h/(n_h - 1). Throws InputError for a stratum with a single PSU.
Eigen::MatrixXd design_variance(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                const Eigen::Ref<const Eigen::VectorXd>& response, std::span<const double> weights,
                                const SurveyDesign& survey, const Eigen::Ref<const Eigen::VectorXd>& coefficients);

/// Precomputed PSU membership for repeated variance evaluations.
class LinearizationVariance {
public:
    LinearizationVariance(const SurveyDesign& survey, std::size_t n);

    /// Covariance for residual vector r given a factored solver.
    Eigen::MatrixXd covariance(const WlsSolver& solver, const Eigen::Ref<const Eigen::VectorXd>& residuals) const;

private:
    struct Stratum {
        std::vector<std::vector<Eigen::Index>> psus;
    };
    std::vector<Stratum> strata_;
};

} // namespace plfsi
