#include "plfsi/survey_wls.hpp"

#include "plfsi/errors.hpp"

#include <cmath>
#include <map>

namespace plfsi {

WlsSolver::WlsSolver(Eigen::MatrixXd design, std::span<const double> weights, std::vector<std::string> column_names)
    : design_(std::move(design))
{
    const auto n = design_.rows();
    const auto d = design_.cols();
    if (static_cast<Eigen::Index>(weights.size()) != n) {
        throw InputError("weights length does not match design rows");
    }
    if (n < d) {
        throw NumericalError("fewer observations (" + std::to_string(n) + ") than design columns (" +
                             std::to_string(d) + ")");
    }
    weights_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw InputError("non-positive weight at row " + std::to_string(i));
        }
        weights_[i] = w;
    }
    sqrt_w_ = weights_.array().sqrt();

    const Eigen::MatrixXd scaled = sqrt_w_.asDiagonal() * design_;
    qr_.compute(scaled);
    qr_.setThreshold(1e-10);
    if (qr_.rank() < d) {
        std::string names;
        const auto& perm = qr_.colsPermutation().indices();
        for (Eigen::Index j = qr_.rank(); j < d; ++j) {
            const auto col = perm[j];
            if (!names.empty()) {
                names += ", ";
            }
            names += static_cast<std::size_t>(col) < column_names.size() ? column_names[static_cast<std::size_t>(col)]
                                                                         : "column " + std::to_string(col);
        }
        throw NumericalError("rank-deficient design (rank " + std::to_string(qr_.rank()) + " of " + std::to_string(d) +
                             "); collinear columns: " + names);
    }

    // (X^T W X)^{-1} = P R^{-1} R^{-T} P^T
    const Eigen::MatrixXd r = qr_.matrixR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
    const auto& p = qr_.colsPermutation();
    bread_ = p * inner * p.transpose();
}

Eigen::MatrixXd WlsSolver::solve(const Eigen::Ref<const Eigen::MatrixXd>& responses) const
{
    if (responses.rows() != rows()) {
        throw InputError("response rows do not match design rows");
    }
    const Eigen::MatrixXd scaled = sqrt_w_.asDiagonal() * responses;
    return qr_.solve(scaled);
}

Eigen::VectorXd fit_wls(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& response,
                        std::span<const double> weights)
{
    WlsSolver solver(design, weights);
    const Eigen::MatrixXd column = response;
    return solver.solve(column).col(0);
}

LinearizationVariance::LinearizationVariance(const SurveyDesign& survey, std::size_t n)
{
    if (survey.strata.size() != n || survey.psus.size() != n) {
        throw InputError("survey design labels do not match number of observations");
    }
    // Ordered maps make the summation order independent of input order only
    // through label ordering, which is deterministic.
    std::map<std::string, std::map<std::string, std::vector<Eigen::Index>>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        groups[survey.strata[i]][survey.psus[i]].push_back(static_cast<Eigen::Index>(i));
    }
    for (auto& [stratum, psus] : groups) {
        if (psus.size() < 2) {
            throw InputError("stratum '" + stratum +
                             "' has a single PSU; collapse it with a neighbouring stratum before variance estimation");
        }
        Stratum s;
        for (auto& [psu, members] : psus) {
            s.psus.push_back(std::move(members));
        }
        strata_.push_back(std::move(s));
    }
}

Eigen::MatrixXd LinearizationVariance::covariance(const WlsSolver& solver,
                                                  const Eigen::Ref<const Eigen::VectorXd>& residuals) const
{
    const auto& x = solver.design();
    const auto& w = solver.weights();
    const auto d = x.cols();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd totals;
    for (const auto& stratum : strata_) {
        const auto n_h = static_cast<Eigen::Index>(stratum.psus.size());
        totals.setZero(n_h, d);
        for (Eigen::Index k = 0; k < n_h; ++k) {
            for (const auto i : stratum.psus[static_cast<std::size_t>(k)]) {
                totals.row(k) += (w[i] * residuals[i]) * x.row(i);
            }
        }
        const Eigen::RowVectorXd mean = totals.colwise().mean();
        totals.rowwise() -= mean;
        meat += (static_cast<double>(n_h) / static_cast<double>(n_h - 1)) * (totals.transpose() * totals);
    }
    Eigen::MatrixXd cov = solver.bread() * meat * solver.bread();
    return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd design_variance(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                const Eigen::Ref<const Eigen::VectorXd>& response, std::span<const double> weights,
                                const SurveyDesign& survey, const Eigen::Ref<const Eigen::VectorXd>& coefficients)
{
    WlsSolver solver(design, weights);
    LinearizationVariance lin(survey, static_cast<std::size_t>(design.rows()));
    const Eigen::VectorXd residuals = response - design * coefficients;
    return lin.covariance(solver, residuals);
}

} // namespace plfsi
