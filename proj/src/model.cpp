#include "plfsi/model.hpp"

#include "plfsi/isotonic.hpp"
#include "plfsi/parallel.hpp"
#include "plfsi/survey_wls.hpp"

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

namespace plfsi {

using nlohmann::json;

// ---------------------------------------------------------------- IndexParam

IndexParam::IndexParam(Eigen::VectorXd theta) : theta_(std::move(theta))
{
    if (theta_.size() == 0 || !theta_.allFinite()) {
        throw InputError("index parameter must be a finite nonempty vector");
    }
    if (std::abs(theta_.norm() - 1.0) > 1e-10) {
        throw InputError("index parameter must have unit norm");
    }
    for (Eigen::Index j = 0; j < theta_.size(); ++j) {
        if (theta_[j] != 0.0) {
            if (theta_[j] < 0.0) {
                throw InputError("first nonzero component of the index parameter must be positive");
            }
            break;
        }
    }
}

IndexParam IndexParam::canonical(const Eigen::Ref<const Eigen::VectorXd>& theta)
{
    const double norm = theta.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw InputError("index parameter must be a finite nonzero vector");
    }
    Eigen::VectorXd t = theta / norm;
    // Components at rounding level of zero (e.g. cos(pi/2)) do not decide the sign.
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        if (std::abs(t[j]) > 1e-12) {
            if (t[j] < 0.0) {
                t = -t;
            }
            break;
        }
    }
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        if (std::abs(t[j]) <= 1e-12) {
            t[j] = 0.0;
        } else {
            break;
        }
    }
    IndexParam p;
    p.theta_ = t / t.norm();
    return p;
}

double IndexParam::index(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (x.size() != theta_.size()) {
        throw InputError("index covariate length " + std::to_string(x.size()) + " does not match parameter length " +
                         std::to_string(theta_.size()));
    }
    double u = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        u += theta_[j] * x[j];
    }
    return u;
}

IndexParam angles_to_theta(const Eigen::Ref<const Eigen::VectorXd>& angles)
{
    const auto q = angles.size();
    for (Eigen::Index j = 0; j < q; ++j) {
        if (!(std::abs(angles[j]) <= std::numbers::pi / 2 + 1e-12)) {
            throw InputError("angle " + std::to_string(angles[j]) + " outside [-pi/2, pi/2]");
        }
    }
    const auto p = q + 1;
    Eigen::VectorXd theta(p);
    // theta_k (1-based, k >= 2) = prod_{j=1}^{p-k} cos(a_j) * sin(a_{p-k+1}); theta_1 = prod cos.
    for (Eigen::Index k = 1; k <= p; ++k) {
        double v = 1.0;
        const Eigen::Index n_cos = (k == 1) ? q : p - k;
        for (Eigen::Index j = 0; j < n_cos; ++j) {
            v *= std::cos(angles[j]);
        }
        if (k >= 2) {
            v *= std::sin(angles[p - k]);
        }
        theta[k - 1] = v;
    }
    return IndexParam::canonical(theta);
}

Eigen::VectorXd theta_to_angles(const IndexParam& param)
{
    const auto& theta = param.theta();
    const auto p = theta.size();
    Eigen::VectorXd angles(p - 1);
    double r = std::abs(theta[0]);
    for (Eigen::Index k = 2; k <= p; ++k) {
        angles[p - k] = std::atan2(theta[k - 1], r);
        r = std::hypot(r, theta[k - 1]);
    }
    return angles;
}

std::string to_string(ModelKind kind)
{
    return kind == ModelKind::plsi ? "plsi" : "global";
}

ModelKind model_kind_from_string(const std::string& s)
{
    if (s == "plsi") {
        return ModelKind::plsi;
    }
    if (s == "global") {
        return ModelKind::global;
    }
    throw InputError("unknown model '" + s + "' (expected plsi or global)");
}

// ------------------------------------------------------------------ ModelFit

Eigen::VectorXd ModelFit::alpha() const
{
    return coefficients.row(0).transpose();
}

Eigen::MatrixXd ModelFit::beta() const
{
    const Eigen::Index rows = kind == ModelKind::plsi ? p_z() : p_z() + p_x();
    return coefficients.middleRows(1, rows);
}

Eigen::MatrixXd ModelFit::gamma() const
{
    if (kind != ModelKind::plsi || !spline) {
        return {};
    }
    const Eigen::Index dim = spline->basis_dim();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, coefficients.cols());
    g.bottomRows(dim - 1) = coefficients.bottomRows(dim - 1);
    return g;
}

Eigen::MatrixXd ModelFit::half_widths(double level) const
{
    if (!(level > 0.0 && level < 1.0)) {
        throw InputError("confidence level must lie in (0, 1)");
    }
    const boost::math::normal_distribution<double> normal;
    const double z = boost::math::quantile(normal, 0.5 + level / 2.0);
    return z * std_error;
}

// ------------------------------------------------------------ design helpers

namespace {

// Y*(t) = sum_j row_j C(j, t), summed in a fixed order so that training-set
// fitted values and predict() agree bit for bit.
void combine(const Eigen::MatrixXd& coefs, const double* row, double* out)
{
    const auto d = coefs.rows();
    for (Eigen::Index t = 0; t < coefs.cols(); ++t) {
        const double* c = coefs.data() + t * d;
        double s = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            s += row[j] * c[j];
        }
        out[t] = s;
    }
}

void fill_plsi_row(const SplineConfig& spline, double u, const Eigen::Ref<const Eigen::VectorXd>& z, double* row,
                   std::vector<double>& basis)
{
    basis.resize(static_cast<std::size_t>(spline.basis_dim()));
    spline.eval_into(u, basis);
    row[0] = 1.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        row[1 + j] = z[j];
    }
    for (std::size_t k = 1; k < basis.size(); ++k) {
        row[1 + z.size() + static_cast<Eigen::Index>(k) - 1] = basis[k];
    }
}

void fill_global_row(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& x, double* row)
{
    row[0] = 1.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        row[1 + j] = z[j];
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        row[1 + z.size() + j] = x[j];
    }
}

std::vector<std::string> plsi_names(const Dataset& data, int basis_dim)
{
    std::vector<std::string> names{"intercept"};
    names.insert(names.end(), data.z_names.begin(), data.z_names.end());
    for (int k = 2; k <= basis_dim; ++k) {
        names.push_back("basis_" + std::to_string(k));
    }
    return names;
}

std::vector<std::string> global_names(const Dataset& data)
{
    std::vector<std::string> names{"intercept"};
    names.insert(names.end(), data.z_names.begin(), data.z_names.end());
    names.insert(names.end(), data.x_names.begin(), data.x_names.end());
    return names;
}

// Projects rows monotone under the trapezoidal L2 norm and returns the
// weighted integrated squared error against the observed responses.
double project_and_score(const Dataset& data, const Eigen::MatrixXd& raw, Eigen::MatrixXd& fitted)
{
    const auto& trap = data.grid.trapezoid_weights();
    const std::span<const double> trap_span(trap.data(), static_cast<std::size_t>(trap.size()));
    const auto m = raw.cols();
    fitted.resize(raw.rows(), m);
    std::vector<double> row(static_cast<std::size_t>(m));
    double total = 0.0;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (Eigen::Index t = 0; t < m; ++t) {
            row[static_cast<std::size_t>(t)] = raw(i, t);
        }
        project_monotone_inplace(row, trap_span);
        double ise = 0.0;
        for (Eigen::Index t = 0; t < m; ++t) {
            fitted(i, t) = row[static_cast<std::size_t>(t)];
            const double e = data.y(i, t) - row[static_cast<std::size_t>(t)];
            ise += trap[t] * e * e;
        }
        total += data.weights[static_cast<std::size_t>(i)] * ise;
    }
    return total;
}

Eigen::MatrixXd raw_from_design(const Eigen::MatrixXd& design, const Eigen::MatrixXd& coefs)
{
    const Eigen::MatrixXd design_rows = design.transpose(); // column i = design row i, contiguous
    Eigen::MatrixXd raw(coefs.cols(), design.rows());       // column i = fitted curve of subject i
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        combine(coefs, design_rows.col(i).data(), raw.col(i).data());
    }
    return raw.transpose();
}

struct Assembled {
    Eigen::MatrixXd design;
    std::optional<SplineConfig> spline;
    std::vector<std::string> names;
};

Assembled plsi_design(const IndexParam& theta, const Dataset& data, const SplineSettings& settings)
{
    const auto n = data.n();
    std::vector<double> u(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        u[static_cast<std::size_t>(i)] = theta.index(data.x.row(i).transpose());
    }
    SplineConfig spline = make_knots(u, settings.interior_knots, settings.order);
    const Eigen::Index d = 1 + data.p_z() + spline.basis_dim() - 1;
    Eigen::MatrixXd rows(d, n); // column-per-subject while filling
    std::vector<double> basis;
    for (Eigen::Index i = 0; i < n; ++i) {
        fill_plsi_row(spline, u[static_cast<std::size_t>(i)], data.z.row(i).transpose(), rows.col(i).data(), basis);
    }
    auto names = plsi_names(data, spline.basis_dim());
    return {rows.transpose(), std::move(spline), std::move(names)};
}

Assembled global_design(const Dataset& data)
{
    const auto n = data.n();
    const Eigen::Index d = 1 + data.p_z() + data.p_x();
    Eigen::MatrixXd rows(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        fill_global_row(data.z.row(i).transpose(), data.x.row(i).transpose(), rows.col(i).data());
    }
    return {rows.transpose(), std::nullopt, global_names(data)};
}

void check_plsi_size(const Dataset& data, const SplineSettings& s)
{
    if (data.n() <= data.p_z() + s.interior_knots + s.order + 1) {
        throw InputError("need more than p_z + K + s + 1 = " +
                         std::to_string(data.p_z() + s.interior_knots + s.order + 1) + " subjects, have " +
                         std::to_string(data.n()));
    }
    if (data.p_x() < 1) {
        throw InputError("single-index model needs at least one index covariate");
    }
}

// Fits coefficients, projections and standard errors for a fixed design.
ModelFit finish_fit(ModelKind kind, const Dataset& data, const FitConfig& config, Assembled assembled,
                    std::optional<IndexParam> theta)
{
    WlsSolver solver(assembled.design, data.weights, assembled.names);
    const Eigen::MatrixXd coefs = solver.solve(data.y);
    const Eigen::MatrixXd raw = raw_from_design(assembled.design, coefs);
    Eigen::MatrixXd fitted;
    const double wn = project_and_score(data, raw, fitted);

    LinearizationVariance lin(data.survey, static_cast<std::size_t>(data.n()));
    const auto m = coefs.cols();
    Eigen::MatrixXd se(coefs.rows(), m);
    for (Eigen::Index t = 0; t < m; ++t) {
        const Eigen::VectorXd resid = data.y.col(t) - raw.col(t);
        const Eigen::MatrixXd cov = lin.covariance(solver, resid);
        se.col(t) = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    }

    ModelFit fit;
    fit.kind = kind;
    fit.grid = data.grid;
    fit.theta = std::move(theta);
    fit.spline = std::move(assembled.spline);
    fit.coefficients = coefs;
    fit.std_error = se;
    fit.coefficient_names = std::move(assembled.names);
    fit.objective = wn;
    fit.weight_sum = 0.0;
    for (double w : data.weights) {
        fit.weight_sum += w;
    }
    fit.n_obs = data.n();
    fit.x_names = data.x_names;
    fit.z_names = data.z_names;
    fit.x_standardization = data.x_standardization;
    fit.z_standardization = data.z_standardization;
    fit.config = config;
    return fit;
}

} // namespace

Eigen::VectorXd design_row(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z,
                           const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (z.size() != fit.p_z() || x.size() != fit.p_x()) {
        throw InputError("covariate dimensions (" + std::to_string(z.size()) + ", " + std::to_string(x.size()) +
                         ") do not match the fit (" + std::to_string(fit.p_z()) + ", " + std::to_string(fit.p_x()) + ")");
    }
    Eigen::VectorXd row(fit.coefficients.rows());
    if (fit.kind == ModelKind::plsi) {
        std::vector<double> basis;
        fill_plsi_row(*fit.spline, fit.theta->index(x), z, row.data(), basis);
    } else {
        fill_global_row(z, x, row.data());
    }
    return row;
}

ProfileResult profile_fit(const IndexParam& theta, const Dataset& data, const SplineSettings& spline)
{
    check_plsi_size(data, spline);
    if (theta.size() != data.p_x()) {
        throw InputError("index parameter length does not match index covariates");
    }
    auto assembled = plsi_design(theta, data, spline);
    WlsSolver solver(assembled.design, data.weights, assembled.names);
    ProfileResult res;
    res.coefficients = solver.solve(data.y);
    res.raw_fitted = raw_from_design(assembled.design, res.coefficients);
    res.objective = project_and_score(data, res.raw_fitted, res.fitted);
    res.spline = std::move(assembled.spline);
    return res;
}

double objective(const IndexParam& theta, const Dataset& data, const SplineSettings& spline)
{
    return profile_fit(theta, data, spline).objective;
}

ModelFit fit_global(const Dataset& data, const FitConfig& config)
{
    data.validate();
    return finish_fit(ModelKind::global, data, config, global_design(data), std::nullopt);
}

ModelFit fit_plsi(const Dataset& data, const FitConfig& config)
{
    data.validate();
    check_plsi_size(data, config.spline);
    const auto px = data.p_x();
    if (px == 1) {
        IndexParam theta = IndexParam::canonical(Eigen::VectorXd::Ones(1));
        return finish_fit(ModelKind::plsi, data, config, plsi_design(theta, data, config.spline), theta);
    }

    const auto& opt = config.optimizer;
    if (opt.starts_per_dim < 1) {
        throw InputError("starts_per_dim must be at least 1");
    }
    const Eigen::Index q = px - 1;
    // Cell-centred lattice of starts_per_dim^q angle vectors in (-pi/2, pi/2)^q,
    // enumerated in lexicographic order.
    std::size_t n_starts = 1;
    for (Eigen::Index j = 0; j < q; ++j) {
        n_starts *= static_cast<std::size_t>(opt.starts_per_dim);
    }
    const double half_pi = std::numbers::pi / 2;
    const double cell = std::numbers::pi / opt.starts_per_dim;
    std::vector<Eigen::VectorXd> starts(n_starts, Eigen::VectorXd(q));
    for (std::size_t s = 0; s < n_starts; ++s) {
        std::size_t rem = s;
        for (Eigen::Index j = q - 1; j >= 0; --j) {
            const auto k = rem % static_cast<std::size_t>(opt.starts_per_dim);
            rem /= static_cast<std::size_t>(opt.starts_per_dim);
            starts[s][j] = -half_pi + (static_cast<double>(k) + 0.5) * cell;
        }
    }

    const Objective f = [&](const Eigen::VectorXd& angles) {
        try {
            return objective(angles_to_theta(angles), data, config.spline);
        } catch (const std::runtime_error&) {
            // Directions where the design degenerates are infeasible.
            return std::numeric_limits<double>::infinity();
        }
    };
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(q, -half_pi);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(q, half_pi);
    BoxOptions box;
    box.max_iterations = opt.max_iterations;
    box.tolerance = opt.tolerance;
    box.fd_step = opt.fd_step;

    std::vector<StartDiagnostics> diags(n_starts);
    parallel_for(n_starts, opt.threads, [&](std::size_t s) {
        auto& dg = diags[s];
        dg.start_angles = starts[s];
        dg.start_objective = f(starts[s]);
        if (!std::isfinite(dg.start_objective)) {
            dg.final_angles = starts[s];
            dg.objective = dg.start_objective;
            dg.message = "objective undefined at start";
            return;
        }
        const auto r = minimize_box(f, starts[s], lower, upper, box);
        dg.final_angles = r.x;
        dg.objective = r.value;
        dg.iterations = r.iterations;
        dg.evaluations = r.evaluations;
        dg.converged = r.converged;
        dg.message = r.message;
    });

    // Smallest objective wins; near-ties go to the lexicographically smaller angles.
    std::size_t best = n_starts;
    for (std::size_t s = 0; s < n_starts; ++s) {
        if (!std::isfinite(diags[s].objective)) {
            continue;
        }
        if (best == n_starts) {
            best = s;
            continue;
        }
        const double a = diags[s].objective;
        const double b = diags[best].objective;
        const double tol = 1e-10 * std::max({1.0, std::abs(a), std::abs(b)});
        if (a < b - tol) {
            best = s;
        } else if (std::abs(a - b) <= tol &&
                   std::lexicographical_compare(diags[s].final_angles.begin(), diags[s].final_angles.end(),
                                                diags[best].final_angles.begin(), diags[best].final_angles.end())) {
            best = s;
        }
    }
    if (best == n_starts) {
        throw NumericalError("objective undefined at every start (degenerate index covariates?)");
    }

    IndexParam theta = angles_to_theta(diags[best].final_angles);
    ModelFit fit = finish_fit(ModelKind::plsi, data, config, plsi_design(theta, data, config.spline), theta);
    fit.starts = std::move(diags);

    const bool any_converged =
        std::any_of(fit.starts.begin(), fit.starts.end(), [](const StartDiagnostics& d) { return d.converged; });
    if (!any_converged) {
        throw OptimizerFailure("optimizer did not converge from any of " + std::to_string(n_starts) +
                                   " starts; best objective " + std::to_string(fit.objective),
                               fit);
    }
    return fit;
}

Eigen::VectorXd predict_raw(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z,
                            const Eigen::Ref<const Eigen::VectorXd>& x)
{
    const Eigen::VectorXd row = design_row(fit, z, x);
    Eigen::VectorXd out(fit.coefficients.cols());
    combine(fit.coefficients, row.data(), out.data());
    return out;
}

Eigen::VectorXd predict_raw_at_index(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z, double u)
{
    if (fit.kind != ModelKind::plsi) {
        throw InputError("index-based prediction requires a single-index fit");
    }
    if (z.size() != fit.p_z()) {
        throw InputError("linear covariate dimension does not match the fit");
    }
    Eigen::VectorXd row(fit.coefficients.rows());
    std::vector<double> basis;
    fill_plsi_row(*fit.spline, u, z, row.data(), basis);
    Eigen::VectorXd out(fit.coefficients.cols());
    combine(fit.coefficients, row.data(), out.data());
    return out;
}

QuantileFunction predict(const ModelFit& fit, const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& x)
{
    Eigen::VectorXd raw = predict_raw(fit, z, x);
    const auto& trap = fit.grid.trapezoid_weights();
    project_monotone_inplace(std::span<double>(raw.data(), static_cast<std::size_t>(raw.size())),
                             std::span<const double>(trap.data(), static_cast<std::size_t>(trap.size())));
    return QuantileFunction(fit.grid, std::move(raw));
}

Eigen::MatrixXd predict_dataset(const ModelFit& fit, const Dataset& data)
{
    if (data.p_x() != fit.p_x() || data.p_z() != fit.p_z() || !(data.grid == fit.grid)) {
        throw InputError("dataset is not compatible with the fit");
    }
    Eigen::MatrixXd out(data.n(), static_cast<Eigen::Index>(data.grid.size()));
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out.row(i) = predict(fit, data.z.row(i).transpose(), data.x.row(i).transpose()).values().transpose();
    }
    return out;
}

// ------------------------------------------------------------- serialization

namespace {

json matrix_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r[static_cast<std::size_t>(j)] = m(i, j);
        }
        rows.push_back(r);
    }
    return rows;
}

Eigen::MatrixXd matrix_from(const json& j)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& r = j[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(r.size()) != cols) {
            throw InputError("ragged matrix in model file");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

std::vector<double> vec(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

void write_model_fit(std::ostream& out, const ModelFit& fit)
{
    json j;
    j["format"] = "plfsi-model";
    j["format_version"] = ModelFit::kFormatVersion;
    j["model"] = to_string(fit.kind);
    j["grid"] = {{"type", "equidistant"}, {"m", fit.grid.size()}};
    j["theta"] = fit.theta ? json(vec(fit.theta->theta())) : json(nullptr);
    if (fit.spline) {
        j["spline"] = {{"order", fit.spline->order()},
                       {"lower", fit.spline->lower()},
                       {"upper", fit.spline->upper()},
                       {"interior_knots", fit.spline->interior_knots()},
                       {"knots", fit.spline->knots()}};
    } else {
        j["spline"] = nullptr;
    }
    j["x_columns"] = fit.x_names;
    j["z_columns"] = fit.z_names;
    j["coefficient_names"] = fit.coefficient_names;
    j["coefficients"] = matrix_json(fit.coefficients);
    j["std_error"] = matrix_json(fit.std_error);
    j["objective"] = fit.objective;
    j["objective_normalized"] = fit.weight_sum > 0 ? fit.objective / fit.weight_sum : 0.0;
    j["weight_sum"] = fit.weight_sum;
    j["n"] = fit.n_obs;
    j["standardization"] = {{"x", {{"center", fit.x_standardization.center}, {"scale", fit.x_standardization.scale}}},
                            {"z", {{"center", fit.z_standardization.center}, {"scale", fit.z_standardization.scale}}}};
    j["config"] = {{"spline", {{"order", fit.config.spline.order}, {"interior_knots", fit.config.spline.interior_knots}}},
                   {"optimizer",
                    {{"starts_per_dim", fit.config.optimizer.starts_per_dim},
                     {"max_iterations", fit.config.optimizer.max_iterations},
                     {"tolerance", fit.config.optimizer.tolerance},
                     {"fd_step", fit.config.optimizer.fd_step}}},
                   {"band_level", fit.config.band_level}};
    json starts = json::array();
    for (const auto& s : fit.starts) {
        starts.push_back({{"start_angles", vec(s.start_angles)},
                          {"final_angles", vec(s.final_angles)},
                          {"start_objective", s.start_objective},
                          {"objective", s.objective},
                          {"iterations", s.iterations},
                          {"evaluations", s.evaluations},
                          {"converged", s.converged},
                          {"message", s.message}});
    }
    j["starts"] = starts;
    out << j.dump(1) << '\n';
}

ModelFit read_model_fit(std::istream& in, const std::string& source)
{
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(source + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != ModelFit::kFormatVersion) {
            throw InputError(source + ": unsupported model format version");
        }
        ModelFit fit;
        fit.kind = model_kind_from_string(j.at("model").get<std::string>());
        fit.grid = ProbabilityGrid(j.at("grid").at("m").get<std::size_t>());
        if (!j.at("theta").is_null()) {
            fit.theta = IndexParam(to_eigen(j["theta"].get<std::vector<double>>()));
        }
        if (!j.at("spline").is_null()) {
            const auto& s = j["spline"];
            fit.spline = SplineConfig(s.at("order").get<int>(), s.at("lower").get<double>(), s.at("upper").get<double>(),
                                      s.at("interior_knots").get<std::vector<double>>());
        }
        fit.x_names = j.at("x_columns").get<std::vector<std::string>>();
        fit.z_names = j.at("z_columns").get<std::vector<std::string>>();
        fit.coefficient_names = j.at("coefficient_names").get<std::vector<std::string>>();
        fit.coefficients = matrix_from(j.at("coefficients"));
        fit.std_error = matrix_from(j.at("std_error"));
        fit.objective = j.at("objective").get<double>();
        fit.weight_sum = j.at("weight_sum").get<double>();
        fit.n_obs = j.at("n").get<Eigen::Index>();
        const auto& st = j.at("standardization");
        fit.x_standardization = {st.at("x").at("center").get<std::vector<double>>(),
                                 st.at("x").at("scale").get<std::vector<double>>()};
        fit.z_standardization = {st.at("z").at("center").get<std::vector<double>>(),
                                 st.at("z").at("scale").get<std::vector<double>>()};
        const auto& c = j.at("config");
        fit.config.spline.order = c.at("spline").at("order").get<int>();
        fit.config.spline.interior_knots = c.at("spline").at("interior_knots").get<int>();
        fit.config.optimizer.starts_per_dim = c.at("optimizer").at("starts_per_dim").get<int>();
        fit.config.optimizer.max_iterations = c.at("optimizer").at("max_iterations").get<int>();
        fit.config.optimizer.tolerance = c.at("optimizer").at("tolerance").get<double>();
        fit.config.optimizer.fd_step = c.at("optimizer").at("fd_step").get<double>();
        fit.config.band_level = c.at("band_level").get<double>();
        for (const auto& s : j.at("starts")) {
            StartDiagnostics d;
            d.start_angles = to_eigen(s.at("start_angles").get<std::vector<double>>());
            d.final_angles = to_eigen(s.at("final_angles").get<std::vector<double>>());
            d.start_objective = s.at("start_objective").get<double>();
            d.objective = s.at("objective").get<double>();
            d.iterations = s.at("iterations").get<int>();
            d.evaluations = s.at("evaluations").get<int>();
            d.converged = s.at("converged").get<bool>();
            d.message = s.at("message").get<std::string>();
            fit.starts.push_back(std::move(d));
        }
        const auto expected_rows = 1 + fit.p_z() + (fit.kind == ModelKind::plsi ? (fit.spline ? fit.spline->basis_dim() - 1 : -1) : fit.p_x());
        if (fit.coefficients.rows() != expected_rows || static_cast<std::size_t>(fit.coefficients.cols()) != fit.grid.size() ||
            fit.std_error.rows() != fit.coefficients.rows() || fit.std_error.cols() != fit.coefficients.cols() ||
            (fit.kind == ModelKind::plsi && (!fit.theta || fit.theta->size() != fit.p_x()))) {
            throw InputError(source + ": inconsistent model dimensions");
        }
        return fit;
    } catch (const json::exception& e) {
        throw InputError(source + ": " + e.what());
    }
}

} // namespace plfsi
