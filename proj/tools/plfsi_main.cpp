// plfsi: command-line front end.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include "plfsi/clustering.hpp"
#include "plfsi/config.hpp"
#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"
#include "plfsi/ingestion.hpp"
#include "plfsi/interpretation.hpp"
#include "plfsi/metrics.hpp"
#include "plfsi/model.hpp"
#include "plfsi/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace plfsi;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return in;
}

ModelFit load_model(const fs::path& path)
{
    auto in = open_in(path);
    return read_model_fit(in, path.string());
}

std::vector<double> parse_list(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    for (const auto& item : csv::split(s, ',')) {
        const auto t = csv::trim(item);
        if (!t.empty()) {
            out.push_back(csv::parse_double(t, what, 0));
        }
    }
    return out;
}

AxisRange parse_range(const std::string& s, const std::string& what)
{
    const auto parts = csv::split(s, ':');
    if (parts.size() != 3) {
        throw InputError(what + " must have the form from:to:step");
    }
    return {csv::parse_double(csv::trim(parts[0]), what, 0), csv::parse_double(csv::trim(parts[1]), what, 0),
            csv::parse_double(csv::trim(parts[2]), what, 0)};
}

std::string append_suffix(const fs::path& p, const std::string& suffix)
{
    return p.string() + suffix;
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
    std::string series, covariates, config, out;
};

void run_ingest(const IngestArgs& a)
{
    const Config cfg = resolve_config(a.config);
    const auto result = assemble_dataset(a.series, a.covariates, cfg.data);
    nlohmann::json extra{{"exclusions", {{"file", "exclusions.csv"}, {"count", result.exclusions.size()}}},
                         {"wear_rule",
                          {{"days_required", cfg.data.wear_days_required},
                           {"hours_required", cfg.data.wear_hours_required}}},
                         {"standardized", cfg.data.standardize}};
    write_dataset(a.out, result.data, extra.dump());
    auto out = open_out(fs::path(a.out) / "exclusions.csv");
    write_exclusions_csv(out, result.exclusions);
    std::cerr << "ingest: " << result.data.n() << " subjects retained, " << result.exclusions.size() << " excluded\n";
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string data, model = "plsi", config, out;
    std::size_t threads = 0;
};

void write_starts_csv(std::ostream& out, const ModelFit& fit)
{
    const auto q = fit.starts.empty() ? Eigen::Index{0} : fit.starts.front().start_angles.size();
    std::vector<std::string> header{"start"};
    for (Eigen::Index j = 0; j < q; ++j) {
        header.push_back("start_angle" + std::to_string(j + 1));
    }
    for (Eigen::Index j = 0; j < q; ++j) {
        header.push_back("final_angle" + std::to_string(j + 1));
    }
    header.insert(header.end(), {"start_objective", "objective", "iterations", "evaluations", "converged"});
    csv::write_row(out, header);
    for (std::size_t s = 0; s < fit.starts.size(); ++s) {
        const auto& d = fit.starts[s];
        std::vector<std::string> row{std::to_string(s + 1)};
        for (Eigen::Index j = 0; j < q; ++j) {
            row.push_back(csv::format(d.start_angles[j]));
        }
        for (Eigen::Index j = 0; j < q; ++j) {
            row.push_back(csv::format(d.final_angles[j]));
        }
        row.insert(row.end(), {csv::format(d.start_objective), csv::format(d.objective), std::to_string(d.iterations),
                               std::to_string(d.evaluations), d.converged ? "1" : "0"});
        csv::write_row(out, row);
    }
}

void save_fit(const fs::path& path, const ModelFit& fit, const Dataset& data)
{
    {
        auto out = open_out(path);
        write_model_fit(out, fit);
    }
    {
        auto out = open_out(append_suffix(path, ".metrics.csv"));
        write_metrics_csv(out, {compute_metrics(fit, data)});
    }
    if (fit.kind == ModelKind::plsi) {
        auto out = open_out(append_suffix(path, ".starts.csv"));
        write_starts_csv(out, fit);
    }
}

int run_fit(const FitArgs& a)
{
    const Config cfg = resolve_config(a.config);
    FitConfig fc = cfg.fit_config();
    fc.optimizer.threads = a.threads;
    const Dataset data = read_dataset(a.data);
    const ModelKind kind = model_kind_from_string(a.model);
    try {
        const ModelFit fit = kind == ModelKind::plsi ? fit_plsi(data, fc) : fit_global(data, fc);
        save_fit(a.out, fit, data);
        if (fit.theta) {
            std::cerr << "fit: theta =";
            for (Eigen::Index j = 0; j < fit.theta->size(); ++j) {
                std::cerr << ' ' << csv::format(fit.theta->theta()[j]);
            }
            std::cerr << '\n';
        }
        return 0;
    } catch (const OptimizerFailure& e) {
        const fs::path partial = append_suffix(a.out, ".partial");
        auto out = open_out(partial);
        write_model_fit(out, e.best());
        auto starts = open_out(append_suffix(a.out, ".starts.csv"));
        write_starts_csv(starts, e.best());
        std::cerr << "plfsi: " << e.what() << "; best fit saved to " << partial.string() << '\n';
        return kExitNumerical;
    }
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    std::string model, data, out;
};

void run_predict(const PredictArgs& a)
{
    const ModelFit fit = load_model(a.model);
    const Dataset data = read_dataset(a.data);
    auto out = open_out(a.out);
    write_quantile_csv(out, {fit.grid, data.ids, predict_dataset(fit, data)});
}

// ----------------------------------------------------------------- metrics

struct MetricsArgs {
    std::vector<std::string> models;
    std::string data, out, bands, config;
};

void run_metrics(const MetricsArgs& a)
{
    const Config cfg = resolve_config(a.config);
    const Dataset data = read_dataset(a.data);
    std::vector<MetricsRow> rows;
    std::vector<BandRow> bands;
    for (const auto& path : a.models) {
        const ModelFit fit = load_model(path);
        rows.push_back(compute_metrics(fit, data));
        if (!a.bands.empty()) {
            const auto b = confidence_bands(fit, cfg.inference.level, cfg.inference.t_max);
            bands.insert(bands.end(), b.begin(), b.end());
        }
    }
    if (a.out.empty()) {
        write_metrics_csv(std::cout, rows);
    } else {
        auto out = open_out(a.out);
        write_metrics_csv(out, rows);
    }
    if (!a.bands.empty()) {
        auto out = open_out(a.bands);
        write_bands_csv(out, bands);
    }
}

// ----------------------------------------------------------------- cluster

struct ClusterArgs {
    std::string model, data, out, elbow, config, join;
    std::vector<std::string> join_columns;
    int k = 0;
    int k_max = 0;
    int restarts = 0;
    long long seed = -1;
};

void run_cluster(const ClusterArgs& a)
{
    const Config cfg = resolve_config(a.config);
    const int k = a.k > 0 ? a.k : cfg.cluster.k;
    const int k_max = a.k_max > 0 ? a.k_max : cfg.cluster.k_max;
    const int restarts = a.restarts > 0 ? a.restarts : cfg.cluster.restarts;
    const std::uint64_t seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : cfg.cluster.seed;

    const ModelFit fit = load_model(a.model);
    const Dataset data = read_dataset(a.data);
    const auto res = residuals(fit, data);
    const Eigen::MatrixXd d = pairwise_l2(data.grid, res);
    const auto groups = kgroups(d, k, seed, restarts);

    auto out = open_out(a.out);
    if (a.join.empty()) {
        write_clusters_csv(out, data.ids, groups.labels);
    } else {
        const auto doc = csv::read_file(a.join);
        const auto id_col = doc.column("subject_id", a.join);
        std::vector<std::size_t> cols;
        for (const auto& c : a.join_columns) {
            cols.push_back(doc.column(c, a.join));
        }
        std::map<std::string, const csv::Row*> by_id;
        for (const auto& row : doc.rows) {
            by_id[row.fields[id_col]] = &row;
        }
        std::vector<std::string> header{"subject_id", "cluster"};
        header.insert(header.end(), a.join_columns.begin(), a.join_columns.end());
        csv::write_row(out, header);
        for (std::size_t i = 0; i < data.ids.size(); ++i) {
            std::vector<std::string> row{data.ids[i], std::to_string(groups.labels[i] + 1)};
            const auto it = by_id.find(data.ids[i]);
            for (auto c : cols) {
                row.push_back(it == by_id.end() ? "" : it->second->fields[c]);
            }
            csv::write_row(out, row);
        }
    }
    if (!a.elbow.empty()) {
        const auto curve = elbow_curve(d, std::min<int>(k_max, static_cast<int>(data.n())), seed, restarts);
        auto e = open_out(a.elbow);
        write_elbow_csv(e, curve);
        std::cerr << "cluster: suggested k = " << curve.suggested_k << (curve.low_confidence ? " (low confidence)" : "")
                  << '\n';
    }
}

// -------------------------------------------------------------- derivative

struct DerivativeArgs {
    std::string model, out, t_list = "0.5,0.75,0.9,0.97";
    int points = 101;
};

void run_derivative(const DerivativeArgs& a)
{
    const ModelFit fit = load_model(a.model);
    const auto rows = derivative_table(fit, a.points, parse_list(a.t_list, "--t"));
    auto out = open_out(a.out);
    write_derivative_csv(out, rows);
}

// ----------------------------------------------------------------- heatmap

struct HeatmapArgs {
    std::string model, out, integral_out, x1, x2, z, t_list = "0.5,0.75,0.9,0.97";
    std::size_t threads = 0;
};

void run_heatmap(const HeatmapArgs& a)
{
    const ModelFit fit = load_model(a.model);
    const auto zv = parse_list(a.z, "--z");
    const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(zv.data(), static_cast<Eigen::Index>(zv.size()));
    const auto cells = prediction_grid(fit, parse_range(a.x1, "--x1"), parse_range(a.x2, "--x2"), z, a.threads);
    auto out = open_out(a.out);
    write_heatmap_csv(out, fit, cells, parse_list(a.t_list, "--t"));
    if (!a.integral_out.empty()) {
        auto o = open_out(a.integral_out);
        write_heatmap_integral_csv(o, fit, cells);
    }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string out, link = "sigmoid-ramp", weights = "uniform", theta = "0.6,0.8";
    std::size_t n = 500;
    int p_z = 1;
    int categorical = 0;
    double noise_sd = 0.1;
    double snr = 0.0;
    int strata = 1;
    int psus = 0;
    int days = 3;
    std::size_t grid = 101;
    std::uint64_t seed = 1;
};

void run_simulate(const SimulateArgs& a)
{
    SyntheticConfig c;
    c.n = a.n;
    const auto th = parse_list(a.theta, "--theta");
    c.theta0 = Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
    c.p_z = a.p_z;
    c.categorical_levels = a.categorical;
    c.link = a.link;
    c.noise_sd = a.noise_sd;
    c.weights = weight_scheme_from_string(a.weights);
    c.strata = a.strata;
    c.psus_per_stratum = a.psus;
    c.grid_size = a.grid;
    c.seed = a.seed;
    if (a.snr > 0.0) {
        c.noise_sd = noise_sd_for_snr(c, a.snr);
    }
    const auto sim = generate(c);
    write_simulation(a.out, sim, a.days);
    std::cerr << "simulate: " << c.n << " subjects, noise_sd = " << csv::format(c.noise_sd)
              << ", signal-to-noise = " << csv::format(signal_to_noise(sim.truth)) << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Partially linear Frechet single-index regression for distributional responses"};
    app.require_subcommand(1);
    const std::string config_help = "INI config file (default: $PLFSI_CONFIG, else built-in defaults)";

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Wear-time filtering and quantile extraction from minute-level series");
    c_ingest->add_option("--series", ingest.series, "Long CSV subject_id,time_days,measurement")->required();
    c_ingest->add_option("--covariates", ingest.covariates, "Covariate CSV with roles declared in the config")->required();
    c_ingest->add_option("--config", ingest.config, config_help);
    c_ingest->add_option("--out", ingest.out, "Output dataset directory")->required();

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit a single-index (plsi) or global linear model");
    c_fit->add_option("--data", fit.data, "Dataset directory written by ingest")->required();
    c_fit->add_option("--model", fit.model, "plsi or global")->check(CLI::IsMember({"plsi", "global"}));
    c_fit->add_option("--config", fit.config, config_help);
    c_fit->add_option("--out", fit.out, "Model file; FILE.metrics.csv and FILE.starts.csv are written alongside")
        ->required();
    c_fit->add_option("--threads", fit.threads, "Worker threads (0 = all cores); results do not depend on it");

    PredictArgs predict;
    auto* c_predict = app.add_subcommand("predict", "Predicted quantile functions for every subject of a dataset");
    c_predict->add_option("--model", predict.model, "Model file")->required();
    c_predict->add_option("--data", predict.data, "Dataset directory")->required();
    c_predict->add_option("--out", predict.out, "Output quantile CSV")->required();

    MetricsArgs metrics;
    auto* c_metrics = app.add_subcommand("metrics", "Frechet R^2 and adjusted R^2, optionally confidence bands");
    c_metrics->add_option("--model", metrics.models, "Model file (repeatable)")->required();
    c_metrics->add_option("--data", metrics.data, "Dataset directory")->required();
    c_metrics->add_option("--out", metrics.out, "Output CSV (default stdout)");
    c_metrics->add_option("--bands", metrics.bands, "Also write pointwise bands coef,t,est,lo,hi to this file");
    c_metrics->add_option("--config", metrics.config, config_help);

    ClusterArgs cluster;
    auto* c_cluster = app.add_subcommand("cluster", "Energy-distance k-groups clustering of quantile residuals");
    c_cluster->add_option("--model", cluster.model, "Model file")->required();
    c_cluster->add_option("--data", cluster.data, "Dataset directory")->required();
    c_cluster->add_option("--out", cluster.out, "Output CSV subject_id,cluster")->required();
    c_cluster->add_option("--elbow", cluster.elbow, "Also write the elbow table k,dispersion,gini");
    c_cluster->add_option("--k", cluster.k, "Number of clusters (default from config)");
    c_cluster->add_option("--kmax", cluster.k_max, "Largest k on the elbow curve (default from config)");
    c_cluster->add_option("--restarts", cluster.restarts, "Random restarts per k (default from config)");
    c_cluster->add_option("--seed", cluster.seed, "Seed (default from config)");
    c_cluster->add_option("--join", cluster.join, "CSV with a subject_id column to join for export");
    c_cluster->add_option("--join-columns", cluster.join_columns, "Columns of --join to copy")->delimiter(',');
    c_cluster->add_option("--config", cluster.config, config_help);

    DerivativeArgs deriv;
    auto* c_deriv = app.add_subcommand("derivative", "Derivative of the pre-projection prediction along the index");
    c_deriv->add_option("--model", deriv.model, "Single-index model file")->required();
    c_deriv->add_option("--out", deriv.out, "Output CSV u,t,dyd_u,extrapolated")->required();
    c_deriv->add_option("--t", deriv.t_list, "Comma-separated grid probabilities");
    c_deriv->add_option("--points", deriv.points, "Index values between the boundary knots");

    HeatmapArgs heat;
    auto* c_heat = app.add_subcommand("heatmap", "Predictions over a grid of the two index covariates");
    c_heat->add_option("--model", heat.model, "Model file with two index covariates")->required();
    c_heat->add_option("--x1", heat.x1, "from:to:step for the first index covariate (raw scale)")->required();
    c_heat->add_option("--x2", heat.x2, "from:to:step for the second index covariate (raw scale)")->required();
    c_heat->add_option("--z", heat.z, "Comma-separated fixed linear covariates (raw scale)");
    c_heat->add_option("--t", heat.t_list, "Comma-separated grid probabilities");
    c_heat->add_option("--out", heat.out, "Output CSV")->required();
    c_heat->add_option("--integral-out", heat.integral_out, "Also write per-cell integrals of the prediction");
    c_heat->add_option("--threads", heat.threads, "Worker threads (0 = all cores)");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic study in the formats ingest reads");
    c_sim->add_option("--out", sim.out, "Output directory")->required();
    c_sim->add_option("--n", sim.n, "Number of subjects");
    c_sim->add_option("--theta", sim.theta, "Comma-separated unit index direction");
    c_sim->add_option("--pz", sim.p_z, "Number of continuous linear covariates");
    c_sim->add_option("--categorical", sim.categorical, "Levels of an extra categorical covariate (0 = none)");
    c_sim->add_option("--link", sim.link, "Link function")->check(CLI::IsMember(link_names()));
    c_sim->add_option("--noise-sd", sim.noise_sd, "Functional noise scale");
    c_sim->add_option("--snr", sim.snr, "Target signal-to-noise ratio; overrides --noise-sd");
    c_sim->add_option("--weights", sim.weights, "uniform, random or informative");
    c_sim->add_option("--strata", sim.strata, "Number of strata");
    c_sim->add_option("--psus", sim.psus, "PSUs per stratum (0 = one per subject)");
    c_sim->add_option("--days", sim.days, "Days of minute-level data per subject");
    c_sim->add_option("--grid", sim.grid, "Probability grid size");
    c_sim->add_option("--seed", sim.seed, "Random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (c_ingest->parsed()) {
            run_ingest(ingest);
        } else if (c_fit->parsed()) {
            return run_fit(fit);
        } else if (c_predict->parsed()) {
            run_predict(predict);
        } else if (c_metrics->parsed()) {
            run_metrics(metrics);
        } else if (c_cluster->parsed()) {
            run_cluster(cluster);
        } else if (c_deriv->parsed()) {
            run_derivative(deriv);
        } else if (c_heat->parsed()) {
            run_heatmap(heat);
        } else if (c_sim->parsed()) {
            run_simulate(sim);
        }
    } catch (const InputError& e) {
        std::cerr << "plfsi: error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        std::cerr << "plfsi: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "plfsi: error: " << e.what() << '\n';
        return kExitInput;
    }
    return 0;
}
