#include "plfsi/synthetic.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"
#include "plfsi/isotonic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace plfsi {

using nlohmann::json;

std::string to_string(WeightScheme s)
{
    switch (s) {
    case WeightScheme::uniform:
        return "uniform";
    case WeightScheme::random:
        return "random";
    case WeightScheme::informative:
        return "informative";
    }
    return "uniform";
}

WeightScheme weight_scheme_from_string(const std::string& s)
{
    if (s == "uniform") {
        return WeightScheme::uniform;
    }
    if (s == "random") {
        return WeightScheme::random;
    }
    if (s == "informative") {
        return WeightScheme::informative;
    }
    throw InputError("unknown weight scheme '" + s + "' (expected uniform, random or informative)");
}

std::vector<std::string> link_names()
{
    return {"sigmoid-ramp", "linear", "quadratic", "sine"};
}

double link_value(const std::string& link, double u)
{
    if (link == "sigmoid-ramp") {
        return 2.0 / (1.0 + std::exp(-3.0 * u));
    }
    if (link == "linear") {
        return u;
    }
    if (link == "quadratic") {
        return u * u;
    }
    if (link == "sine") {
        return std::sin(2.0 * u);
    }
    throw InputError("unknown link '" + link + "'");
}

double link_shape(const std::string& link, double t)
{
    if (link == "sigmoid-ramp") {
        return 0.5 + t * t;
    }
    if (link == "quadratic") {
        return 0.5 + t;
    }
    if (link == "linear" || link == "sine") {
        return 1.0;
    }
    throw InputError("unknown link '" + link + "'");
}

double base_quantile(double t)
{
    return 1.0 + 2.0 * t + 4.0 * t * t * t;
}

namespace {

constexpr double kBaseMinSlope = 2.0;
constexpr double kZBound = 3.0;

double category_effect(int level)
{
    return 0.3 * level;
}

} // namespace

std::vector<LinearEffect> SyntheticConfig::effects() const
{
    if (!beta.empty()) {
        return beta;
    }
    std::vector<LinearEffect> out;
    for (int j = 0; j < p_z; ++j) {
        const double sign = j % 2 == 0 ? 1.0 : -1.0;
        out.push_back({0.3 * sign, 0.4 * sign / p_z});
    }
    return out;
}

void SyntheticConfig::validate() const
{
    if (n < 2) {
        throw InputError("synthetic n must be at least 2");
    }
    if (theta0.size() < 1 || !theta0.allFinite() || std::abs(theta0.norm() - 1.0) > 1e-10) {
        throw InputError("theta0 must be a finite unit vector");
    }
    if (p_z < 0 || (!beta.empty() && static_cast<int>(beta.size()) != p_z)) {
        throw InputError("beta must list one effect per linear covariate");
    }
    if (categorical_levels == 1 || categorical_levels < 0) {
        throw InputError("categorical_levels must be 0 or at least 2");
    }
    link_value(link, 0.0);
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw InputError("noise_sd must be nonnegative");
    }
    if (strata < 1 || psus_per_stratum < 0 || psus_per_stratum == 1) {
        throw InputError("strata must be >= 1 and psus_per_stratum 0 or >= 2");
    }
    if (grid_size < 2) {
        throw InputError("grid_size must be at least 2");
    }
    double slope = 0.0;
    for (const auto& e : effects()) {
        slope += std::abs(e.slope);
    }
    if (kZBound * slope > kBaseMinSlope) {
        throw InputError("linear effect slopes are too steep to keep the responses monotone");
    }
}

Eigen::VectorXd true_surface(const SyntheticConfig& config, const ProbabilityGrid& grid,
                             const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z)
{
    const auto effects = config.effects();
    if (x.size() != config.theta0.size() || z.size() < static_cast<Eigen::Index>(effects.size())) {
        throw InputError("covariate dimensions do not match the synthetic config");
    }
    const double g = link_value(config.link, config.theta0.dot(x));
    Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid[j];
        double v = base_quantile(t);
        for (std::size_t k = 0; k < effects.size(); ++k) {
            v += (effects[k].level + effects[k].slope * t) * z[static_cast<Eigen::Index>(k)];
        }
        // Dummy columns after the continuous ones carry constant level shifts.
        for (Eigen::Index k = static_cast<Eigen::Index>(effects.size()); k < z.size(); ++k) {
            v += category_effect(static_cast<int>(k - static_cast<Eigen::Index>(effects.size())) + 1) * z[k];
        }
        v += g * link_shape(config.link, t);
        out[static_cast<Eigen::Index>(j)] = v;
    }
    return out;
}

SyntheticData generate(const SyntheticConfig& config)
{
    config.validate();
    const ProbabilityGrid grid(config.grid_size);
    const auto m = static_cast<Eigen::Index>(grid.size());
    const auto p_x = config.theta0.size();
    const int dummies = config.categorical_levels > 0 ? config.categorical_levels - 1 : 0;
    const auto p_z = static_cast<Eigen::Index>(config.p_z + dummies);
    const auto n = static_cast<Eigen::Index>(config.n);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    SyntheticData sim;
    sim.truth.config = config;
    sim.truth.signal.resize(n, m);
    sim.truth.noise.resize(n, m);
    sim.z_numeric.resize(n, config.p_z);
    const int width = static_cast<int>(std::to_string(config.n).size());
    const auto& trap = grid.trapezoid_weights();

    std::vector<SubjectRecord> records;
    records.reserve(config.n);
    for (Eigen::Index i = 0; i < n; ++i) {
        SubjectRecord r;
        std::string num = std::to_string(i + 1);
        r.subject_id = "s" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
        r.x.resize(p_x);
        for (Eigen::Index j = 0; j < p_x; ++j) {
            r.x[j] = normal(rng);
        }
        r.z = Eigen::VectorXd::Zero(p_z);
        for (int j = 0; j < config.p_z; ++j) {
            double v = normal(rng);
            while (std::abs(v) > kZBound) {
                v = normal(rng);
            }
            r.z[j] = v;
            sim.z_numeric(i, j) = v;
        }
        if (config.categorical_levels > 0) {
            const int level = std::min(config.categorical_levels - 1,
                                       static_cast<int>(uniform(rng) * config.categorical_levels));
            sim.categories.push_back("c" + std::to_string(level + 1));
            if (level > 0) {
                r.z[config.p_z + level - 1] = 1.0;
            }
        }
        switch (config.weights) {
        case WeightScheme::uniform:
            r.weight = 1.0;
            break;
        case WeightScheme::random:
            r.weight = 0.5 + 1.5 * uniform(rng);
            break;
        case WeightScheme::informative:
            // Inverse of a selection probability that rises with the first index covariate.
            r.weight = 1.0 + std::exp(-(0.5 + 0.8 * r.x[0]));
            break;
        }
        const auto s = static_cast<int>(i % config.strata);
        r.stratum = "h" + std::to_string(s + 1);
        if (config.psus_per_stratum > 0) {
            const auto within = static_cast<int>((i / config.strata) % config.psus_per_stratum);
            r.psu = r.stratum + "_" + std::to_string(within + 1);
        } else {
            r.psu = r.subject_id;
        }

        const Eigen::VectorXd signal = true_surface(config, grid, r.x, r.z);
        const double xi0 = normal(rng);
        const double xi1 = normal(rng);
        Eigen::VectorXd noise(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            noise[j] = config.noise_sd * (xi0 + xi1 * (grid[static_cast<std::size_t>(j)] - 0.5));
        }
        Eigen::VectorXd y = signal + noise;
        project_monotone_inplace(std::span<double>(y.data(), static_cast<std::size_t>(m)),
                                 std::span<const double>(trap.data(), static_cast<std::size_t>(m)));
        sim.truth.signal.row(i) = signal.transpose();
        sim.truth.noise.row(i) = noise.transpose();
        r.quantiles = std::move(y);
        records.push_back(std::move(r));
    }

    std::vector<std::string> x_names;
    for (Eigen::Index j = 0; j < p_x; ++j) {
        x_names.push_back("x" + std::to_string(j + 1));
    }
    std::vector<std::string> z_names;
    for (int j = 0; j < config.p_z; ++j) {
        z_names.push_back("z" + std::to_string(j + 1));
    }
    for (int l = 2; l <= config.categorical_levels; ++l) {
        z_names.push_back("group=c" + std::to_string(l));
    }
    sim.data = Dataset::from_records(grid, records, x_names, z_names);
    return sim;
}

double signal_to_noise(const SyntheticTruth& truth)
{
    const ProbabilityGrid grid(truth.config.grid_size);
    const auto& signal = truth.signal;
    const Eigen::RowVectorXd mean = signal.colwise().mean();
    const Eigen::VectorXd var =
        ((signal.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(signal.rows() - 1))
            .transpose();
    const double noise_var = truth.config.noise_sd * truth.config.noise_sd * (1.0 + 1.0 / 12.0);
    if (!(noise_var > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(grid.integrate(var) / noise_var);
}

double noise_sd_for_snr(SyntheticConfig config, double target)
{
    if (!(target > 0.0)) {
        throw InputError("target signal-to-noise ratio must be positive");
    }
    config.noise_sd = 1.0;
    const auto sim = generate(config);
    return signal_to_noise(sim.truth) / target;
}

void write_truth_json(std::ostream& out, const SyntheticData& sim)
{
    const auto& c = sim.truth.config;
    json effects = json::array();
    for (const auto& e : c.effects()) {
        effects.push_back({{"level", e.level}, {"slope", e.slope}});
    }
    json category = json::array();
    for (int l = 2; l <= c.categorical_levels; ++l) {
        category.push_back({{"level", "c" + std::to_string(l)}, {"shift", category_effect(l - 1)}});
    }
    const json j{
        {"format_version", 1},
        {"n", c.n},
        {"theta0", std::vector<double>(c.theta0.data(), c.theta0.data() + c.theta0.size())},
        {"link", c.link},
        {"base", "1 + 2t + 4t^3"},
        {"linear_effects", effects},
        {"category_shifts", category},
        {"noise_sd", c.noise_sd},
        {"noise_model", "noise_sd * (a + b (t - 0.5)), a, b iid N(0,1), then monotone projection"},
        {"signal_to_noise", signal_to_noise(sim.truth)},
        {"weights", to_string(c.weights)},
        {"strata", c.strata},
        {"psus_per_stratum", c.psus_per_stratum},
        {"grid_size", c.grid_size},
        {"seed", c.seed},
    };
    out << j.dump(2) << "\n";
}

void write_simulation(const std::filesystem::path& dir, const SyntheticData& sim, int days)
{
    if (days < 1) {
        throw InputError("days must be at least 1");
    }
    std::filesystem::create_directories(dir);
    const auto& data = sim.data;
    const auto& c = sim.truth.config;
    {
        std::ofstream out(dir / "series.csv");
        csv::write_row(out, {"subject_id", "time_days", "measurement"});
        const std::size_t minutes = static_cast<std::size_t>(days) * 1440;
        std::vector<double> values(minutes);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            const Eigen::VectorXd q = data.y.row(i).transpose();
            for (std::size_t k = 0; k < minutes; ++k) {
                const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(minutes);
                values[k] = std::max(0.0, data.grid.interpolate(q, p));
            }
            std::mt19937_64 rng(c.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
            std::shuffle(values.begin(), values.end(), rng);
            const auto& id = data.ids[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < minutes; ++k) {
                const double time = static_cast<double>(k / 1440) + static_cast<double>(k % 1440) / 1440.0;
                csv::write_row(out, {id, csv::format(time), csv::format(values[k])});
            }
        }
    }
    {
        std::ofstream out(dir / "covariates.csv");
        std::vector<std::string> header{"subject_id"};
        header.insert(header.end(), data.x_names.begin(), data.x_names.end());
        for (int j = 0; j < c.p_z; ++j) {
            header.push_back(data.z_names[static_cast<std::size_t>(j)]);
        }
        if (c.categorical_levels > 0) {
            header.emplace_back("group");
        }
        header.insert(header.end(), {"weight", "stratum", "psu"});
        csv::write_row(out, header);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            std::vector<std::string> row{data.ids[k]};
            for (Eigen::Index j = 0; j < data.p_x(); ++j) {
                row.push_back(csv::format(data.x(i, j)));
            }
            for (int j = 0; j < c.p_z; ++j) {
                row.push_back(csv::format(sim.z_numeric(i, j)));
            }
            if (c.categorical_levels > 0) {
                row.push_back(sim.categories[k]);
            }
            row.insert(row.end(), {csv::format(data.weights[k]), data.survey.strata[k], data.survey.psus[k]});
            csv::write_row(out, row);
        }
    }
    {
        Config cfg;
        cfg.data.x_columns = data.x_names;
        for (int j = 0; j < c.p_z; ++j) {
            cfg.data.z_columns.push_back(data.z_names[static_cast<std::size_t>(j)]);
        }
        if (c.categorical_levels > 0) {
            cfg.data.categorical_columns = {"group"};
        }
        cfg.data.weight_column = "weight";
        cfg.data.stratum_column = "stratum";
        cfg.data.psu_column = "psu";
        cfg.data.grid_size = c.grid_size;
        std::ofstream out(dir / "config.ini");
        write_config(out, cfg);
    }
    {
        std::ofstream out(dir / "truth.json");
        write_truth_json(out, sim);
    }
}

} // namespace plfsi
