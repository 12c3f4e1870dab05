#include "plfsi/config.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace plfsi {

namespace pt = boost::property_tree;

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep = ", ")
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i ? sep : "") + items[i];
    }
    return out;
}

std::vector<std::string> list_value(const std::string& v)
{
    std::vector<std::string> out;
    for (auto& item : csv::split(v, ',')) {
        auto t = csv::trim(item);
        if (!t.empty()) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

template <typename T>
T number(const std::string& key, const std::string& raw, const std::string& source)
{
    const std::string v = csv::trim(raw);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw InputError(source + ": invalid value '" + v + "' for " + key);
    }
    return out;
}

bool boolean(const std::string& key, const std::string& raw, const std::string& source)
{
    const std::string v = csv::trim(raw);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw InputError(source + ": invalid boolean '" + v + "' for " + key);
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;
using Section = std::map<std::string, Setter>;

const std::map<std::string, Section>& schema()
{
    static const std::map<std::string, Section> s = [] {
        std::map<std::string, Section> m;
        auto& d = m["data"];
        d["id_column"] = [](Config& c, const std::string& v, const std::string&) { c.data.id_column = csv::trim(v); };
        d["x_columns"] = [](Config& c, const std::string& v, const std::string&) { c.data.x_columns = list_value(v); };
        d["z_columns"] = [](Config& c, const std::string& v, const std::string&) { c.data.z_columns = list_value(v); };
        d["categorical_columns"] = [](Config& c, const std::string& v, const std::string&) {
            c.data.categorical_columns = list_value(v);
        };
        d["interactions"] = [](Config& c, const std::string& v, const std::string&) {
            c.data.interactions = list_value(v);
        };
        d["weight_column"] = [](Config& c, const std::string& v, const std::string&) {
            c.data.weight_column = csv::trim(v);
        };
        d["stratum_column"] = [](Config& c, const std::string& v, const std::string&) {
            c.data.stratum_column = csv::trim(v);
        };
        d["psu_column"] = [](Config& c, const std::string& v, const std::string&) { c.data.psu_column = csv::trim(v); };
        d["standardize"] = [](Config& c, const std::string& v, const std::string& src) {
            c.data.standardize = boolean("data.standardize", v, src);
        };
        d["grid_size"] = [](Config& c, const std::string& v, const std::string& src) {
            c.data.grid_size = number<std::size_t>("data.grid_size", v, src);
        };
        d["wear_days_required"] = [](Config& c, const std::string& v, const std::string& src) {
            c.data.wear_days_required = number<int>("data.wear_days_required", v, src);
        };
        d["wear_hours_required"] = [](Config& c, const std::string& v, const std::string& src) {
            c.data.wear_hours_required = number<double>("data.wear_hours_required", v, src);
        };

        auto& sp = m["spline"];
        sp["order"] = [](Config& c, const std::string& v, const std::string& src) {
            c.spline.order = number<int>("spline.order", v, src);
        };
        sp["interior_knots"] = [](Config& c, const std::string& v, const std::string& src) {
            c.spline.interior_knots = number<int>("spline.interior_knots", v, src);
        };

        auto& op = m["optimizer"];
        op["starts_per_dim"] = [](Config& c, const std::string& v, const std::string& src) {
            c.optimizer.starts_per_dim = number<int>("optimizer.starts_per_dim", v, src);
        };
        op["max_iterations"] = [](Config& c, const std::string& v, const std::string& src) {
            c.optimizer.max_iterations = number<int>("optimizer.max_iterations", v, src);
        };
        op["tolerance"] = [](Config& c, const std::string& v, const std::string& src) {
            c.optimizer.tolerance = number<double>("optimizer.tolerance", v, src);
        };
        op["fd_step"] = [](Config& c, const std::string& v, const std::string& src) {
            c.optimizer.fd_step = number<double>("optimizer.fd_step", v, src);
        };

        auto& inf = m["inference"];
        inf["level"] = [](Config& c, const std::string& v, const std::string& src) {
            c.inference.level = number<double>("inference.level", v, src);
        };
        inf["t_max"] = [](Config& c, const std::string& v, const std::string& src) {
            c.inference.t_max = number<double>("inference.t_max", v, src);
        };

        auto& cl = m["cluster"];
        cl["k"] = [](Config& c, const std::string& v, const std::string& src) {
            c.cluster.k = number<int>("cluster.k", v, src);
        };
        cl["k_max"] = [](Config& c, const std::string& v, const std::string& src) {
            c.cluster.k_max = number<int>("cluster.k_max", v, src);
        };
        cl["restarts"] = [](Config& c, const std::string& v, const std::string& src) {
            c.cluster.restarts = number<int>("cluster.restarts", v, src);
        };
        cl["seed"] = [](Config& c, const std::string& v, const std::string& src) {
            c.cluster.seed = number<std::uint64_t>("cluster.seed", v, src);
        };
        return m;
    }();
    return s;
}

template <typename Map>
std::vector<std::string> keys_of(const Map& m)
{
    std::vector<std::string> out;
    for (const auto& [k, v] : m) {
        out.push_back(k);
    }
    return out;
}

void validate(const Config& c, const std::string& source)
{
    auto fail = [&](const std::string& msg) { throw InputError(source + ": " + msg); };
    if (c.data.grid_size < 2) {
        fail("data.grid_size must be at least 2");
    }
    if (c.data.wear_days_required < 0 || !(c.data.wear_hours_required >= 0.0 && c.data.wear_hours_required <= 24.0)) {
        fail("wear thresholds out of range");
    }
    if (c.spline.order < 2 || c.spline.interior_knots < 1) {
        fail("spline.order must be >= 2 and spline.interior_knots >= 1");
    }
    if (c.optimizer.starts_per_dim < 1 || c.optimizer.max_iterations < 1 || !(c.optimizer.tolerance > 0.0) ||
        !(c.optimizer.fd_step > 0.0)) {
        fail("optimizer settings must be positive");
    }
    if (!(c.inference.level > 0.0 && c.inference.level < 1.0) || !(c.inference.t_max > 0.0 && c.inference.t_max <= 1.0)) {
        fail("inference.level must lie in (0, 1) and inference.t_max in (0, 1]");
    }
    if (c.cluster.k < 1 || c.cluster.k_max < 1 || c.cluster.restarts < 1) {
        fail("cluster settings must be positive");
    }
}

} // namespace

FitConfig Config::fit_config() const
{
    FitConfig f;
    f.spline = spline;
    f.optimizer = optimizer;
    f.band_level = inference.level;
    return f;
}

Config parse_config(std::istream& in, const std::string& source)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InputError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    const auto& sections = schema();
    Config config;
    for (const auto& [name, body] : tree) {
        const auto sec = sections.find(name);
        if (sec == sections.end()) {
            if (body.empty()) {
                throw InputError(source + ": key '" + name + "' must appear inside a section; valid sections: " +
                                 join(keys_of(sections)));
            }
            throw InputError(source + ": unknown section [" + name + "]; valid sections: " + join(keys_of(sections)));
        }
        for (const auto& [key, value] : body) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) {
                throw InputError(source + ": unknown key '" + key + "' in [" + name + "]; valid keys: " +
                                 join(keys_of(sec->second)));
            }
            setter->second(config, value.data(), source);
        }
    }
    validate(config, source);
    return config;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config file " + path.string());
    }
    return parse_config(in, path.string());
}

Config resolve_config(const std::string& explicit_path)
{
    if (!explicit_path.empty()) {
        return load_config(explicit_path);
    }
    if (const char* env = std::getenv("PLFSI_CONFIG"); env != nullptr && *env != '\0') {
        return load_config(env);
    }
    return Config{};
}

void write_config(std::ostream& out, const Config& c)
{
    out << "[data]\n";
    out << "id_column = " << c.data.id_column << "\n";
    out << "x_columns = " << join(c.data.x_columns, ",") << "\n";
    out << "z_columns = " << join(c.data.z_columns, ",") << "\n";
    out << "categorical_columns = " << join(c.data.categorical_columns, ",") << "\n";
    out << "interactions = " << join(c.data.interactions, ",") << "\n";
    out << "weight_column = " << c.data.weight_column << "\n";
    out << "stratum_column = " << c.data.stratum_column << "\n";
    out << "psu_column = " << c.data.psu_column << "\n";
    out << "standardize = " << (c.data.standardize ? "true" : "false") << "\n";
    out << "grid_size = " << c.data.grid_size << "\n";
    out << "wear_days_required = " << c.data.wear_days_required << "\n";
    out << "wear_hours_required = " << csv::format(c.data.wear_hours_required) << "\n";
    out << "\n[spline]\n";
    out << "order = " << c.spline.order << "\n";
    out << "interior_knots = " << c.spline.interior_knots << "\n";
    out << "\n[optimizer]\n";
    out << "starts_per_dim = " << c.optimizer.starts_per_dim << "\n";
    out << "max_iterations = " << c.optimizer.max_iterations << "\n";
    out << "tolerance = " << csv::format(c.optimizer.tolerance) << "\n";
    out << "fd_step = " << csv::format(c.optimizer.fd_step) << "\n";
    out << "\n[inference]\n";
    out << "level = " << csv::format(c.inference.level) << "\n";
    out << "t_max = " << csv::format(c.inference.t_max) << "\n";
    out << "\n[cluster]\n";
    out << "k = " << c.cluster.k << "\n";
    out << "k_max = " << c.cluster.k_max << "\n";
    out << "restarts = " << c.cluster.restarts << "\n";
    out << "seed = " << c.cluster.seed << "\n";
}

} // namespace plfsi
