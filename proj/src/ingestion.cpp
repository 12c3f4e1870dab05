#include "plfsi/ingestion.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string_view>

namespace plfsi {

// ---------------------------------------------------------------- non-wear

std::vector<bool> detect_nonwear(std::span<const double> counts, const NonwearRule& rule)
{
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!std::isfinite(counts[i]) || counts[i] < 0.0) {
            throw InputError("activity count at minute " + std::to_string(i) + " is negative or not finite");
        }
    }
    const std::size_t n = counts.size();
    std::vector<bool> flagged(n, false);
    auto interruption = [&](double c) { return c > 0.0 && c < rule.interruption_limit; };

    for (std::size_t start = 0; start < n; ++start) {
        // Only the first zero of a zero stretch can begin a maximal run.
        if (counts[start] != 0.0 || (start > 0 && counts[start - 1] == 0.0)) {
            continue;
        }
        int used = 0;
        std::size_t last_zero = start;
        for (std::size_t i = start; i < n; ++i) {
            if (counts[i] == 0.0) {
                last_zero = i;
            } else if (interruption(counts[i]) && used < rule.max_interruptions) {
                ++used;
            } else {
                break;
            }
        }
        if (last_zero - start + 1 >= static_cast<std::size_t>(rule.min_run)) {
            std::fill(flagged.begin() + static_cast<std::ptrdiff_t>(start),
                      flagged.begin() + static_cast<std::ptrdiff_t>(last_zero + 1), true);
        }
    }
    return flagged;
}

// ------------------------------------------------------------- wear filter

int WearRule::minutes_required() const
{
    return static_cast<int>(std::ceil(hours_required * 60.0 - 1e-9));
}

bool qualifies(const std::vector<WearDay>& days, const WearRule& rule)
{
    const int need = rule.minutes_required();
    const auto good = std::count_if(days.begin(), days.end(), [&](const WearDay& d) { return d.wear_minutes >= need; });
    return good >= rule.days_required;
}

std::vector<std::string> filter_participants(const std::map<std::string, std::vector<WearDay>>& records,
                                             const WearRule& rule)
{
    std::vector<std::string> kept;
    for (const auto& [id, days] : records) {
        if (qualifies(days, rule)) {
            kept.push_back(id);
        }
    }
    return kept;
}

// ------------------------------------------------------------------ series

namespace {

std::vector<std::string_view> split_view(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

std::string_view strip(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

std::map<std::string, RawActivitySeries> read_series_csv(std::istream& in, const std::string& source)
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        const auto t = strip(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        for (auto f : split_view(t)) {
            header.emplace_back(strip(f));
        }
    }
    if (header.empty()) {
        throw InputError(source + ": missing header");
    }
    auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw InputError(source + ":" + std::to_string(line_no) + ": missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c_id = col("subject_id");
    const auto c_time = col("time_days");
    const auto c_value = col("measurement");

    std::map<std::string, RawActivitySeries> out;
    RawActivitySeries* current = nullptr;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = strip(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto fields = split_view(t);
        if (fields.size() != header.size()) {
            throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        }
        const auto id = strip(fields[c_id]);
        if (id.empty()) {
            throw InputError(source + ":" + std::to_string(line_no) + ": empty subject_id");
        }
        if (current == nullptr || current->subject_id != id) {
            auto& slot = out[std::string(id)];
            slot.subject_id = std::string(id);
            current = &slot;
        }
        const double time = csv::parse_double(std::string(strip(fields[c_time])), source, line_no);
        const double value = csv::parse_double(std::string(strip(fields[c_value])), source, line_no);
        if (value < 0.0) {
            throw InputError(source + ":" + std::to_string(line_no) + ": negative measurement");
        }
        current->times.push_back(time);
        current->measurements.push_back(value);
    }
    for (auto& [id, s] : out) {
        if (std::is_sorted(s.times.begin(), s.times.end())) {
            continue;
        }
        std::vector<std::size_t> order(s.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.times[a] < s.times[b]; });
        RawActivitySeries sorted{id, {}, {}};
        for (auto k : order) {
            sorted.times.push_back(s.times[k]);
            sorted.measurements.push_back(s.measurements[k]);
        }
        s = std::move(sorted);
    }
    return out;
}

// -------------------------------------------------------------- covariates

namespace {

struct RawCovariates {
    std::vector<std::string> ids;
    std::vector<std::size_t> lines;
    std::map<std::string, std::vector<double>> numeric;
    std::map<std::string, std::vector<std::string>> categorical;
    std::vector<double> weights;
    std::vector<std::string> strata;
    std::vector<std::string> psus;
};

RawCovariates read_raw(std::istream& in, const DataSection& roles, const std::string& source)
{
    const auto doc = csv::read(in, source);
    RawCovariates raw;
    const auto c_id = doc.column(roles.id_column, source);

    std::set<std::string> numeric_cols(roles.x_columns.begin(), roles.x_columns.end());
    numeric_cols.insert(roles.z_columns.begin(), roles.z_columns.end());
    for (const auto& c : roles.categorical_columns) {
        if (numeric_cols.count(c) != 0) {
            throw InputError(source + ": column '" + c + "' is declared both numeric and categorical");
        }
    }
    for (const auto& c : roles.x_columns) {
        if (std::find(roles.z_columns.begin(), roles.z_columns.end(), c) != roles.z_columns.end()) {
            throw InputError(source + ": column '" + c + "' is declared as both x and z");
        }
    }
    std::map<std::string, std::size_t> idx;
    for (const auto& c : numeric_cols) {
        idx[c] = doc.column(c, source);
    }
    for (const auto& c : roles.categorical_columns) {
        idx[c] = doc.column(c, source);
    }
    const auto opt_col = [&](const std::string& name) -> std::optional<std::size_t> {
        if (name.empty()) {
            return std::nullopt;
        }
        return doc.column(name, source);
    };
    const auto c_weight = opt_col(roles.weight_column);
    const auto c_stratum = opt_col(roles.stratum_column);
    const auto c_psu = opt_col(roles.psu_column);

    std::set<std::string> seen;
    for (const auto& row : doc.rows) {
        auto where = [&] { return source + ":" + std::to_string(row.line); };
        auto field = [&](std::size_t c, const std::string& name) {
            if (row.fields[c].empty() || row.fields[c] == "NA") {
                throw InputError(where() + ": missing value for '" + name + "'");
            }
            return row.fields[c];
        };
        const std::string id = field(c_id, roles.id_column);
        if (!seen.insert(id).second) {
            throw InputError(where() + ": duplicate subject id '" + id + "'");
        }
        raw.ids.push_back(id);
        raw.lines.push_back(row.line);
        for (const auto& c : numeric_cols) {
            raw.numeric[c].push_back(csv::parse_double(field(idx[c], c), source, row.line));
        }
        for (const auto& c : roles.categorical_columns) {
            raw.categorical[c].push_back(field(idx[c], c));
        }
        double w = 1.0;
        if (c_weight) {
            w = csv::parse_double(field(*c_weight, roles.weight_column), source, row.line);
            if (!(w > 0.0)) {
                throw InputError(where() + ": survey weight must be positive");
            }
        }
        raw.weights.push_back(w);
        raw.strata.push_back(c_stratum ? field(*c_stratum, roles.stratum_column) : std::string("1"));
        raw.psus.push_back(c_psu ? field(*c_psu, roles.psu_column) : id);
    }
    return raw;
}

struct CodedColumn {
    std::string name;
    std::vector<double> values;
    bool dummy = false;
};

// Coded columns for one declared name, restricted to `rows`.
std::vector<CodedColumn> code_term(const RawCovariates& raw, const std::string& name,
                                   const std::vector<std::size_t>& rows, const std::string& source)
{
    if (const auto it = raw.numeric.find(name); it != raw.numeric.end()) {
        CodedColumn c{name, {}, false};
        for (auto r : rows) {
            c.values.push_back(it->second[r]);
        }
        return {c};
    }
    if (const auto it = raw.categorical.find(name); it != raw.categorical.end()) {
        std::set<std::string> levels;
        for (auto r : rows) {
            levels.insert(it->second[r]);
        }
        std::vector<CodedColumn> out;
        for (auto lv = std::next(levels.begin(), levels.empty() ? 0 : 1); lv != levels.end(); ++lv) {
            CodedColumn c{name + "=" + *lv, {}, true};
            for (auto r : rows) {
                c.values.push_back(it->second[r] == *lv ? 1.0 : 0.0);
            }
            out.push_back(std::move(c));
        }
        return out;
    }
    throw InputError(source + ": interaction term '" + name + "' is not a declared column");
}

Standardization standardize_columns(Eigen::MatrixXd& m, const std::vector<bool>& dummy,
                                    const std::vector<std::string>& names, bool enabled)
{
    auto s = Standardization::identity(static_cast<std::size_t>(m.cols()));
    if (!enabled) {
        return s;
    }
    const auto n = m.rows();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        if (dummy[k]) {
            continue;
        }
        if (n < 2) {
            throw InputError("standardization needs at least two subjects");
        }
        const double mean = m.col(j).mean();
        const double sd = std::sqrt((m.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
        if (!(sd > 0.0)) {
            throw InputError("covariate '" + names[k] + "' is constant and cannot be standardized");
        }
        m.col(j) = (m.col(j).array() - mean) / sd;
        s.center[k] = mean;
        s.scale[k] = sd;
    }
    return s;
}

CovariateTable code_covariates(const RawCovariates& raw, const std::vector<std::size_t>& rows,
                               const DataSection& roles, const std::string& source)
{
    std::vector<CodedColumn> xcols;
    for (const auto& c : roles.x_columns) {
        auto coded = code_term(raw, c, rows, source);
        xcols.insert(xcols.end(), coded.begin(), coded.end());
    }
    std::vector<CodedColumn> zcols;
    for (const auto& c : roles.z_columns) {
        auto coded = code_term(raw, c, rows, source);
        zcols.insert(zcols.end(), coded.begin(), coded.end());
    }
    for (const auto& c : roles.categorical_columns) {
        auto coded = code_term(raw, c, rows, source);
        zcols.insert(zcols.end(), coded.begin(), coded.end());
    }
    for (const auto& term : roles.interactions) {
        const auto colon = term.find(':');
        if (colon == std::string::npos || term.find(':', colon + 1) != std::string::npos) {
            throw InputError(source + ": interaction '" + term + "' must have the form a:b");
        }
        const auto left = code_term(raw, csv::trim(term.substr(0, colon)), rows, source);
        const auto right = code_term(raw, csv::trim(term.substr(colon + 1)), rows, source);
        for (const auto& a : left) {
            for (const auto& b : right) {
                CodedColumn c{a.name + ":" + b.name, {}, a.dummy && b.dummy};
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    c.values.push_back(a.values[i] * b.values[i]);
                }
                zcols.push_back(std::move(c));
            }
        }
    }

    auto to_matrix = [&](const std::vector<CodedColumn>& cols, std::vector<std::string>& names,
                         std::vector<bool>& dummy) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            names.push_back(cols[j].name);
            dummy.push_back(cols[j].dummy);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j].values[i];
            }
        }
        return m;
    };
    CovariateTable table;
    std::vector<bool> xdummy;
    std::vector<bool> zdummy;
    Eigen::MatrixXd x = to_matrix(xcols, table.x_names, xdummy);
    Eigen::MatrixXd z = to_matrix(zcols, table.z_names, zdummy);
    table.x_standardization = standardize_columns(x, xdummy, table.x_names, roles.standardize);
    table.z_standardization = standardize_columns(z, zdummy, table.z_names, roles.standardize);

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return raw.ids[rows[a]] < raw.ids[rows[b]]; });
    for (auto i : order) {
        const auto r = rows[i];
        const auto ii = static_cast<Eigen::Index>(i);
        table.rows.push_back({raw.ids[r], x.row(ii).transpose(), z.row(ii).transpose(), raw.weights[r], raw.strata[r],
                              raw.psus[r]});
    }
    return table;
}

std::string join_ids(const std::vector<std::string>& ids)
{
    std::string out;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
        out += (i ? ", " : "") + ids[i];
    }
    if (ids.size() > shown) {
        out += ", ... (" + std::to_string(ids.size()) + " total)";
    }
    return out;
}

} // namespace

CovariateTable read_covariates_csv(std::istream& in, const DataSection& roles, const std::string& source)
{
    const auto raw = read_raw(in, roles, source);
    std::vector<std::size_t> rows(raw.ids.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return code_covariates(raw, rows, roles, source);
}

// ---------------------------------------------------------------- assembly

IngestResult assemble_dataset(const std::map<std::string, RawActivitySeries>& series, std::istream& covariates,
                              const DataSection& roles, const std::string& covariates_source)
{
    const auto raw = read_raw(covariates, roles, covariates_source);
    std::map<std::string, std::size_t> cov_index;
    for (std::size_t i = 0; i < raw.ids.size(); ++i) {
        cov_index[raw.ids[i]] = i;
    }
    std::vector<std::string> only_series;
    for (const auto& [id, s] : series) {
        if (cov_index.count(id) == 0) {
            only_series.push_back(id);
        }
    }
    std::vector<std::string> only_cov;
    for (const auto& [id, i] : cov_index) {
        if (series.count(id) == 0) {
            only_cov.push_back(id);
        }
    }
    if (!only_series.empty() || !only_cov.empty()) {
        std::string msg = "subject ids do not match across inputs";
        if (!only_series.empty()) {
            msg += "; only in series: " + join_ids(only_series);
        }
        if (!only_cov.empty()) {
            msg += "; only in covariates: " + join_ids(only_cov);
        }
        throw InputError(msg);
    }

    const ProbabilityGrid grid(roles.grid_size);
    const WearRule rule{roles.wear_days_required, roles.wear_hours_required};
    IngestResult result;
    std::map<std::string, Eigen::VectorXd> quantiles;
    for (const auto& [id, s] : series) {
        s.validate(); // times sorted
        const auto nonwear = detect_nonwear(s.measurements);
        std::map<long, std::pair<int, int>> per_day; // (recorded, wear)
        std::vector<double> wear_values;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const auto day = static_cast<long>(std::floor(s.times[k]));
            auto& [recorded, wear] = per_day[day];
            ++recorded;
            if (!nonwear[k]) {
                ++wear;
                wear_values.push_back(s.measurements[k]);
            }
        }
        auto& days = result.wear[id];
        for (const auto& [day, minutes] : per_day) {
            if (minutes.first > kMinutesPerDay) {
                throw InputError("subject " + id + ": more than " + std::to_string(kMinutesPerDay) +
                                 " minutes recorded on day " + std::to_string(day));
            }
            days.push_back({day, minutes.second});
        }
        if (wear_values.empty()) {
            result.exclusions.push_back({id, exclusion::no_wear_data});
        } else if (!qualifies(days, rule)) {
            result.exclusions.push_back({id, exclusion::insufficient_wear});
        } else {
            quantiles[id] = empirical_quantile(wear_values, grid).values();
        }
    }
    if (quantiles.empty()) {
        throw InputError("no subject passed the wear-time filter");
    }

    std::vector<std::size_t> rows;
    for (const auto& [id, q] : quantiles) {
        rows.push_back(cov_index.at(id));
    }
    const auto table = code_covariates(raw, rows, roles, covariates_source);
    std::vector<SubjectRecord> records;
    for (const auto& r : table.rows) {
        records.push_back({r.subject_id, quantiles.at(r.subject_id), r.x, r.z, r.weight, r.stratum, r.psu});
    }
    result.data = Dataset::from_records(grid, records, table.x_names, table.z_names);
    result.data.x_standardization = table.x_standardization;
    result.data.z_standardization = table.z_standardization;
    return result;
}

IngestResult assemble_dataset(const std::filesystem::path& series_file, const std::filesystem::path& covariates_file,
                              const DataSection& roles)
{
    std::ifstream series_in(series_file);
    if (!series_in) {
        throw InputError("cannot open " + series_file.string());
    }
    const auto series = read_series_csv(series_in, series_file.string());
    std::ifstream cov_in(covariates_file);
    if (!cov_in) {
        throw InputError("cannot open " + covariates_file.string());
    }
    return assemble_dataset(series, cov_in, roles, covariates_file.string());
}

void write_exclusions_csv(std::ostream& out, const std::vector<Exclusion>& exclusions)
{
    csv::write_row(out, {"subject_id", "reason"});
    for (const auto& e : exclusions) {
        csv::write_row(out, {e.subject_id, e.reason});
    }
}

} // namespace plfsi
