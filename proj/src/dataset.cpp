#include "plfsi/dataset.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>

namespace plfsi {

using nlohmann::json;

Standardization Standardization::identity(std::size_t p)
{
    return {std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
}

Eigen::VectorXd Standardization::apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const
{
    if (empty()) {
        return raw;
    }
    if (static_cast<std::size_t>(raw.size()) != center.size()) {
        throw InputError("covariate vector length " + std::to_string(raw.size()) + " does not match " +
                         std::to_string(center.size()) + " standardized columns");
    }
    Eigen::VectorXd out(raw.size());
    for (Eigen::Index j = 0; j < raw.size(); ++j) {
        out[j] = (raw[j] - center[static_cast<std::size_t>(j)]) / scale[static_cast<std::size_t>(j)];
    }
    return out;
}

SubjectRecord Dataset::record(Eigen::Index i) const
{
    const auto k = static_cast<std::size_t>(i);
    return {ids[k], y.row(i).transpose(), x.row(i).transpose(), z.row(i).transpose(), weights[k], survey.strata[k],
            survey.psus[k]};
}

void Dataset::validate() const
{
    const auto nn = static_cast<std::size_t>(n());
    if (static_cast<std::size_t>(y.cols()) != grid.size()) {
        throw InputError("response width does not match grid size");
    }
    if (ids.size() != nn || static_cast<std::size_t>(x.rows()) != nn || static_cast<std::size_t>(z.rows()) != nn ||
        weights.size() != nn || survey.strata.size() != nn || survey.psus.size() != nn) {
        throw InputError("dataset components have inconsistent lengths");
    }
    for (std::size_t i = 0; i < nn; ++i) {
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
            throw InputError("subject " + ids[i] + ": survey weight must be positive");
        }
    }
    if (!y.allFinite() || !x.allFinite() || !z.allFinite()) {
        throw InputError("dataset contains non-finite values");
    }
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index j = 1; j < y.cols(); ++j) {
            if (y(i, j) < y(i, j - 1)) {
                throw InputError("subject " + ids[static_cast<std::size_t>(i)] + ": response is not nondecreasing");
            }
        }
    }
}

Dataset Dataset::from_records(const ProbabilityGrid& grid, const std::vector<SubjectRecord>& records,
                              std::vector<std::string> x_names, std::vector<std::string> z_names)
{
    Dataset d{grid, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    const auto n = static_cast<Eigen::Index>(records.size());
    const Eigen::Index px = records.empty() ? 0 : records.front().x.size();
    const Eigen::Index pz = records.empty() ? 0 : records.front().z.size();
    d.y.resize(n, static_cast<Eigen::Index>(grid.size()));
    d.x.resize(n, px);
    d.z.resize(n, pz);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        if (static_cast<std::size_t>(r.quantiles.size()) != grid.size() || r.x.size() != px || r.z.size() != pz) {
            throw InputError("subject " + r.subject_id + ": dimensions differ from the first record");
        }
        d.ids.push_back(r.subject_id);
        d.y.row(i) = r.quantiles.transpose();
        d.x.row(i) = r.x.transpose();
        d.z.row(i) = r.z.transpose();
        d.weights.push_back(r.weight);
        d.survey.strata.push_back(r.stratum);
        d.survey.psus.push_back(r.psu.empty() ? r.subject_id : r.psu);
    }
    for (Eigen::Index j = static_cast<Eigen::Index>(x_names.size()); j < px; ++j) {
        x_names.push_back("x" + std::to_string(j + 1));
    }
    for (Eigen::Index j = static_cast<Eigen::Index>(z_names.size()); j < pz; ++j) {
        z_names.push_back("z" + std::to_string(j + 1));
    }
    d.x_names = std::move(x_names);
    d.z_names = std::move(z_names);
    d.x_standardization = Standardization::identity(static_cast<std::size_t>(px));
    d.z_standardization = Standardization::identity(static_cast<std::size_t>(pz));
    d.validate();
    return d;
}

namespace {

json standardization_json(const Standardization& s)
{
    return json{{"center", s.center}, {"scale", s.scale}};
}

Standardization standardization_from(const json& j)
{
    return {j.at("center").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

} // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::string& extra_manifest)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "quantiles.csv");
        write_quantile_csv(out, {data.grid, data.ids, data.y});
    }
    {
        std::ofstream out(dir / "covariates.csv");
        std::vector<std::string> header{"subject_id"};
        header.insert(header.end(), data.x_names.begin(), data.x_names.end());
        header.insert(header.end(), data.z_names.begin(), data.z_names.end());
        header.insert(header.end(), {"weight", "stratum", "psu"});
        csv::write_row(out, header);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            std::vector<std::string> row{data.ids[k]};
            for (Eigen::Index j = 0; j < data.p_x(); ++j) {
                row.push_back(csv::format(data.x(i, j)));
            }
            for (Eigen::Index j = 0; j < data.p_z(); ++j) {
                row.push_back(csv::format(data.z(i, j)));
            }
            row.push_back(csv::format(data.weights[k]));
            row.push_back(data.survey.strata[k]);
            row.push_back(data.survey.psus[k]);
            csv::write_row(out, row);
        }
    }
    json manifest = json::parse(extra_manifest);
    manifest["format_version"] = kDatasetFormatVersion;
    manifest["grid"] = {{"type", "equidistant"}, {"m", data.grid.size()}};
    manifest["n_subjects"] = data.n();
    manifest["x_columns"] = data.x_names;
    manifest["z_columns"] = data.z_names;
    manifest["standardization"] = {{"x", standardization_json(data.x_standardization)},
                                   {"z", standardization_json(data.z_standardization)}};
    manifest["files"] = {{"quantiles", "quantiles.csv"}, {"covariates", "covariates.csv"}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir)
{
    const auto manifest_path = dir / "manifest.json";
    std::ifstream min(manifest_path);
    if (!min) {
        throw InputError("cannot open '" + manifest_path.string() + "'");
    }
    json manifest;
    try {
        manifest = json::parse(min);
    } catch (const json::exception& e) {
        throw InputError(manifest_path.string() + ": " + e.what());
    }
    const auto x_names = manifest.at("x_columns").get<std::vector<std::string>>();
    const auto z_names = manifest.at("z_columns").get<std::vector<std::string>>();

    const auto qpath = (dir / "quantiles.csv").string();
    std::ifstream qin(qpath);
    if (!qin) {
        throw InputError("cannot open '" + qpath + "'");
    }
    auto table = read_quantile_csv(qin, qpath);
    if (table.grid.size() != manifest.at("grid").at("m").get<std::size_t>()) {
        throw InputError(qpath + ": grid size disagrees with manifest");
    }

    const auto cpath = (dir / "covariates.csv").string();
    const auto doc = csv::read_file(cpath);
    std::map<std::string, const csv::Row*> by_id;
    const auto id_col = doc.column("subject_id", cpath);
    for (const auto& row : doc.rows) {
        by_id[row.fields[id_col]] = &row;
    }
    std::vector<std::size_t> x_cols, z_cols;
    for (const auto& nme : x_names) {
        x_cols.push_back(doc.column(nme, cpath));
    }
    for (const auto& nme : z_names) {
        z_cols.push_back(doc.column(nme, cpath));
    }
    const auto w_col = doc.column("weight", cpath);
    const auto s_col = doc.column("stratum", cpath);
    const auto p_col = doc.column("psu", cpath);

    std::vector<SubjectRecord> records;
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        const auto it = by_id.find(table.ids[i]);
        if (it == by_id.end()) {
            throw InputError(cpath + ": no covariates for subject '" + table.ids[i] + "'");
        }
        const auto& row = *it->second;
        SubjectRecord r;
        r.subject_id = table.ids[i];
        r.quantiles = table.values.row(static_cast<Eigen::Index>(i)).transpose();
        r.x.resize(static_cast<Eigen::Index>(x_cols.size()));
        r.z.resize(static_cast<Eigen::Index>(z_cols.size()));
        for (std::size_t j = 0; j < x_cols.size(); ++j) {
            r.x[static_cast<Eigen::Index>(j)] = csv::parse_double(row.fields[x_cols[j]], cpath, row.line);
        }
        for (std::size_t j = 0; j < z_cols.size(); ++j) {
            r.z[static_cast<Eigen::Index>(j)] = csv::parse_double(row.fields[z_cols[j]], cpath, row.line);
        }
        r.weight = csv::parse_double(row.fields[w_col], cpath, row.line);
        r.stratum = row.fields[s_col];
        r.psu = row.fields[p_col];
        records.push_back(std::move(r));
    }
    Dataset data = Dataset::from_records(table.grid, records, x_names, z_names);
    if (manifest.contains("standardization")) {
        data.x_standardization = standardization_from(manifest["standardization"].at("x"));
        data.z_standardization = standardization_from(manifest["standardization"].at("z"));
    }
    return data;
}

} // namespace plfsi
