#include "plfsi/clustering.hpp"

#include "plfsi/csv.hpp"
#include "plfsi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

namespace plfsi {

std::vector<ResidualFunction> residuals(const Dataset& data, const Eigen::Ref<const Eigen::MatrixXd>& fitted)
{
    if (fitted.rows() != data.y.rows() || fitted.cols() != data.y.cols()) {
        throw InputError("fitted values are " + std::to_string(fitted.rows()) + "x" + std::to_string(fitted.cols()) +
                         " but the data has " + std::to_string(data.y.rows()) + "x" + std::to_string(data.y.cols()));
    }
    std::vector<ResidualFunction> out;
    out.reserve(data.ids.size());
    for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
        Eigen::VectorXd r = (data.y.row(i) - fitted.row(i)).transpose();
        if (!r.allFinite()) {
            throw NumericalError("non-finite residual for subject " + data.ids[static_cast<std::size_t>(i)]);
        }
        out.push_back({data.ids[static_cast<std::size_t>(i)], std::move(r)});
    }
    return out;
}

std::vector<ResidualFunction> residuals(const ModelFit& fit, const Dataset& data)
{
    if (!(fit.grid == data.grid)) {
        throw InputError("model grid has " + std::to_string(fit.grid.size()) + " points, data grid has " +
                         std::to_string(data.grid.size()));
    }
    return residuals(data, predict_dataset(fit, data));
}

Eigen::MatrixXd pairwise_l2(const ProbabilityGrid& grid, const std::vector<ResidualFunction>& curves)
{
    const auto n = static_cast<Eigen::Index>(curves.size());
    for (const auto& c : curves) {
        if (static_cast<std::size_t>(c.values.size()) != grid.size()) {
            throw InputError("residual curve for " + c.subject_id + " does not match the grid");
        }
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto& a = curves[static_cast<std::size_t>(i)].values;
            const auto& b = curves[static_cast<std::size_t>(j)].values;
            const double v = l2_distance(grid, a, b);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

namespace {

void check_distances(const Eigen::Ref<const Eigen::MatrixXd>& d)
{
    if (d.rows() != d.cols()) {
        throw InputError("distance matrix must be square");
    }
    if (!d.allFinite()) {
        throw InputError("distance matrix has non-finite entries");
    }
}

std::vector<int> canonical_labels(const std::vector<int>& labels, int k)
{
    std::vector<int> size(static_cast<std::size_t>(k), 0);
    std::vector<std::size_t> first(static_cast<std::size_t>(k), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++size[c];
        first[c] = std::min(first[c], i);
    }
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto ua = static_cast<std::size_t>(a);
        const auto ub = static_cast<std::size_t>(b);
        if (size[ua] != size[ub]) {
            return size[ua] > size[ub];
        }
        return first[ua] < first[ub];
    });
    std::vector<int> rename(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) {
        rename[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
    }
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = rename[static_cast<std::size_t>(labels[i])];
    }
    return out;
}

double cluster_term(double pair_sum, int count)
{
    return count > 0 ? pair_sum / (2.0 * count) : 0.0;
}

} // namespace

double within_dispersion(const Eigen::Ref<const Eigen::MatrixXd>& distances, const std::vector<int>& labels)
{
    check_distances(distances);
    if (static_cast<Eigen::Index>(labels.size()) != distances.rows()) {
        throw InputError("label count does not match the distance matrix");
    }
    std::map<int, std::pair<double, int>> acc; // label -> (sum over ordered pairs, size)
    const auto n = distances.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& slot = acc[labels[static_cast<std::size_t>(i)]];
        ++slot.second;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                slot.first += distances(i, j);
            }
        }
    }
    double total = 0.0;
    for (const auto& [label, v] : acc) {
        total += cluster_term(v.first, v.second);
    }
    return total;
}

double within_gini(const Eigen::Ref<const Eigen::MatrixXd>& distances, const std::vector<int>& labels)
{
    check_distances(distances);
    const auto n = distances.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n || n == 0) {
        throw InputError("label count does not match the distance matrix");
    }
    std::map<int, std::pair<double, int>> acc;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& slot = acc[labels[static_cast<std::size_t>(i)]];
        ++slot.second;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                slot.first += distances(i, j);
            }
        }
    }
    double total = 0.0;
    for (const auto& [label, v] : acc) {
        if (v.second > 1) {
            const double gmd = v.first / (static_cast<double>(v.second) * (v.second - 1));
            total += static_cast<double>(v.second) / static_cast<double>(n) * gmd;
        }
    }
    return total;
}

KGroupsResult kgroups_single(const Eigen::Ref<const Eigen::MatrixXd>& distances, int k, std::uint64_t seed)
{
    check_distances(distances);
    const auto n = distances.rows();
    if (k < 1) {
        throw InputError("k must be at least 1");
    }
    if (k > n) {
        throw InputError("k = " + std::to_string(k) + " exceeds the number of curves (" + std::to_string(n) + ")");
    }
    const auto nk = static_cast<std::size_t>(k);

    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < perm.size(); ++r) {
        labels[static_cast<std::size_t>(perm[r])] = static_cast<int>(r % nk);
    }

    // to_cluster(i, c) = sum of distances from i to members of c.
    Eigen::MatrixXd to_cluster = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index j = 0; j < n; ++j) {
        to_cluster.col(labels[static_cast<std::size_t>(j)]) += distances.col(j);
    }
    std::vector<int> size(nk, 0);
    std::vector<double> pair_sum(nk, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        ++size[static_cast<std::size_t>(c)];
        pair_sum[static_cast<std::size_t>(c)] += to_cluster(i, c);
    }
    auto total = [&] {
        double w = 0.0;
        for (std::size_t c = 0; c < nk; ++c) {
            w += cluster_term(pair_sum[c], size[c]);
        }
        return w;
    };

    KGroupsResult result;
    double current = total();
    bool moved = true;
    while (moved) {
        moved = false;
        ++result.sweeps;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = labels[static_cast<std::size_t>(i)];
            const auto ua = static_cast<std::size_t>(a);
            if (size[ua] == 1) {
                continue;
            }
            const double a_after = cluster_term(pair_sum[ua] - 2.0 * to_cluster(i, a), size[ua] - 1);
            const double a_before = cluster_term(pair_sum[ua], size[ua]);
            int best = a;
            double best_delta = 0.0;
            for (int b = 0; b < k; ++b) {
                if (b == a) {
                    continue;
                }
                const auto ub = static_cast<std::size_t>(b);
                const double delta = a_after - a_before + cluster_term(pair_sum[ub] + 2.0 * to_cluster(i, b), size[ub] + 1) -
                                     cluster_term(pair_sum[ub], size[ub]);
                if (delta < best_delta) {
                    best_delta = delta;
                    best = b;
                }
            }
            if (best == a || best_delta >= -1e-12 * std::max(current, 1e-300)) {
                continue;
            }
            const auto ub = static_cast<std::size_t>(best);
            pair_sum[ua] -= 2.0 * to_cluster(i, a);
            pair_sum[ub] += 2.0 * to_cluster(i, best);
            --size[ua];
            ++size[ub];
            to_cluster.col(a) -= distances.col(i);
            to_cluster.col(best) += distances.col(i);
            labels[static_cast<std::size_t>(i)] = best;
            current = total();
            result.trace.push_back(current);
            moved = true;
        }
    }
    result.labels = canonical_labels(labels, k);
    result.dispersion = within_dispersion(distances, result.labels);
    return result;
}

KGroupsResult kgroups(const Eigen::Ref<const Eigen::MatrixXd>& distances, int k, std::uint64_t seed, int restarts)
{
    if (restarts < 1) {
        throw InputError("restarts must be at least 1");
    }
    KGroupsResult best = kgroups_single(distances, k, seed);
    for (int r = 1; r < restarts; ++r) {
        KGroupsResult cand = kgroups_single(distances, k, seed + static_cast<std::uint64_t>(r));
        if (cand.dispersion < best.dispersion - 1e-12 * best.dispersion) {
            best = std::move(cand);
        }
    }
    return best;
}

ElbowCurve elbow_curve(const Eigen::Ref<const Eigen::MatrixXd>& distances, int k_max, std::uint64_t seed, int restarts)
{
    check_distances(distances);
    if (k_max < 1 || k_max > distances.rows()) {
        throw InputError("k_max must lie in [1, " + std::to_string(distances.rows()) + "]");
    }
    ElbowCurve curve;
    for (int k = 1; k <= k_max; ++k) {
        const auto res = kgroups(distances, k, seed, restarts);
        curve.points.push_back({k, res.dispersion, within_gini(distances, res.labels)});
    }
    const double drop = curve.points.front().dispersion - curve.points.back().dispersion;
    double best = -1.0;
    for (std::size_t i = 1; i + 1 < curve.points.size(); ++i) {
        const double bend =
            curve.points[i - 1].dispersion - 2.0 * curve.points[i].dispersion + curve.points[i + 1].dispersion;
        if (bend > best) {
            best = bend;
            curve.suggested_k = curve.points[i].k;
        }
    }
    if (best > 0.0 && drop > 0.0) {
        curve.curvature_share = best / drop;
    }
    curve.low_confidence = curve.curvature_share < kElbowConfidenceThreshold;
    return curve;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b)
{
    if (a.size() != b.size()) {
        throw InputError("labellings have different lengths");
    }
    const auto n = static_cast<double>(a.size());
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows;
    std::map<int, double> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cells[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0;
    for (const auto& [key, v] : cells) {
        index += pairs(v);
    }
    double sum_a = 0.0;
    for (const auto& [key, v] : rows) {
        sum_a += pairs(v);
    }
    double sum_b = 0.0;
    for (const auto& [key, v] : cols) {
        sum_b += pairs(v);
    }
    const double expected = n > 1.0 ? sum_a * sum_b / pairs(n) : 0.0;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

void write_clusters_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels)
{
    if (ids.size() != labels.size()) {
        throw InputError("id and label counts differ");
    }
    csv::write_row(out, {"subject_id", "cluster"});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        csv::write_row(out, {ids[i], std::to_string(labels[i] + 1)});
    }
}

void write_elbow_csv(std::ostream& out, const ElbowCurve& curve)
{
    csv::write_row(out, {"k", "dispersion", "gini"});
    for (const auto& p : curve.points) {
        csv::write_row(out, {std::to_string(p.k), csv::format(p.dispersion), csv::format(p.gini)});
    }
}

} // namespace plfsi
