#pragma once

#include "plfsi/dataset.hpp"
#include "plfsi/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace plfsi {

struct ResidualFunction {
    std::string subject_id;
    Eigen::VectorXd values; // Y_i(t) - Yhat_i(t) on the grid
};

/// Quantile residuals of a fit on its training data.
std::vector<ResidualFunction> residuals(const ModelFit& fit, const Dataset& data);

/// Residuals from already-computed fitted values (n x m).
std::vector<ResidualFunction> residuals(const Dataset& data, const Eigen::Ref<const Eigen::MatrixXd>& fitted);

/// Symmetric matrix of trapezoidal L2 distances, zero diagonal.
Eigen::MatrixXd pairwise_l2(const ProbabilityGrid& grid, const std::vector<ResidualFunction>& curves);

struct KGroupsResult {
    std::vector<int> labels; // 0..k-1, canonical order (size desc, then first member)
    double dispersion = 0.0; // sum_c (n_c / 2) * mean_{i,j in c} d_ij
    int sweeps = 0;
    std::vector<double> trace; // dispersion after each accepted move
};

/// Energy-distance k-groups by first-variation point moves from a seeded
/// random partition, until no single move lowers the dispersion.
KGroupsResult kgroups_single(const Eigen::Ref<const Eigen::MatrixXd>& distances, int k, std::uint64_t seed);

/// Best of `restarts` runs with seeds seed, seed+1, ...
KGroupsResult kgroups(const Eigen::Ref<const Eigen::MatrixXd>& distances, int k, std::uint64_t seed, int restarts = 10);

/// Total within-cluster energy dispersion of a labelling.
double within_dispersion(const Eigen::Ref<const Eigen::MatrixXd>& distances, const std::vector<int>& labels);

/// Size-weighted mean of within-cluster Gini mean differences (mean distance
/// over distinct pairs; singletons contribute zero).
double within_gini(const Eigen::Ref<const Eigen::MatrixXd>& distances, const std::vector<int>& labels);

struct ElbowPoint {
    int k = 0;
    double dispersion = 0.0;
    double gini = 0.0;
};

struct ElbowCurve {
    std::vector<ElbowPoint> points;
    int suggested_k = 1;
    // Largest discrete curvature relative to the total drop W(1) - W(k_max).
    double curvature_share = 0.0;
    bool low_confidence = true;
};

inline constexpr double kElbowConfidenceThreshold = 0.3;

/// Dispersion for k = 1..k_max with the maximum-curvature suggestion
/// argmax_k W(k-1) - 2 W(k) + W(k+1).
ElbowCurve elbow_curve(const Eigen::Ref<const Eigen::MatrixXd>& distances, int k_max, std::uint64_t seed,
                       int restarts = 10);

/// Adjusted Rand index between two labellings of the same items.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

void write_clusters_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels);
void write_elbow_csv(std::ostream& out, const ElbowCurve& curve);

} // namespace plfsi
