#pragma once

#include <Eigen/Dense>

#include <span>

namespace plfsi {

/// Weighted L2 projection onto nondecreasing vectors (pool-adjacent-violators).
/// Empty `weights` means uniform weights. Ties are allowed in the output.
/// Throws InputError on non-finite values or non-positive weights.
Eigen::VectorXd project_monotone(const Eigen::Ref<const Eigen::VectorXd>& values,
                                 std::span<const double> weights = {});

/// In-place variant used on hot paths; `values` is overwritten.
void project_monotone_inplace(std::span<double> values, std::span<const double> weights = {});

} // namespace plfsi
