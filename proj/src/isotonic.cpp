#include "plfsi/isotonic.hpp"

#include "plfsi/errors.hpp"

#include <cmath>
#include <vector>

namespace plfsi {

namespace {

struct Block {
    double sum_wx;
    double sum_w;
    std::size_t end; // one past last index
    double mean() const { return sum_wx / sum_w; }
};

} // namespace

void project_monotone_inplace(std::span<double> values, std::span<const double> weights)
{
    const auto n = values.size();
    if (!weights.empty() && weights.size() != n) {
        throw InputError("isotonic weights length mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[i])) {
            throw InputError("isotonic projection of non-finite value");
        }
        if (!weights.empty() && !(weights[i] > 0.0)) {
            throw InputError("isotonic weights must be positive");
        }
    }

    // Fast exit keeps already-monotone input bit-identical.
    bool monotone = true;
    for (std::size_t i = 1; i < n && monotone; ++i) {
        monotone = values[i - 1] <= values[i];
    }
    if (monotone) {
        return;
    }

    std::vector<Block> stack;
    stack.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        stack.push_back({w * values[i], w, i + 1});
        while (stack.size() > 1 && stack[stack.size() - 2].mean() > stack.back().mean()) {
            const Block top = stack.back();
            stack.pop_back();
            stack.back().sum_wx += top.sum_wx;
            stack.back().sum_w += top.sum_w;
            stack.back().end = top.end;
        }
    }

    std::size_t begin = 0;
    for (const auto& b : stack) {
        const double v = b.mean();
        for (std::size_t i = begin; i < b.end; ++i) {
            values[i] = v;
        }
        begin = b.end;
    }
}

Eigen::VectorXd project_monotone(const Eigen::Ref<const Eigen::VectorXd>& values, std::span<const double> weights)
{
    Eigen::VectorXd out = values;
    project_monotone_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())), weights);
    return out;
}

} // namespace plfsi
