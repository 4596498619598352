#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rtk/engines.hpp"
#include "rtk/error.hpp"

namespace rtk {

ColumnWidthSolution solve_column_widths(std::span<const double> rest, std::span<const double> weights, double target,
                                        double min_width) {
    const std::size_t n = rest.size();
    if (n == 0 || weights.size() != n) {
        throw ArgumentError("column widths: rest widths and weights must be non-empty and aligned");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!(weights[j] > 0.0) || !(rest[j] >= min_width)) {
            throw ArgumentError("column widths: weights must be positive and rest widths >= the minimum");
        }
    }
    if (static_cast<double>(n) * min_width > target + 1e-12) {
        throw InfeasibleError("column widths: " + std::to_string(n) + " columns of at least " +
                              std::to_string(min_width) + " px cannot fit in " + std::to_string(target) + " px");
    }

    ColumnWidthSolution sol;
    sol.widths.assign(n, 0.0);
    sol.at_lower_bound.assign(n, false);
    double mu = 0.0;
    // Stationarity on the free set: w_j = rest_j + mu / weight_j. Columns
    // pushed below the bound are pinned and the multiplier recomputed.
    while (true) {
        ++sol.iterations;
        double budget = target;
        double free_rest = 0.0;
        double free_inv = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (sol.at_lower_bound[j]) {
                budget -= min_width;
            } else {
                free_rest += rest[j];
                free_inv += 1.0 / weights[j];
            }
        }
        mu = free_inv > 0.0 ? (budget - free_rest) / free_inv : 0.0;
        bool clamped = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (sol.at_lower_bound[j]) {
                sol.widths[j] = min_width;
                continue;
            }
            sol.widths[j] = rest[j] + mu / weights[j];
            if (sol.widths[j] < min_width - 1e-12) {
                sol.at_lower_bound[j] = true;
                clamped = true;
            }
        }
        if (!clamped) {
            break;
        }
    }

    // Lagrangian: sum S (w - w0)^2 - nu (sum w - T) - sum lambda_j (w_j - min).
    const double nu = 2.0 * mu;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dev = sol.widths[j] - rest[j];
        sol.objective += weights[j] * dev * dev;
        sum += sol.widths[j];
        if (sol.at_lower_bound[j]) {
            const double lambda = 2.0 * weights[j] * dev - nu;
            sol.dual_violation = std::max(sol.dual_violation, -lambda);
        } else {
            sol.kkt_residual = std::max(sol.kkt_residual, std::abs(2.0 * weights[j] * dev - nu));
        }
    }
    sol.constraint_residual = std::abs(sum - target);
    return sol;
}

RetargetOutcome aad_warp(const RasterImage& img, const ImportanceMap& imp, int target_width, int target_height,
                         const EngineParams& params) {
    if (imp.width() != img.width() || imp.height() != img.height()) {
        throw DimensionMismatchError("aad: importance map does not match the image");
    }
    if (target_height != img.height()) {
        if (target_width != img.width()) {
            throw ArgumentError("aad: only one dimension may change");
        }
        auto out = aad_warp(transpose(img), ImportanceMap(transpose(imp.field())), target_height, img.width(), params);
        out.result = transpose(out.result);
        return out;
    }
    if (target_width < 1) {
        throw ArgumentError("aad: target width must be >= 1");
    }

    const int w = img.width();
    const int h = img.height();
    const int columns = std::max(1, std::min(params.aad_grid_columns, w / 2));

    std::vector<int> start(static_cast<std::size_t>(columns) + 1);
    for (int j = 0; j <= columns; ++j) {
        start[static_cast<std::size_t>(j)] = static_cast<int>(static_cast<long long>(j) * w / columns);
    }
    std::vector<double> rest(static_cast<std::size_t>(columns));
    std::vector<double> weight(static_cast<std::size_t>(columns));
    const IntegralImage table(imp.field());
    for (int j = 0; j < columns; ++j) {
        const int x0 = start[static_cast<std::size_t>(j)];
        const int cw = start[static_cast<std::size_t>(j) + 1] - x0;
        rest[static_cast<std::size_t>(j)] = cw;
        weight[static_cast<std::size_t>(j)] =
            table.rect_sum(x0, 0, cw, h) / (static_cast<double>(cw) * h) + params.aad_saliency_floor;
    }

    const auto sol = solve_column_widths(rest, weight, target_width, params.aad_min_width);

    // Output column boundaries; the last one is pinned to the exact target.
    std::vector<double> bound(static_cast<std::size_t>(columns) + 1, 0.0);
    for (int j = 0; j < columns; ++j) {
        bound[static_cast<std::size_t>(j) + 1] = bound[static_cast<std::size_t>(j)] + sol.widths[static_cast<std::size_t>(j)];
    }
    bound.back() = target_width;

    RasterImage out(target_width, h);
    int j = 0;
    for (int x = 0; x < target_width; ++x) {
        const double cx = x + 0.5;
        while (j < columns - 1 && cx >= bound[static_cast<std::size_t>(j) + 1]) {
            ++j;
        }
        const auto ju = static_cast<std::size_t>(j);
        double u = start[ju] + (cx - bound[ju]) * (rest[ju] / sol.widths[ju]) - 0.5;
        u = std::clamp(u, 0.0, static_cast<double>(w - 1));
        const int u0 = static_cast<int>(std::floor(u));
        const int u1 = std::min(u0 + 1, w - 1);
        const double t = u - u0;
        for (int y = 0; y < h; ++y) {
            for (int c = 0; c < RasterImage::kChannels; ++c) {
                out.at(x, y, c) = std::clamp(img.at(u0, y, c) * (1.0 - t) + img.at(u1, y, c) * t, 0.0, 1.0);
            }
        }
    }

    RetargetOutcome outcome;
    outcome.engine = EngineId::aad_warp;
    outcome.result = std::move(out);
    outcome.diagnostics = {
        {"columns", columns},
        {"objective", sol.objective},
        {"kkt_residual", sol.kkt_residual},
        {"constraint_residual", sol.constraint_residual},
        {"dual_violation", sol.dual_violation},
        {"clamped_columns",
         static_cast<double>(std::count(sol.at_lower_bound.begin(), sol.at_lower_bound.end(), true))},
    };
    return outcome;
}

}  // namespace rtk
