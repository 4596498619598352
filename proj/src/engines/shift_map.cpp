#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rtk/engines.hpp"
#include "rtk/error.hpp"
#include "rtk/maxflow.hpp"

namespace rtk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kImprovement = 1e-12;

double norm_diff(const double* a, const double* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

bool ShiftLabeling::is_monotone() const {
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < output_width; ++x) {
            const int s = at(x, y);
            if (s < 0 || s > max_shift) {
                return false;
            }
            if (x > 0 && s < at(x - 1, y)) {
                return false;
            }
        }
    }
    return true;
}

ShiftMapProblem::ShiftMapProblem(const RasterImage& img, const ImportanceMap& imp, int target_width,
                                 const ShiftMapParams& params)
    : source_width_(img.width()),
      output_width_(target_width),
      height_(img.height()),
      data_weight_(params.data_weight),
      gradient_weight_(params.gradient_weight) {
    if (imp.width() != img.width() || imp.height() != img.height()) {
        throw DimensionMismatchError("shift-map: importance map does not match the image");
    }
    if (target_width < 1 || target_width > img.width()) {
        throw ArgumentError("shift-map: target width must lie in [1, source width]");
    }
    const int w = source_width_;
    const int h = height_;
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    color_.resize(n * 3);
    gradient_.resize(n * 6);
    importance_.resize(n);
    row_importance_.assign(static_cast<std::size_t>(h), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0);
            const int yd = std::min(y + 1, h - 1);
            for (int c = 0; c < 3; ++c) {
                color_[p * 3 + static_cast<std::size_t>(c)] = img.at(x, y, c);
                gradient_[p * 6 + static_cast<std::size_t>(2 * c)] = 0.5 * (img.at(xr, y, c) - img.at(xl, y, c));
                gradient_[p * 6 + static_cast<std::size_t>(2 * c + 1)] = 0.5 * (img.at(x, yd, c) - img.at(x, yu, c));
            }
            importance_[p] = imp.at(x, y);
            row_importance_[static_cast<std::size_t>(y)] += imp.at(x, y);
        }
    }
}

double ShiftMapProblem::unary(int x, int y, int s) const {
    return data_weight_ *
           (1.0 - importance_[static_cast<std::size_t>(y) * static_cast<std::size_t>(source_width_) +
                              static_cast<std::size_t>(x + s)]);
}

double ShiftMapProblem::phi(int x, int y, int a, int b) const {
    const auto row = static_cast<std::size_t>(y) * static_cast<std::size_t>(source_width_);
    const auto pa = row + static_cast<std::size_t>(x + a);
    const auto pb = row + static_cast<std::size_t>(x + b);
    return norm_diff(&color_[pa * 3], &color_[pb * 3], 3) +
           gradient_weight_ * norm_diff(&gradient_[pa * 6], &gradient_[pb * 6], 6);
}

ShiftMapEnergy ShiftMapProblem::energy(const ShiftLabeling& labels) const {
    ShiftMapEnergy e;
    for (int y = 0; y < height_; ++y) {
        double used = 0.0;
        for (int x = 0; x < output_width_; ++x) {
            used += importance_[static_cast<std::size_t>(y) * static_cast<std::size_t>(source_width_) +
                                static_cast<std::size_t>(x + labels.at(x, y))];
            if (x + 1 < output_width_) {
                e.smoothness += horizontal(x, y, labels.at(x, y), labels.at(x + 1, y));
            }
            if (y + 1 < height_) {
                e.smoothness += vertical(x, y, labels.at(x, y), labels.at(x, y + 1));
            }
        }
        e.data += data_weight_ * (row_importance_[static_cast<std::size_t>(y)] - used);
    }
    return e;
}

namespace {

// Exact optimum of one row given fixed neighbour rows, over labels within
// `radius` of the current ones. Returns true when the row changed for the
// better. `use_vertical` false ignores the neighbour rows entirely.
bool refine_row(const ShiftMapProblem& pb, ShiftLabeling& labels, int y, int radius, bool use_vertical) {
    const int wo = pb.output_width();
    const int h = pb.height();
    const int r_max = pb.max_shift();
    const int span = std::min(2 * radius + 1, r_max + 1);

    std::vector<int> lo(static_cast<std::size_t>(wo));
    for (int x = 0; x < wo; ++x) {
        lo[static_cast<std::size_t>(x)] = std::clamp(labels.at(x, y) - radius, 0, std::max(0, r_max - span + 1));
    }

    auto local = [&](int x, int s) {
        double c = pb.unary(x, y, s);
        if (use_vertical) {
            if (y > 0) {
                c += pb.vertical(x, y - 1, labels.at(x, y - 1), s);
            }
            if (y + 1 < h) {
                c += pb.vertical(x, y, s, labels.at(x, y + 1));
            }
        }
        return c;
    };

    const auto states = static_cast<std::size_t>(span);
    std::vector<double> cost(static_cast<std::size_t>(wo) * states, kInf);
    std::vector<int> parent(static_cast<std::size_t>(wo) * states, -1);
    for (int k = 0; k < span; ++k) {
        cost[static_cast<std::size_t>(k)] = local(0, lo[0] + k);
    }
    for (int x = 1; x < wo; ++x) {
        const int plo = lo[static_cast<std::size_t>(x) - 1];
        const int clo = lo[static_cast<std::size_t>(x)];
        for (int k = 0; k < span; ++k) {
            const int s = clo + k;
            double best = kInf;
            int arg = -1;
            for (int pk = 0; pk < span; ++pk) {
                const int ps = plo + pk;
                if (ps > s) {
                    break;
                }
                const double prev = cost[static_cast<std::size_t>(x - 1) * states + static_cast<std::size_t>(pk)];
                if (prev == kInf) {
                    continue;
                }
                const double v = prev + pb.horizontal(x - 1, y, ps, s);
                if (v < best) {
                    best = v;
                    arg = pk;
                }
            }
            if (arg >= 0) {
                cost[static_cast<std::size_t>(x) * states + static_cast<std::size_t>(k)] = best + local(x, s);
                parent[static_cast<std::size_t>(x) * states + static_cast<std::size_t>(k)] = arg;
            }
        }
    }

    double current = 0.0;
    for (int x = 0; x < wo; ++x) {
        current += local(x, labels.at(x, y));
        if (x > 0) {
            current += pb.horizontal(x - 1, y, labels.at(x - 1, y), labels.at(x, y));
        }
    }

    const auto last = static_cast<std::size_t>(wo - 1) * states;
    int best_k = -1;
    for (int k = 0; k < span; ++k) {
        const double v = cost[last + static_cast<std::size_t>(k)];
        if (v < kInf && (best_k < 0 || v < cost[last + static_cast<std::size_t>(best_k)])) {
            best_k = k;
        }
    }
    if (best_k < 0 || !(cost[last + static_cast<std::size_t>(best_k)] < current - kImprovement)) {
        return false;
    }
    for (int x = wo - 1, k = best_k; x >= 0; --x) {
        labels.at(x, y) = lo[static_cast<std::size_t>(x)] + k;
        k = parent[static_cast<std::size_t>(x) * states + static_cast<std::size_t>(k)];
    }
    return true;
}

// Accumulates a pairwise binary energy E(xp, xq) = {A, B, C, D} for
// (0,0), (0,1), (1,0), (1,1) into linear terms and an xp=0, xq=1 edge.
void add_pairwise(MaxFlowGraph& g, std::vector<double>& linear, int p, int q, double a, double b, double c, double d) {
    linear[static_cast<std::size_t>(p)] += c - a;
    linear[static_cast<std::size_t>(q)] += d - c;
    const double cross = b + c - a - d;
    if (cross > 0.0) {
        g.add_edge(p, q, cross);
    }
}

// One alpha-expansion: every pixel either keeps its label or switches to
// alpha. Node on the sink side of the cut = switches.
bool expand(const ShiftMapProblem& pb, ShiftLabeling& labels, int alpha, double& energy) {
    const int wo = pb.output_width();
    const int h = pb.height();
    const int n = wo * h;
    MaxFlowGraph g(n);
    std::vector<double> linear(static_cast<std::size_t>(n), 0.0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wo; ++x) {
            const int p = y * wo + x;
            const int cur = labels.at(x, y);
            linear[static_cast<std::size_t>(p)] += pb.unary(x, y, alpha) - pb.unary(x, y, cur);
            if (x + 1 < wo) {
                const int q = p + 1;
                const int nxt = labels.at(x + 1, y);
                const double ea = pb.horizontal(x, y, cur, nxt);
                double eb = pb.horizontal(x, y, cur, alpha);
                double ec = pb.horizontal(x, y, alpha, nxt);
                // Monotonicity: (keep, alpha) needs alpha >= cur; (alpha, keep) needs alpha <= nxt.
                if (alpha < cur) {
                    g.add_edge(p, q, kInf);
                    eb = ea - ec;
                }
                if (alpha > nxt) {
                    g.add_edge(q, p, kInf);
                    ec = ea - eb;
                }
                add_pairwise(g, linear, p, q, ea, eb, ec, 0.0);
            }
            if (y + 1 < h) {
                const int q = p + wo;
                const int below = labels.at(x, y + 1);
                add_pairwise(g, linear, p, q, pb.vertical(x, y, cur, below), pb.vertical(x, y, cur, alpha),
                             pb.vertical(x, y, alpha, below), 0.0);
            }
        }
    }
    for (int p = 0; p < n; ++p) {
        const double k = linear[static_cast<std::size_t>(p)];
        if (k > 0.0) {
            g.add_terminal_edges(p, k, 0.0);
        } else if (k < 0.0) {
            g.add_terminal_edges(p, 0.0, -k);
        }
    }
    g.solve();

    ShiftLabeling proposal = labels;
    bool changed = false;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wo; ++x) {
            if (!g.in_source_set(y * wo + x) && proposal.at(x, y) != alpha) {
                proposal.at(x, y) = alpha;
                changed = true;
            }
        }
    }
    if (!changed || !proposal.is_monotone()) {
        return false;
    }
    const double e = pb.energy(proposal).total();
    if (e < energy - kImprovement) {
        labels = std::move(proposal);
        energy = e;
        return true;
    }
    return false;
}

ShiftLabeling zero_labels(const ShiftMapProblem& pb) {
    ShiftLabeling l;
    l.output_width = pb.output_width();
    l.height = pb.height();
    l.max_shift = pb.max_shift();
    l.shifts.assign(static_cast<std::size_t>(l.output_width) * static_cast<std::size_t>(l.height), 0);
    return l;
}

bool refine_sweep(const ShiftMapProblem& pb, ShiftLabeling& labels, int radius) {
    bool changed = false;
    for (int y = 0; y < pb.height(); ++y) {
        changed = refine_row(pb, labels, y, radius, true) || changed;
    }
    return changed;
}

// Block-average downsampling by an integer factor.
RasterImage box_downsample(const RasterImage& img, int f) {
    const int w = (img.width() + f - 1) / f;
    const int h = (img.height() + f - 1) / f;
    RasterImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x1 = std::min((x + 1) * f, img.width());
            const int y1 = std::min((y + 1) * f, img.height());
            const double n = static_cast<double>((x1 - x * f) * (y1 - y * f));
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int yy = y * f; yy < y1; ++yy) {
                    for (int xx = x * f; xx < x1; ++xx) {
                        acc += img.at(xx, yy, c);
                    }
                }
                out.at(x, y, c) = std::clamp(acc / n, 0.0, 1.0);
            }
        }
    }
    return out;
}

ImportanceMap box_downsample(const ImportanceMap& imp, int f) {
    const int w = (imp.width() + f - 1) / f;
    const int h = (imp.height() + f - 1) / f;
    ScalarField out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x1 = std::min((x + 1) * f, imp.width());
            const int y1 = std::min((y + 1) * f, imp.height());
            double acc = 0.0;
            for (int yy = y * f; yy < y1; ++yy) {
                for (int xx = x * f; xx < x1; ++xx) {
                    acc += imp.at(xx, yy);
                }
            }
            out.at(x, y) = std::clamp(acc / static_cast<double>((x1 - x * f) * (y1 - y * f)), 0.0, 1.0);
        }
    }
    return ImportanceMap(std::move(out));
}

}  // namespace

ShiftLabeling optimize_shift_labels(const ShiftMapProblem& problem, const ShiftMapParams& params,
                                    ShiftMapSolveStats* stats, const std::optional<ShiftLabeling>& initial) {
    ShiftMapSolveStats local_stats;
    ShiftMapSolveStats& st = stats != nullptr ? *stats : local_stats;
    const int r_max = problem.max_shift();

    ShiftLabeling labels = zero_labels(problem);
    if (r_max == 0) {
        return labels;
    }
    if (initial) {
        if (initial->output_width != labels.output_width || initial->height != labels.height ||
            initial->max_shift != r_max || !initial->is_monotone()) {
            throw ArgumentError("shift-map: initial labeling does not fit the problem");
        }
        labels = *initial;
    } else {
        // Each row on its own, full label range.
        for (int y = 0; y < problem.height(); ++y) {
            refine_row(problem, labels, y, r_max, false);
        }
    }

    double energy = problem.energy(labels).total();
    for (int cycle = 0; cycle < params.max_expansion_cycles; ++cycle) {
        bool improved = false;
        for (int alpha = 0; alpha <= r_max; ++alpha) {
            if (expand(problem, labels, alpha, energy)) {
                ++st.expansion_moves;
                improved = true;
            }
        }
        for (int sweep = 0; sweep < params.max_refine_sweeps; ++sweep) {
            ++st.refine_sweeps;
            if (!refine_sweep(problem, labels, params.refine_radius)) {
                break;
            }
            improved = true;
        }
        energy = problem.energy(labels).total();
        if (!improved) {
            break;
        }
    }
    return labels;
}

RasterImage render_shift_map(const RasterImage& img, const ShiftLabeling& labels) {
    if (labels.height != img.height() || labels.output_width + labels.max_shift != img.width()) {
        throw ArgumentError("shift-map: labeling does not match the image");
    }
    RasterImage out(labels.output_width, labels.height);
    for (int y = 0; y < labels.height; ++y) {
        for (int x = 0; x < labels.output_width; ++x) {
            const int sx = x + labels.at(x, y);
            if (sx < 0 || sx >= img.width()) {
                throw BoundsError("shift-map: label reads outside the source");
            }
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = img.at(sx, y, c);
            }
        }
    }
    return out;
}

RetargetOutcome shift_map(const RasterImage& img, const ImportanceMap& imp, int target_width,
                          const ShiftMapParams& params) {
    const int w = img.width();
    const int reduction = w - target_width;
    if (reduction < 0) {
        throw ArgumentError("shift-map: only width reduction is supported");
    }
    if (reduction > kShiftMapMaxReduction * w) {
        throw ArgumentError("shift-map: reduction of " + std::to_string(reduction) + " px exceeds 50% of width " +
                            std::to_string(w));
    }
    const ShiftMapProblem problem(img, imp, target_width, params);
    ShiftMapSolveStats stats;
    ShiftLabeling labels;

    if (w > params.coarse_max_width && reduction > 0) {
        const int f = (w + params.coarse_max_width - 1) / params.coarse_max_width;
        const auto coarse_img = box_downsample(img, f);
        const auto coarse_imp = box_downsample(imp, f);
        const int coarse_reduction =
            std::min(static_cast<int>(std::lround(static_cast<double>(reduction) / f)), coarse_img.width() / 2);
        std::optional<ShiftLabeling> initial;
        if (coarse_reduction >= 1) {
            stats.coarse_to_fine = true;
            const ShiftMapProblem coarse(coarse_img, coarse_imp, coarse_img.width() - coarse_reduction, params);
            const auto cl = optimize_shift_labels(coarse, params, &stats);
            ShiftLabeling up = zero_labels(problem);
            for (int y = 0; y < up.height; ++y) {
                const int yc = std::min(y / f, cl.height - 1);
                for (int x = 0; x < up.output_width; ++x) {
                    const int xc = std::min(x / f, cl.output_width - 1);
                    const double scaled = static_cast<double>(cl.at(xc, yc)) * reduction / coarse_reduction;
                    up.at(x, y) = std::clamp(static_cast<int>(std::lround(scaled)), 0, reduction);
                }
            }
            initial = std::move(up);
        }
        if (initial) {
            labels = std::move(*initial);
            for (int sweep = 0; sweep < params.max_refine_sweeps; ++sweep) {
                ++stats.refine_sweeps;
                if (!refine_sweep(problem, labels, params.refine_radius)) {
                    break;
                }
            }
        } else {
            labels = zero_labels(problem);
            for (int y = 0; y < problem.height(); ++y) {
                refine_row(problem, labels, y, reduction, false);
            }
            for (int sweep = 0; sweep < params.max_refine_sweeps; ++sweep) {
                ++stats.refine_sweeps;
                if (!refine_sweep(problem, labels, reduction)) {
                    break;
                }
            }
        }
    } else {
        labels = optimize_shift_labels(problem, params, &stats);
    }

    const auto e = problem.energy(labels);
    RetargetOutcome out;
    out.engine = EngineId::shift_map;
    out.result = render_shift_map(img, labels);
    out.diagnostics = {
        {"energy", e.total()},
        {"data_energy", e.data},
        {"smoothness_energy", e.smoothness},
        {"expansion_moves", stats.expansion_moves},
        {"refine_sweeps", stats.refine_sweeps},
        {"coarse_to_fine", stats.coarse_to_fine ? 1.0 : 0.0},
    };
    return out;
}

}  // namespace rtk
