#include <algorithm>
#include <cmath>

#include "rtk/engines.hpp"
#include "rtk/error.hpp"

namespace rtk {

double normalized_cross_correlation(const ScalarField& a, const ScalarField& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionMismatchError("ncc: fields differ in size");
    }
    const auto va = a.values();
    const auto vb = b.values();
    const double n = static_cast<double>(va.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        ma += va[i];
        mb += vb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double da = va[i] - ma;
        const double db = vb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    constexpr double kFlat = 1e-20;
    const bool flat_a = saa <= kFlat * n;
    const bool flat_b = sbb <= kFlat * n;
    if (flat_a && flat_b) {
        return 1.0;
    }
    if (flat_a || flat_b) {
        return 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

ScalarField similarity_gray(const RasterImage& img, int side) {
    const int long_side = std::max(img.width(), img.height());
    if (long_side <= side) {
        return to_gray(img);
    }
    const double f = static_cast<double>(side) / long_side;
    const int w = std::max(1, static_cast<int>(std::lround(img.width() * f)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height() * f)));
    return to_gray(uniform_scale(img, w, h));
}

}  // namespace

RetargetOutcome multi_operator(const RasterImage& img, const ImportanceMap& imp, int target_width,
                               const EngineParams& params, MultiOperatorTrace* trace) {
    if (imp.width() != img.width() || imp.height() != img.height()) {
        throw DimensionMismatchError("multi-operator: importance map does not match the image");
    }
    const int w = img.width();
    const int h = img.height();
    const int reduction = w - target_width;
    if (reduction < 0 || target_width < 1) {
        throw ArgumentError("multi-operator: target width must lie in [1, source width]");
    }
    if (!(params.multi_operator_step > 0.0 && params.multi_operator_step <= 1.0)) {
        throw ArgumentError("multi-operator: grid step must lie in (0, 1]");
    }

    MultiOperatorTrace local;
    MultiOperatorTrace& tr = trace != nullptr ? *trace : local;
    tr.candidates.clear();
    tr.selected = 0;

    if (reduction == 0) {
        MultiOperatorCandidate c;
        c.mix = {0.0, 0.0, 1.0};
        c.retention = c.similarity = c.score = 1.0;
        tr.candidates.push_back(c);
        return {img, EngineId::multi_operator,
                {{"crop_fraction", 0.0}, {"seam_fraction", 0.0}, {"scale_fraction", 1.0}, {"score", 1.0}}};
    }

    const double total = imp.field().sum();
    const auto reference = similarity_gray(img, params.multi_operator_similarity_side);
    const int steps = static_cast<int>(std::lround(1.0 / params.multi_operator_step));

    RasterImage best_image;
    for (int i = 0; i <= steps; ++i) {
        const double a = static_cast<double>(i) / steps;
        const int crop_px = static_cast<int>(std::lround(a * reduction));
        const auto window = find_best_window(imp.field(), w - crop_px, h);
        SeamCarver carver(crop_window(img, window.x, 0, window.width, h),
                          ImportanceMap(crop_window(imp.field(), window.x, 0, window.width, h)),
                          params.seam_importance_weight);
        int removed = 0;
        for (int j = 0; i + j <= steps; ++j) {
            const double b = static_cast<double>(j) / steps;
            const int seam_px = std::min(static_cast<int>(std::lround(b * reduction)), reduction - crop_px);
            carver.remove(seam_px - removed);
            removed = seam_px;

            MultiOperatorCandidate c;
            c.mix = {a, b, std::max(0.0, 1.0 - a - b)};
            c.crop_pixels = crop_px;
            c.seam_pixels = seam_px;
            c.scale_pixels = reduction - crop_px - seam_px;
            auto out = uniform_scale(carver.image(), target_width, h);
            const double kept = uniform_scale(carver.importance().field(), target_width, h).sum();
            c.retention = total > 0.0 ? std::clamp(kept / total, 0.0, 1.0) : 1.0;
            c.similarity = normalized_cross_correlation(
                reference, similarity_gray(uniform_scale(out, w, h), params.multi_operator_similarity_side));
            c.score = c.retention * c.similarity;

            bool take = tr.candidates.empty();
            if (!take) {
                const auto& best = tr.candidates[tr.selected];
                const double tol = 1e-12;
                if (c.score > best.score + tol) {
                    take = true;
                } else if (c.score >= best.score - tol) {
                    take = c.mix.seam > best.mix.seam || (c.mix.seam == best.mix.seam && c.mix.crop > best.mix.crop);
                }
            }
            tr.candidates.push_back(c);
            if (take) {
                tr.selected = tr.candidates.size() - 1;
                best_image = std::move(out);
            }
        }
    }

    const auto& chosen = tr.candidates[tr.selected];
    RetargetOutcome outcome;
    outcome.engine = EngineId::multi_operator;
    outcome.result = std::move(best_image);
    outcome.diagnostics = {
        {"crop_fraction", chosen.mix.crop},
        {"seam_fraction", chosen.mix.seam},
        {"scale_fraction", chosen.mix.scale},
        {"retention", chosen.retention},
        {"similarity", chosen.similarity},
        {"score", chosen.score},
        {"candidates", static_cast<double>(tr.candidates.size())},
    };
    return outcome;
}

}  // namespace rtk
