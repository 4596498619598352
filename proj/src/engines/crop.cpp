#include <algorithm>
#include <cmath>
#include <string>

#include "rtk/engines.hpp"
#include "rtk/error.hpp"

namespace rtk {

CropWindow find_best_window(const ScalarField& weights, int width, int height) {
    if (width < 1 || height < 1 || width > weights.width() || height > weights.height()) {
        throw ArgumentError("crop: window " + std::to_string(width) + "x" + std::to_string(height) +
                            " does not fit inside " + std::to_string(weights.width()) + "x" +
                            std::to_string(weights.height()));
    }
    const IntegralImage table(weights);
    // Sums of equal windows may differ in the last bits depending on where
    // they sit in the table; treat those as ties.
    const double tol = 1e-12 * std::max(1.0, std::abs(table.total()));
    CropWindow best{0, 0, width, height, table.rect_sum(0, 0, width, height), table.total()};
    for (int y = 0; y + height <= weights.height(); ++y) {
        for (int x = 0; x + width <= weights.width(); ++x) {
            const double s = table.rect_sum(x, y, width, height);
            if (s > best.retained + tol) {
                best.x = x;
                best.y = y;
                best.retained = s;
            }
        }
    }
    return best;
}

RetargetOutcome crop_optimal(const RasterImage& img, const ImportanceMap& imp, int target_width, int target_height) {
    if (imp.width() != img.width() || imp.height() != img.height()) {
        throw DimensionMismatchError("crop: importance map does not match the image");
    }
    const auto window = find_best_window(imp.field(), target_width, target_height);
    RetargetOutcome out;
    out.engine = EngineId::crop;
    out.result = crop_window(img, window.x, window.y, window.width, window.height);
    out.diagnostics = {
        {"window_x", window.x},
        {"window_y", window.y},
        {"retained_importance", window.retained},
        {"retention", window.retention()},
    };
    return out;
}

}  // namespace rtk
