#pragma once

#include <filesystem>
#include <span>

#include "rtk/imaging.hpp"

namespace rtk {

/// Per-pixel importance weights in [0,1], same grid as the source image.
class ImportanceMap {
public:
    ImportanceMap() = default;
    /// Throws ArgumentError when a weight leaves [0,1].
    explicit ImportanceMap(ScalarField weights);
    ImportanceMap(int width, int height, double fill);

    int width() const noexcept { return weights_.width(); }
    int height() const noexcept { return weights_.height(); }
    double at(int x, int y) const { return weights_.at(x, y); }
    const ScalarField& field() const noexcept { return weights_; }

    bool operator==(const ImportanceMap&) const = default;

private:
    ScalarField weights_;
};

/// Histogram-contrast saliency tuning. Defaults follow the published global
/// contrast method.
struct GlobalContrastParams {
    int bins_per_channel = 12;
    double rare_color_fraction = 0.05;
};

/// Global histogram-contrast saliency: every pixel takes the saliency of its
/// quantized color, which is the frequency-weighted RGB distance to all kept
/// colors. Min-max normalized; a flat result becomes all zeros.
ImportanceMap saliency_global_contrast(const RasterImage& img, const GlobalContrastParams& params = {});

/// Per-pixel arithmetic mean. ArgumentError on an empty list,
/// DimensionMismatchError on differing sizes.
ImportanceMap merge_importance(std::span<const ImportanceMap> maps);

/// Loads an 8-bit grayscale PNG mask as weights v/255.
ImportanceMap load_external_mask(const std::filesystem::path& path);
ImportanceMap mask_from_png(std::span<const std::uint8_t> bytes);

/// Saliency merged with any external masks; the default importance for the
/// retargeting engines.
ImportanceMap build_importance(const RasterImage& img, std::span<const ImportanceMap> masks = {});

}  // namespace rtk
