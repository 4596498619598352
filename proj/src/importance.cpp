#include "rtk/importance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rtk/error.hpp"

namespace rtk {

ImportanceMap::ImportanceMap(ScalarField weights) : weights_(std::move(weights)) {
    for (double v : weights_.values()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ArgumentError("ImportanceMap: weight outside [0,1]");
        }
    }
}

ImportanceMap::ImportanceMap(int width, int height, double fill) : ImportanceMap(ScalarField(width, height, fill)) {}

namespace {

struct ColorBin {
    int key = 0;
    std::size_t count = 0;
    std::array<double, 3> sum{};
    std::array<double, 3> mean() const {
        const double n = static_cast<double>(count);
        return {sum[0] / n, sum[1] / n, sum[2] / n};
    }
};

double rgb_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double dr = a[0] - b[0];
    const double dg = a[1] - b[1];
    const double db = a[2] - b[2];
    return std::sqrt(dr * dr + dg * dg + db * db);
}

}  // namespace

ImportanceMap saliency_global_contrast(const RasterImage& img, const GlobalContrastParams& params) {
    if (img.empty()) {
        throw ArgumentError("saliency_global_contrast: empty image");
    }
    const int bins = params.bins_per_channel;
    if (bins < 1) {
        throw ArgumentError("saliency_global_contrast: bins_per_channel must be >= 1");
    }
    const int w = img.width();
    const int h = img.height();
    const std::size_t n_pixels = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

    auto channel_bin = [bins](double v) { return std::min(bins - 1, static_cast<int>(v * bins)); };

    // Quantize and histogram.
    std::vector<int> pixel_key(n_pixels);
    std::vector<int> slot_of_key(static_cast<std::size_t>(bins * bins * bins), -1);
    std::vector<ColorBin> colors;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int key =
                (channel_bin(img.at(x, y, 0)) * bins + channel_bin(img.at(x, y, 1))) * bins + channel_bin(img.at(x, y, 2));
            auto& slot = slot_of_key[static_cast<std::size_t>(key)];
            if (slot < 0) {
                slot = static_cast<int>(colors.size());
                colors.push_back({key, 0, {}});
            }
            auto& bin = colors[static_cast<std::size_t>(slot)];
            ++bin.count;
            for (int c = 0; c < 3; ++c) {
                bin.sum[static_cast<std::size_t>(c)] += img.at(x, y, c);
            }
            pixel_key[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = key;
        }
    }

    // Most frequent first; equal counts ordered by quantized key so the result
    // depends only on color statistics.
    std::sort(colors.begin(), colors.end(), [](const ColorBin& a, const ColorBin& b) {
        return a.count != b.count ? a.count > b.count : a.key < b.key;
    });

    // Keep colors until they cover at least (1 - rare fraction) of the pixels.
    const double keep_target = (1.0 - params.rare_color_fraction) * static_cast<double>(n_pixels);
    std::size_t kept = 0;
    std::size_t covered = 0;
    while (kept < colors.size() && static_cast<double>(covered) < keep_target) {
        covered += colors[kept].count;
        ++kept;
    }
    kept = std::max<std::size_t>(kept, 1);

    // Rare colors merge into the nearest kept color (by mean RGB).
    std::vector<std::size_t> target(colors.size());
    for (std::size_t i = 0; i < colors.size(); ++i) {
        if (i < kept) {
            target[i] = i;
            continue;
        }
        const auto mi = colors[i].mean();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < kept; ++k) {
            const double d = rgb_distance(mi, colors[k].mean());
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        target[i] = best;
    }

    std::vector<ColorBin> merged(colors.begin(), colors.begin() + static_cast<std::ptrdiff_t>(kept));
    for (std::size_t i = kept; i < colors.size(); ++i) {
        auto& dst = merged[target[i]];
        dst.count += colors[i].count;
        for (std::size_t c = 0; c < 3; ++c) {
            dst.sum[c] += colors[i].sum[c];
        }
    }

    std::vector<std::array<double, 3>> means(kept);
    std::vector<double> freq(kept);
    for (std::size_t k = 0; k < kept; ++k) {
        means[k] = merged[k].mean();
        freq[k] = static_cast<double>(merged[k].count) / static_cast<double>(n_pixels);
    }
    std::vector<double> color_saliency(kept, 0.0);
    for (std::size_t a = 0; a < kept; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < kept; ++b) {
            s += freq[b] * rgb_distance(means[a], means[b]);
        }
        color_saliency[a] = s;
    }

    const auto [lo_it, hi_it] = std::minmax_element(color_saliency.begin(), color_saliency.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;

    std::vector<double> saliency_of_key(slot_of_key.size(), 0.0);
    for (std::size_t i = 0; i < colors.size(); ++i) {
        const double s = color_saliency[target[i]];
        saliency_of_key[static_cast<std::size_t>(colors[i].key)] = range > 0.0 ? (s - lo) / range : 0.0;
    }

    ScalarField out(w, h);
    for (std::size_t p = 0; p < n_pixels; ++p) {
        out.values()[p] = std::clamp(saliency_of_key[static_cast<std::size_t>(pixel_key[p])], 0.0, 1.0);
    }
    return ImportanceMap(std::move(out));
}

ImportanceMap merge_importance(std::span<const ImportanceMap> maps) {
    if (maps.empty()) {
        throw ArgumentError("merge_importance: no maps given");
    }
    const int w = maps.front().width();
    const int h = maps.front().height();
    for (const auto& m : maps) {
        if (m.width() != w || m.height() != h) {
            throw DimensionMismatchError("merge_importance: map of size " + std::to_string(m.width()) + "x" +
                                         std::to_string(m.height()) + " does not match " + std::to_string(w) + "x" +
                                         std::to_string(h));
        }
    }
    if (maps.size() == 1) {
        return maps.front();
    }
    ScalarField out(w, h, 0.0);
    const double n = static_cast<double>(maps.size());
    auto dst = out.values();
    for (const auto& m : maps) {
        const auto src = m.field().values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += src[i];
        }
    }
    for (double& v : dst) {
        v = std::clamp(v / n, 0.0, 1.0);
    }
    return ImportanceMap(std::move(out));
}

ImportanceMap mask_from_png(std::span<const std::uint8_t> bytes) { return ImportanceMap(decode_gray_png(bytes)); }

ImportanceMap load_external_mask(const std::filesystem::path& path) { return mask_from_png(read_file_bytes(path)); }

ImportanceMap build_importance(const RasterImage& img, std::span<const ImportanceMap> masks) {
    std::vector<ImportanceMap> all;
    all.reserve(masks.size() + 1);
    all.push_back(saliency_global_contrast(img));
    all.insert(all.end(), masks.begin(), masks.end());
    return merge_importance(all);
}

}  // namespace rtk
