#pragma once

#include <cmath>

#include "rtk/collage.hpp"

namespace rtk::test {

// Fixed 4-image set: smooth gradients with a bright disc, distinct aspects.
inline std::vector<CollageImage> golden_images() {
    const int dims[4][2] = {{96, 64}, {48, 80}, {72, 72}, {120, 40}};
    const EngineId methods[4] = {EngineId::multi_operator, EngineId::aad_warp, EngineId::shift_map, EngineId::crop};
    std::vector<CollageImage> out;
    for (int i = 0; i < 4; ++i) {
        const int w = dims[i][0];
        const int h = dims[i][1];
        RasterImage img(w, h);
        const double cx = w * (0.3 + 0.1 * i);
        const double cy = h * 0.5;
        const double rad = std::min(w, h) * 0.25;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const bool disc = std::hypot(x - cx, y - cy) < rad;
                img.at(x, y, 0) = disc ? 0.95 : 0.2 + 0.6 * x / w;
                img.at(x, y, 1) = disc ? 0.3 + 0.15 * i : 0.1 + 0.5 * y / h;
                img.at(x, y, 2) = disc ? 0.1 : 0.25 * (i + 1) / 4.0 + 0.3 * ((x / 8 + y / 8) % 2);
            }
        }
        auto imp = build_importance(img);
        out.push_back({"img" + std::to_string(i), std::move(img), std::move(imp), methods[i]});
    }
    return out;
}

inline CollageLayout golden_layout(const std::vector<CollageImage>& images) {
    CollageLayout layout{160, 120, slice_layout(160, 120, 4, std::uint64_t{3}), {}};
    const double scores[4] = {0.8, 0.2, 0.5, 0.35};
    std::vector<CollageItem> items;
    for (std::size_t i = 0; i < images.size(); ++i) {
        items.push_back({images[i].image_id, scores[i],
                         static_cast<double>(images[i].image.width()) / images[i].image.height()});
    }
    layout.assignment = assign_by_retargetability(items, layout.regions).region_image;
    return layout;
}

}  // namespace rtk::test
