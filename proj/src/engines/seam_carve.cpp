#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rtk/engines.hpp"
#include "rtk/error.hpp"

namespace rtk {

double seam_energy_at(const RasterImage& img, const ImportanceMap& imp, double importance_weight, int x, int y) {
    const int xl = std::max(x - 1, 0);
    const int xr = std::min(x + 1, img.width() - 1);
    const int yu = std::max(y - 1, 0);
    const int yd = std::min(y + 1, img.height() - 1);
    double e = 0.0;
    for (int c = 0; c < RasterImage::kChannels; ++c) {
        const double gx = 0.5 * (img.at(xr, y, c) - img.at(xl, y, c));
        const double gy = 0.5 * (img.at(x, yd, c) - img.at(x, yu, c));
        e += std::sqrt(gx * gx + gy * gy);
    }
    return e + importance_weight * imp.at(x, y);
}

ScalarField seam_energy(const RasterImage& img, const ImportanceMap& imp, double importance_weight) {
    if (imp.width() != img.width() || imp.height() != img.height()) {
        throw DimensionMismatchError("seam energy: importance map does not match the image");
    }
    ScalarField out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(x, y) = seam_energy_at(img, imp, importance_weight, x, y);
        }
    }
    return out;
}

Seam find_vertical_seam(const ScalarField& energy) {
    const int w = energy.width();
    const int h = energy.height();
    std::vector<double> cost(static_cast<std::size_t>(w));
    std::vector<double> next(static_cast<std::size_t>(w));
    std::vector<int> parent(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
    for (int x = 0; x < w; ++x) {
        cost[static_cast<std::size_t>(x)] = energy.at(x, 0);
    }
    for (int y = 1; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int best = std::max(x - 1, 0);
            for (int px = best + 1; px <= std::min(x + 1, w - 1); ++px) {
                if (cost[static_cast<std::size_t>(px)] < cost[static_cast<std::size_t>(best)]) {
                    best = px;
                }
            }
            next[static_cast<std::size_t>(x)] = energy.at(x, y) + cost[static_cast<std::size_t>(best)];
            parent[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = best;
        }
        std::swap(cost, next);
    }
    const auto end = std::min_element(cost.begin(), cost.end());
    Seam seam;
    seam.energy = *end;
    seam.columns.resize(static_cast<std::size_t>(h));
    int x = static_cast<int>(end - cost.begin());
    for (int y = h - 1; y >= 0; --y) {
        seam.columns[static_cast<std::size_t>(y)] = x;
        x = parent[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
    }
    return seam;
}

SeamCarver::SeamCarver(RasterImage img, ImportanceMap imp, double importance_weight)
    : image_(std::move(img)), importance_(std::move(imp)), weight_(importance_weight) {
    energy_ = seam_energy(image_, importance_, weight_);
}

Seam SeamCarver::remove_one() {
    const int w = image_.width();
    const int h = image_.height();
    if (w < 2) {
        throw ArgumentError("seam carving: cannot remove a seam from a 1-pixel-wide image");
    }
    auto seam = find_vertical_seam(energy_);

    RasterImage img(w - 1, h);
    ScalarField imp(w - 1, h);
    ScalarField energy(w - 1, h);
    for (int y = 0; y < h; ++y) {
        const int s = seam.columns[static_cast<std::size_t>(y)];
        for (int x = 0; x < w - 1; ++x) {
            const int src = x < s ? x : x + 1;
            for (int c = 0; c < RasterImage::kChannels; ++c) {
                img.at(x, y, c) = image_.at(src, y, c);
            }
            imp.at(x, y) = importance_.at(src, y);
            energy.at(x, y) = energy_.at(src, y);
        }
    }
    image_ = std::move(img);
    importance_ = ImportanceMap(std::move(imp));

    // Only pixels whose 4-neighbourhood changed need new energy; with
    // 8-connected seams that is a band of columns [s-2, s+1].
    for (int y = 0; y < h; ++y) {
        const int s = seam.columns[static_cast<std::size_t>(y)];
        for (int x = std::max(s - 2, 0); x <= std::min(s + 1, w - 2); ++x) {
            energy.at(x, y) = seam_energy_at(image_, importance_, weight_, x, y);
        }
    }
    energy_ = std::move(energy);
    total_energy_ += seam.energy;
    return seam;
}

void SeamCarver::remove(int count) {
    for (int i = 0; i < count; ++i) {
        remove_one();
    }
}

SeamCarveResult seam_carve(const RasterImage& img, const ImportanceMap& imp, int n_seams, SeamAxis axis,
                           double importance_weight) {
    if (imp.width() != img.width() || imp.height() != img.height()) {
        throw DimensionMismatchError("seam carving: importance map does not match the image");
    }
    const int extent = axis == SeamAxis::vertical ? img.width() : img.height();
    if (n_seams < 0 || n_seams >= extent) {
        throw ArgumentError("seam carving: seam count " + std::to_string(n_seams) + " must be below the extent " +
                            std::to_string(extent));
    }
    if (axis == SeamAxis::vertical) {
        SeamCarver carver(img, imp, importance_weight);
        carver.remove(n_seams);
        return {carver.image(), carver.importance(), carver.total_energy()};
    }
    SeamCarver carver(transpose(img), ImportanceMap(transpose(imp.field())), importance_weight);
    carver.remove(n_seams);
    return {transpose(carver.image()), ImportanceMap(transpose(carver.importance().field())), carver.total_energy()};
}

}  // namespace rtk
