#include "rtk/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "binary_io.hpp"
#include "rtk/error.hpp"

namespace rtk {

std::string_view crop_policy_name(CropPolicy policy) {
    return policy == CropPolicy::dense_crop ? "dense_crop" : "single_resize";
}

CropPolicy parse_crop_policy(std::string_view name) {
    if (name == "dense_crop") {
        return CropPolicy::dense_crop;
    }
    if (name == "single_resize") {
        return CropPolicy::single_resize;
    }
    throw ArgumentError("unknown crop policy '" + std::string(name) + "'");
}

void ExtractorSpec::validate() const {
    if (crops < 1 || crops > kDenseCrops) {
        throw ArgumentError("extractor: crop count must lie in [1, 10]");
    }
    if (policy == CropPolicy::single_resize && crops != 1) {
        throw ArgumentError("extractor: single_resize uses exactly one crop");
    }
}

std::vector<RasterImage> dense_crops(const RasterImage& img, int k) {
    if (img.width() < 8 || img.height() < 8) {
        throw ArgumentError("dense crops: image must be at least 8x8");
    }
    if (k < 1 || k > kDenseCrops) {
        throw ArgumentError("dense crops: crop count must lie in [1, 10]");
    }
    const bool landscape = img.width() >= img.height();
    const double ratio = landscape ? static_cast<double>(img.width()) / img.height()
                                   : static_cast<double>(img.height()) / img.width();
    // An even long side keeps the center crop centered, so the crop set of a
    // mirrored image is the mirrored crop set.
    const int long_side = std::max(kCropSide, 2 * static_cast<int>(std::lround(ratio * kCropSide / 2.0)));
    const auto scaled = landscape ? uniform_scale(img, long_side, kCropSide) : uniform_scale(img, kCropSide, long_side);

    const int xr = scaled.width() - kCropSide;
    const int yb = scaled.height() - kCropSide;
    const std::array<std::array<int, 2>, 5> origin = {{{xr / 2, yb / 2}, {0, 0}, {xr, 0}, {0, yb}, {xr, yb}}};
    std::vector<RasterImage> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const auto& o = origin[static_cast<std::size_t>(i % 5)];
        auto c = crop_window(scaled, o[0], o[1], kCropSide, kCropSide);
        out.push_back(i < 5 ? std::move(c) : mirror_horizontal(c));
    }
    return out;
}

std::vector<RasterImage> crop_images(const RasterImage& img, const ExtractorSpec& spec) {
    spec.validate();
    if (spec.policy == CropPolicy::single_resize) {
        return {uniform_scale(img, kCropSide, kCropSide)};
    }
    return dense_crops(img, spec.crops);
}

FeatureVector baseline_descriptor(const RasterImage& crop) {
    const int w = crop.width();
    const int h = crop.height();
    if (w < 4 || h < 4) {
        throw ArgumentError("descriptor: crop must be at least 4x4");
    }
    constexpr int kGrid = 4;
    constexpr int kOrient = 8;
    FeatureVector f(static_cast<std::size_t>(kBaselineDim), 0.0);
    double* mean_rgb = f.data();
    double* orient = f.data() + 48;
    double* joint = f.data() + 176;
    double* variance = f.data() + 240;

    const auto luma = to_gray(crop);
    std::array<int, kGrid + 1> xs{};
    std::array<int, kGrid + 1> ys{};
    for (int i = 0; i <= kGrid; ++i) {
        xs[static_cast<std::size_t>(i)] = i * w / kGrid;
        ys[static_cast<std::size_t>(i)] = i * h / kGrid;
    }
    for (int cy = 0; cy < kGrid; ++cy) {
        for (int cx = 0; cx < kGrid; ++cx) {
            const int cell = cy * kGrid + cx;
            const int x0 = xs[static_cast<std::size_t>(cx)];
            const int x1 = xs[static_cast<std::size_t>(cx) + 1];
            const int y0 = ys[static_cast<std::size_t>(cy)];
            const int y1 = ys[static_cast<std::size_t>(cy) + 1];
            const double n = static_cast<double>((x1 - x0) * (y1 - y0));
            double lsum = 0.0;
            double lsq = 0.0;
            std::array<double, kOrient> hist{};
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    for (int c = 0; c < 3; ++c) {
                        mean_rgb[cell * 3 + c] += crop.at(x, y, c);
                    }
                    const double l = luma.at(x, y);
                    lsum += l;
                    lsq += l * l;
                    const double gx = 0.5 * (luma.at(std::min(x + 1, w - 1), y) - luma.at(std::max(x - 1, 0), y));
                    const double gy = 0.5 * (luma.at(x, std::min(y + 1, h - 1)) - luma.at(x, std::max(y - 1, 0)));
                    const double mag = std::hypot(gx, gy);
                    if (mag > 0.0) {
                        const double t = (std::atan2(gy, gx) + std::numbers::pi) / (2.0 * std::numbers::pi);
                        const int bin = std::min(kOrient - 1, static_cast<int>(t * kOrient));
                        hist[static_cast<std::size_t>(bin)] += mag;
                    }
                }
            }
            for (int c = 0; c < 3; ++c) {
                mean_rgb[cell * 3 + c] /= n;
            }
            double hsum = 0.0;
            for (double v : hist) {
                hsum += v;
            }
            for (int b = 0; b < kOrient; ++b) {
                orient[cell * kOrient + b] = hsum > 0.0 ? hist[static_cast<std::size_t>(b)] / hsum : 0.0;
            }
            const double mean = lsum / n;
            variance[cell] = std::max(0.0, lsq / n - mean * mean);
        }
    }
    const double npx = static_cast<double>(w) * h;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int key = 0;
            for (int c = 0; c < 3; ++c) {
                key = key * 4 + std::min(3, static_cast<int>(crop.at(x, y, c) * 4.0));
            }
            joint[key] += 1.0 / npx;
        }
    }
    return f;
}

FeatureVector extract(const RasterImage& img, const ExtractorSpec& spec) {
    if (spec.kind == ExtractorKind::imported) {
        throw StateError("extract: imported features come from a feature file, not from pixels");
    }
    const auto crops = crop_images(img, spec);
    // Running mean, exact when every crop gives the same descriptor.
    FeatureVector mean(static_cast<std::size_t>(kBaselineDim), 0.0);
    double k = 0.0;
    for (const auto& c : crops) {
        const auto d = baseline_descriptor(c);
        k += 1.0;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += (d[i] - mean[i]) / k;
        }
    }
    return mean;
}

const FeatureVector* FeatureTable::find(std::string_view id) const {
    for (const auto& r : records) {
        if (r.id == id) {
            return &r.values;
        }
    }
    return nullptr;
}

void FeatureTable::add(std::string id, FeatureVector values) {
    if (records.empty() && dim == 0) {
        dim = static_cast<int>(values.size());
    }
    if (static_cast<int>(values.size()) != dim) {
        throw ArgumentError("feature table: vector for '" + id + "' has dimension " + std::to_string(values.size()) +
                            ", expected " + std::to_string(dim));
    }
    if (find(id) != nullptr) {
        throw ArgumentError("feature table: duplicate id '" + id + "'");
    }
    records.push_back({std::move(id), std::move(values)});
}

std::vector<std::uint8_t> encode_features(const FeatureTable& table) {
    bin::Writer w;
    w.magic("RTFT");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(table.dim));
    w.u32(static_cast<std::uint32_t>(table.records.size()));
    for (const auto& r : table.records) {
        if (static_cast<int>(r.values.size()) != table.dim) {
            throw ArgumentError("feature table: record '" + r.id + "' has the wrong dimension");
        }
        w.str(r.id);
        for (double v : r.values) {
            w.f32(static_cast<float>(v));
        }
    }
    return w.take();
}

FeatureTable decode_features(const std::vector<std::uint8_t>& bytes) {
    bin::Reader r(bytes, "feature file");
    r.expect_magic("RTFT");
    const auto version = r.u32();
    if (version != 1) {
        throw FormatError("feature file: unsupported version " + std::to_string(version));
    }
    FeatureTable table;
    table.dim = static_cast<int>(r.u32());
    const auto n = r.u32();
    std::set<std::string> ids;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::string where = "feature file: record " + std::to_string(i);
        FeatureRecord rec;
        try {
            rec.id = r.str();
            rec.values.resize(static_cast<std::size_t>(table.dim));
            for (auto& v : rec.values) {
                v = r.f32();
            }
        } catch (const FormatError& e) {
            throw FormatError(where + ": " + e.what());
        }
        for (double v : rec.values) {
            if (!std::isfinite(v)) {
                throw FormatError(where + " ('" + rec.id + "'): non-finite value");
            }
        }
        if (!ids.insert(rec.id).second) {
            throw FormatError(where + ": duplicate id '" + rec.id + "'");
        }
        table.records.push_back(std::move(rec));
    }
    if (!r.at_end()) {
        throw FormatError("feature file: " + std::to_string(bytes.size() - r.position()) +
                          " trailing bytes after record " + std::to_string(n));
    }
    return table;
}

void export_features(const std::filesystem::path& path, const FeatureTable& table) {
    write_file_bytes(path, encode_features(table));
}

FeatureTable import_features(const std::filesystem::path& path) { return decode_features(read_file_bytes(path)); }

}  // namespace rtk
