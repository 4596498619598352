#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtk/imaging.hpp"

namespace rtk {

inline constexpr int kCropSide = 224;
inline constexpr int kDenseCrops = 10;
inline constexpr int kBaselineDim = 256;

using FeatureVector = std::vector<double>;

enum class CropPolicy { dense_crop, single_resize };
enum class ExtractorKind { baseline, imported };

std::string_view crop_policy_name(CropPolicy policy);
CropPolicy parse_crop_policy(std::string_view name);

struct ExtractorSpec {
    ExtractorKind kind = ExtractorKind::baseline;
    CropPolicy policy = CropPolicy::dense_crop;
    int crops = kDenseCrops;

    /// ArgumentError unless 1 <= crops <= 10; single_resize requires crops == 1.
    void validate() const;
    static ExtractorSpec single_resize() { return {ExtractorKind::baseline, CropPolicy::single_resize, 1}; }
};

/// Scales the short side to 224 (long side to the nearest even length) and
/// returns the first `k` of: center, top-left, top-right, bottom-left,
/// bottom-right, then the horizontal mirrors of those five in the same order.
std::vector<RasterImage> dense_crops(const RasterImage& img, int k = kDenseCrops);

/// The sub-images a spec extracts from: dense crops or one anisotropic
/// 224x224 resize.
std::vector<RasterImage> crop_images(const RasterImage& img, const ExtractorSpec& spec);

/// Handcrafted 256-dim descriptor of one crop: 4x4 mean RGB (48), 4x4 cells of
/// 8-bin gradient-orientation histograms on luma, magnitude weighted and L1
/// normalized (128), 4x4x4 joint RGB histogram (64), 4x4 luma variances (16).
FeatureVector baseline_descriptor(const RasterImage& crop);

/// Mean of the per-crop descriptors. Imported specs have no extractor and
/// raise StateError.
FeatureVector extract(const RasterImage& img, const ExtractorSpec& spec = {});

struct FeatureRecord {
    std::string id;
    FeatureVector values;
};

struct FeatureTable {
    int dim = 0;
    std::vector<FeatureRecord> records;

    const FeatureVector* find(std::string_view id) const;
    /// ArgumentError on a dimension mismatch or duplicate id.
    void add(std::string id, FeatureVector values);
};

/// Binary feature file: "RTFT", u32 version 1, u32 D, u32 N, then N records of
/// (u32 id length, UTF-8 id, D float32), all little endian.
std::vector<std::uint8_t> encode_features(const FeatureTable& table);
/// FormatError with the record index on truncation, NaN or duplicate ids.
FeatureTable decode_features(const std::vector<std::uint8_t>& bytes);

void export_features(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable import_features(const std::filesystem::path& path);

}  // namespace rtk
