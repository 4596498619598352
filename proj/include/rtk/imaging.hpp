#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rtk {

/// Row-major RGB raster with intensities in [0,1].
///
/// Index (x, y, c) lives at `(y * width + x) * 3 + c`. A default-constructed
/// image is empty (0x0); every constructed image is at least 1x1.
class RasterImage {
public:
    static constexpr int kChannels = 3;

    RasterImage() = default;
    RasterImage(int width, int height, double fill = 0.0);
    /// Takes ownership of `data`; throws ArgumentError when the length or any
    /// intensity violates the invariants.
    RasterImage(int width, int height, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   kChannels +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Single-channel real field (energies, importance weights, gray levels).
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0);
    ScalarField(int width, int height, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return values_.empty(); }

    double at(int x, int y) const { return values_[index(x, y)]; }
    double& at(int x, int y) { return values_[index(x, y)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double sum() const noexcept;
    double min() const noexcept;
    double max() const noexcept;

    bool operator==(const ScalarField&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Summed-area table over a ScalarField, (w+1) x (h+1) entries.
class IntegralImage {
public:
    explicit IntegralImage(const ScalarField& field);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    /// Sum of the field over [x, x+w) x [y, y+h). Throws BoundsError when the
    /// rectangle leaves the field.
    double rect_sum(int x, int y, int w, int h) const;
    double total() const noexcept { return table_.back(); }

private:
    double entry(int x, int y) const noexcept {
        return table_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_ + 1) + static_cast<std::size_t>(x)];
    }

    int width_;
    int height_;
    std::vector<double> table_;
};

// --- codec -----------------------------------------------------------------

/// Decodes PNG or JPEG bytes (sniffed by signature) into RGB in [0,1].
RasterImage decode_image(std::span<const std::uint8_t> bytes);
/// Decodes an 8-bit grayscale PNG into values v/255.
ScalarField decode_gray_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
std::vector<std::uint8_t> encode_gray_png(const ScalarField& field);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

RasterImage load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const RasterImage& img);

// --- geometry --------------------------------------------------------------

/// Bilinear resample to exactly w x h (pixel-center aligned, edge clamped).
RasterImage uniform_scale(const RasterImage& img, int w, int h);
ScalarField uniform_scale(const ScalarField& field, int w, int h);

/// Rescales so the long side equals `target`, keeping the aspect ratio.
RasterImage scale_long_side(const RasterImage& img, int target);

/// Exact copy of the window [x, x+w) x [y, y+h); BoundsError when it does not
/// fit inside the image.
RasterImage crop_window(const RasterImage& img, int x, int y, int w, int h);
ScalarField crop_window(const ScalarField& field, int x, int y, int w, int h);

RasterImage transpose(const RasterImage& img);
ScalarField transpose(const ScalarField& field);
RasterImage mirror_horizontal(const RasterImage& img);
ScalarField mirror_horizontal(const ScalarField& field);

/// Rec.601 luma.
ScalarField to_gray(const RasterImage& img);

/// Euclidean RGB distance between pixels (x0, y0) of `a` and (x1, y1) of `b`.
double color_distance(const RasterImage& a, int x0, int y0, const RasterImage& b, int x1, int y1);

}  // namespace rtk
