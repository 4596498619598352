#include "rtk/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "rtk/error.hpp"

namespace rtk {

namespace {

void require_positive_dims(int width, int height, const char* what) {
    if (width < 1 || height < 1) {
        throw ArgumentError(std::string(what) + ": dimensions must be >= 1, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
}

std::size_t area(int width, int height) {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Bilinear sampling geometry for one axis: pixel centers are aligned, so a
// same-size resample is the identity.
struct AxisSample {
    int i0;
    int i1;
    double t;
};

std::vector<AxisSample> axis_samples(int src, int dst) {
    std::vector<AxisSample> out(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    for (int i = 0; i < dst; ++i) {
        double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(pos));
        const int i1 = std::min(i0 + 1, src - 1);
        out[static_cast<std::size_t>(i)] = {i0, i1, pos - i0};
    }
    return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        throw DecodeError(std::string("png: ") + image.message);
    }
    if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
        png_image_free(&image);
        throw UnsupportedFormatError("png: only 8-bit channels are supported");
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("png: " + msg + " (input length " + std::to_string(bytes.size()) + " bytes)");
    }
    std::vector<double> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
    return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(data));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Corrupt-data warnings (truncation, bad markers) are fatal here.
void jpeg_message(j_common_ptr cinfo, int level) {
    if (level < 0) {
        jpeg_fail(cinfo);
    }
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    std::vector<std::uint8_t> buffer;
    int width = 0;
    int height = 0;

    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_fail;
    err.base.emit_message = jpeg_message;
    if (setjmp(err.jump) != 0) {
        const std::string msg = err.message;
        const auto offset = bytes.size() - (cinfo.src != nullptr ? cinfo.src->bytes_in_buffer : 0);
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("jpeg: " + msg + " (near byte offset " + std::to_string(offset) + ")");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    buffer.resize(area(width, height) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buffer.data() + static_cast<std::size_t>(cinfo.output_scanline) * static_cast<std::size_t>(width) * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    std::vector<double> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
    return RasterImage(width, height, std::move(data));
}

std::vector<std::uint8_t> write_png(const std::uint8_t* pixels, int width, int height, png_uint_32 format) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr) == 0) {
        throw IoError(std::string("png encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr) == 0) {
        throw IoError(std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

bool is_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return bytes.size() >= 8 && std::equal(std::begin(kSig), std::end(kSig), bytes.begin());
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

}  // namespace

// --- RasterImage / ScalarField ----------------------------------------------

RasterImage::RasterImage(int width, int height, double fill) : width_(width), height_(height) {
    require_positive_dims(width, height, "RasterImage");
    if (!(fill >= 0.0 && fill <= 1.0)) {
        throw ArgumentError("RasterImage: fill intensity outside [0,1]");
    }
    data_.assign(area(width, height) * kChannels, fill);
}

RasterImage::RasterImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    require_positive_dims(width, height, "RasterImage");
    if (data_.size() != area(width, height) * kChannels) {
        throw ArgumentError("RasterImage: data length " + std::to_string(data_.size()) + " does not match " +
                            std::to_string(width) + "x" + std::to_string(height) + "x3");
    }
    for (double v : data_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ArgumentError("RasterImage: intensity outside [0,1]");
        }
    }
}

ScalarField::ScalarField(int width, int height, double fill) : width_(width), height_(height) {
    require_positive_dims(width, height, "ScalarField");
    values_.assign(area(width, height), fill);
}

ScalarField::ScalarField(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    require_positive_dims(width, height, "ScalarField");
    if (values_.size() != area(width, height)) {
        throw ArgumentError("ScalarField: value count does not match dimensions");
    }
}

double ScalarField::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double ScalarField::min() const noexcept {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const noexcept {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

// --- IntegralImage ---------------------------------------------------------

IntegralImage::IntegralImage(const ScalarField& field)
    : width_(field.width()), height_(field.height()), table_(area(width_ + 1, height_ + 1), 0.0) {
    const auto stride = static_cast<std::size_t>(width_ + 1);
    for (int y = 0; y < height_; ++y) {
        double row = 0.0;
        for (int x = 0; x < width_; ++x) {
            row += field.at(x, y);
            table_[static_cast<std::size_t>(y + 1) * stride + static_cast<std::size_t>(x + 1)] =
                table_[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x + 1)] + row;
        }
    }
}

double IntegralImage::rect_sum(int x, int y, int w, int h) const {
    if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > width_ || y + h > height_) {
        throw BoundsError("IntegralImage: rectangle outside field");
    }
    return entry(x + w, y + h) - entry(x, y + h) - entry(x + w, y) + entry(x, y);
}

// --- codec -----------------------------------------------------------------

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) {
        return decode_png(bytes);
    }
    if (is_jpeg(bytes)) {
        return decode_jpeg(bytes);
    }
    throw DecodeError("unrecognized image signature at offset 0 (" + std::to_string(bytes.size()) + " bytes)");
}

ScalarField decode_gray_png(std::span<const std::uint8_t> bytes) {
    if (!is_png(bytes)) {
        throw DecodeError("mask: not a PNG file (bad signature at offset 0)");
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        throw DecodeError(std::string("png: ") + image.message);
    }
    if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
        png_image_free(&image);
        throw UnsupportedFormatError("png: only 8-bit masks are supported");
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("png: " + msg);
    }
    std::vector<double> values(buffer.size());
    std::transform(buffer.begin(), buffer.end(), values.begin(), [](std::uint8_t v) { return v / 255.0; });
    return ScalarField(static_cast<int>(image.width), static_cast<int>(image.height), std::move(values));
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    std::vector<std::uint8_t> pixels(img.data().size());
    std::transform(img.data().begin(), img.data().end(), pixels.begin(), quantize);
    return write_png(pixels.data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_gray_png(const ScalarField& field) {
    std::vector<std::uint8_t> pixels(field.values().size());
    std::transform(field.values().begin(), field.values().end(), pixels.begin(), quantize);
    return write_png(pixels.data(), field.width(), field.height(), PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

RasterImage load_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    }
}

void save_png(const std::filesystem::path& path, const RasterImage& img) { write_file_bytes(path, encode_png(img)); }

// --- geometry --------------------------------------------------------------

RasterImage uniform_scale(const RasterImage& img, int w, int h) {
    require_positive_dims(w, h, "uniform_scale");
    if (w == img.width() && h == img.height()) {
        return img;
    }
    const auto xs = axis_samples(img.width(), w);
    const auto ys = axis_samples(img.height(), h);
    RasterImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const auto& sy = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < w; ++x) {
            const auto& sx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < RasterImage::kChannels; ++c) {
                const double top = img.at(sx.i0, sy.i0, c) * (1.0 - sx.t) + img.at(sx.i1, sy.i0, c) * sx.t;
                const double bottom = img.at(sx.i0, sy.i1, c) * (1.0 - sx.t) + img.at(sx.i1, sy.i1, c) * sx.t;
                out.at(x, y, c) = std::clamp(top * (1.0 - sy.t) + bottom * sy.t, 0.0, 1.0);
            }
        }
    }
    return out;
}

ScalarField uniform_scale(const ScalarField& field, int w, int h) {
    require_positive_dims(w, h, "uniform_scale");
    if (w == field.width() && h == field.height()) {
        return field;
    }
    const auto xs = axis_samples(field.width(), w);
    const auto ys = axis_samples(field.height(), h);
    ScalarField out(w, h);
    for (int y = 0; y < h; ++y) {
        const auto& sy = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < w; ++x) {
            const auto& sx = xs[static_cast<std::size_t>(x)];
            const double top = field.at(sx.i0, sy.i0) * (1.0 - sx.t) + field.at(sx.i1, sy.i0) * sx.t;
            const double bottom = field.at(sx.i0, sy.i1) * (1.0 - sx.t) + field.at(sx.i1, sy.i1) * sx.t;
            out.at(x, y) = top * (1.0 - sy.t) + bottom * sy.t;
        }
    }
    return out;
}

RasterImage scale_long_side(const RasterImage& img, int target) {
    if (target < 1) {
        throw ArgumentError("scale_long_side: target must be >= 1");
    }
    const int w = img.width();
    const int h = img.height();
    if (std::max(w, h) == target) {
        return img;
    }
    if (w >= h) {
        const int nh = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * target / w)));
        return uniform_scale(img, target, nh);
    }
    const int nw = std::max(1, static_cast<int>(std::lround(static_cast<double>(w) * target / h)));
    return uniform_scale(img, nw, target);
}

RasterImage crop_window(const RasterImage& img, int x, int y, int w, int h) {
    if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > img.width() || y + h > img.height()) {
        throw BoundsError("crop_window: window (" + std::to_string(x) + "," + std::to_string(y) + "," +
                          std::to_string(w) + "," + std::to_string(h) + ") outside " + std::to_string(img.width()) +
                          "x" + std::to_string(img.height()));
    }
    RasterImage out(w, h);
    for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
            for (int c = 0; c < RasterImage::kChannels; ++c) {
                out.at(xx, yy, c) = img.at(x + xx, y + yy, c);
            }
        }
    }
    return out;
}

ScalarField crop_window(const ScalarField& field, int x, int y, int w, int h) {
    if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > field.width() || y + h > field.height()) {
        throw BoundsError("crop_window: window outside field");
    }
    ScalarField out(w, h);
    for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
            out.at(xx, yy) = field.at(x + xx, y + yy);
        }
    }
    return out;
}

RasterImage transpose(const RasterImage& img) {
    RasterImage out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < RasterImage::kChannels; ++c) {
                out.at(y, x, c) = img.at(x, y, c);
            }
        }
    }
    return out;
}

ScalarField transpose(const ScalarField& field) {
    ScalarField out(field.height(), field.width());
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            out.at(y, x) = field.at(x, y);
        }
    }
    return out;
}

RasterImage mirror_horizontal(const RasterImage& img) {
    RasterImage out(img.width(), img.height());
    const int last = img.width() - 1;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < RasterImage::kChannels; ++c) {
                out.at(last - x, y, c) = img.at(x, y, c);
            }
        }
    }
    return out;
}

ScalarField mirror_horizontal(const ScalarField& field) {
    ScalarField out(field.width(), field.height());
    const int last = field.width() - 1;
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            out.at(last - x, y) = field.at(x, y);
        }
    }
    return out;
}

ScalarField to_gray(const RasterImage& img) {
    ScalarField out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
        }
    }
    return out;
}

double color_distance(const RasterImage& a, int x0, int y0, const RasterImage& b, int x1, int y1) {
    double acc = 0.0;
    for (int c = 0; c < RasterImage::kChannels; ++c) {
        const double d = a.at(x0, y0, c) - b.at(x1, y1, c);
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace rtk
