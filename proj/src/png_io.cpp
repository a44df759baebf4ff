#include "fairkit/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "fairkit/errors.hpp"

namespace fairkit {

namespace {

[[noreturn]] void on_png_error(png_structp, png_const_charp msg) {
    throw IoError(std::string("png: ") + msg);
}

void on_png_warning(png_structp, png_const_charp) {}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error,
                                     on_png_warning);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) {
            if (png) png_destroy_read_struct(&png, nullptr, nullptr);
            throw IoError("png: failed to allocate reader");
        }
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error,
                                      on_png_warning);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) {
            if (png) png_destroy_write_struct(&png, nullptr);
            throw IoError("png: failed to allocate writer");
        }
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

png_byte quantize(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<png_byte>(std::lround(clamped * 255.0));
}

void write_rows(const std::string& path, int width, int height, int channels,
                const std::vector<png_byte>& data) {
    FileHandle file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("png: cannot open '" + path + "' for writing");

    PngWriter w;
    png_init_io(w.png, file.get());
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    const std::size_t row_bytes = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(&data[static_cast<std::size_t>(y) * row_bytes]);
    png_set_rows(w.png, w.info, rows.data());
    png_write_png(w.png, w.info, PNG_TRANSFORM_IDENTITY, nullptr);
}

}  // namespace

ChannelStack read_png_rgb(const std::string& path) {
    FileHandle file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("png: cannot open '" + path + "'");

    PngReader r;
    png_init_io(r.png, file.get());
    png_read_png(r.png, r.info,
                 PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_EXPAND |
                     PNG_TRANSFORM_GRAY_TO_RGB | PNG_TRANSFORM_PACKING,
                 nullptr);

    const int width = static_cast<int>(png_get_image_width(r.png, r.info));
    const int height = static_cast<int>(png_get_image_height(r.png, r.info));
    if (png_get_channels(r.png, r.info) != 3 || png_get_bit_depth(r.png, r.info) != 8)
        throw IoError("png: '" + path + "' did not decode to 8-bit RGB");

    png_bytepp rows = png_get_rows(r.png, r.info);
    ChannelStack out(3, ImagePlane(height, width));
    for (int y = 0; y < height; ++y) {
        const png_bytep row = rows[y];
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                out[static_cast<std::size_t>(c)].at(y, x) =
                    static_cast<double>(row[3 * x + c]) / 255.0;
    }
    return out;
}

void write_png_gray(const std::string& path, const ImagePlane& plane) {
    if (plane.width < 1 || plane.height < 1 ||
        plane.pixels.size() !=
            static_cast<std::size_t>(plane.width) * static_cast<std::size_t>(plane.height))
        throw ValidationError("png: malformed plane");
    std::vector<png_byte> data(plane.pixels.size());
    for (std::size_t i = 0; i < plane.pixels.size(); ++i) data[i] = quantize(plane.pixels[i]);
    write_rows(path, plane.width, plane.height, 1, data);
}

void write_png_rgb(const std::string& path, const ChannelStack& rgb) {
    if (rgb.size() != 3) throw ValidationError("png: expected 3 channels");
    const ImagePlane& r = rgb[0];
    for (const auto& c : rgb)
        if (c.width != r.width || c.height != r.height ||
            c.pixels.size() != r.pixels.size())
            throw ValidationError("png: channel dimensions disagree");
    std::vector<png_byte> data(3 * r.pixels.size());
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) data[3 * i + c] = quantize(rgb[c].pixels[i]);
    write_rows(path, r.width, r.height, 3, data);
}

}  // namespace fairkit
