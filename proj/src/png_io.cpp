#include "wdp/png_io.hpp"

#include <png.h>

#include <cmath>
#include <vector>

#include "wdp/error.hpp"

namespace wdp {

Tensor read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw DataError("cannot read image '" + path.string() + "': " + image.message);
    if (image.format & (PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) {
        png_image_free(&image);
        throw DataError("unsupported image '" + path.string() + "': only 8-bit grayscale or RGB PNG is accepted");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t channels = color ? 3 : 1;
    const std::size_t h = image.height, w = image.width;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
        throw DataError("cannot decode image '" + path.string() + "': " + image.message);

    Tensor out({channels, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < channels; ++c) out.at(c, y, x) = buffer[(y * w + x) * channels + c];
    return out;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
    if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3))
        throw ShapeError("PNG export needs a [1,H,W] or [3,H,W] tensor, got " + shape_string(image.shape()));
    const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
    std::vector<png_byte> buffer(channels * h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < channels; ++c) {
                const double v = image.at(c, y, x);
                if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
                    throw DataError("PNG export needs integral pixel values in [0,255]");
                buffer[(y * w + x) * channels + c] = static_cast<png_byte>(v);
            }
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(w);
    out.height = static_cast<png_uint_32>(h);
    out.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw DataError("cannot write image '" + path.string() + "': " + out.message);
}

}  // namespace wdp
