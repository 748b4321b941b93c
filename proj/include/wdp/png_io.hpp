#pragma once

#include <filesystem>

#include "wdp/tensor.hpp"

namespace wdp {

// Decodes an 8-bit grayscale or RGB PNG into [1,H,W] or [3,H,W] with values in [0,255].
// Alpha channels and 16-bit images are rejected with DataError.
Tensor read_png(const std::filesystem::path& path);

// Encodes a [1,H,W] or [3,H,W] tensor of integral values in [0,255] as an 8-bit PNG.
void write_png(const std::filesystem::path& path, const Tensor& image);

}  // namespace wdp
