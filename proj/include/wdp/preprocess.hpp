#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wdp/data.hpp"
#include "wdp/network.hpp"
#include "wdp/tensor.hpp"

namespace wdp::preprocess {

// Value domain of an image: raw 8-bit levels or normalized to [0,1].
enum class PixelRange { Byte, Unit };

struct Image {
    Tensor pixels;  // [C,H,W]
    PixelRange range = PixelRange::Byte;
};

struct PreprocessConfig {
    std::size_t target_size = 32;
    double split_ratio = 0.75;
    std::uint64_t split_seed = 0;

    void validate() const;
};

// BT.601 luma, rounded half-up. One-channel input passes through unchanged.
Image to_grayscale(const Image& image);
// v / 255. Rejects images that are already normalized or hold values outside [0,255].
Image normalize(const Image& image);
// Bilinear resize to target x target with half-pixel-centre sampling.
Image resize(const Image& image, std::size_t target);

struct FrameTimings {
    double grayscale_s = 0.0;
    double normalize_s = 0.0;
    double resize_s = 0.0;
};

struct PreparedFrame {
    Tensor input;  // [1,target,target]
    FrameTimings timings;
};

// grayscale -> normalize -> resize, each stage timed on the monotonic clock.
PreparedFrame preprocess_frame(const Tensor& raw, std::size_t target_size);

struct Split {
    data::Dataset train;
    data::Dataset test;
};

// Train size per class: floor(ratio * n_c) plus largest-remainder top-up so the
// total is floor(ratio * n). Membership comes from a seeded shuffle.
Split train_test_split(const data::Dataset& dataset, double ratio, std::uint64_t seed);

// Runs preprocess_frame over every sample.
std::vector<nn::Example> to_examples(const data::Dataset& dataset, std::size_t target_size);

}  // namespace wdp::preprocess
