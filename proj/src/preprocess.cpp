#include "wdp/preprocess.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "wdp/error.hpp"
#include "wdp/rng.hpp"

namespace wdp::preprocess {

void PreprocessConfig::validate() const {
    if (target_size < 8) throw ConfigError("preprocess.target_size must be >= 8");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("preprocess.split_ratio must lie in (0,1)");
}

Image to_grayscale(const Image& image) {
    const auto& px = image.pixels;
    if (px.rank() != 3 || (px.dim(0) != 1 && px.dim(0) != 3))
        throw ShapeError("grayscale conversion needs 1 or 3 channels, got shape " + shape_string(px.shape()));
    if (px.dim(0) == 1) return image;
    const std::size_t h = px.dim(1), w = px.dim(2);
    Tensor out({1, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            // Weights scaled by 1000 keep integral inputs exact until the final rounding.
            const double luma1000 = 299.0 * px.at(0, y, x) + 587.0 * px.at(1, y, x) + 114.0 * px.at(2, y, x);
            const double luma = image.range == PixelRange::Byte ? std::floor((luma1000 + 500.0) / 1000.0)
                                                                : luma1000 / 1000.0;
            out.at(0, y, x) = std::clamp(luma, 0.0, image.range == PixelRange::Byte ? 255.0 : 1.0);
        }
    return {std::move(out), image.range};
}

Image normalize(const Image& image) {
    if (image.range != PixelRange::Byte) throw DataError("image is already normalized");
    const auto& px = image.pixels;
    if (px.empty()) throw ShapeError("cannot normalize an empty image");
    if (px.min() < 0.0 || px.max() > 255.0 || !px.all_finite())
        throw DataError("pixel values must lie in [0,255] before normalization");
    Tensor out = px;
    for (auto& v : out.data()) v /= 255.0;
    return {std::move(out), PixelRange::Unit};
}

Image resize(const Image& image, std::size_t target) {
    if (target < 1) throw ConfigError("resize target must be >= 1");
    const auto& px = image.pixels;
    if (px.rank() != 3) throw ShapeError("resize needs a [C,H,W] image");
    const std::size_t c = px.dim(0), h = px.dim(1), w = px.dim(2);
    if (h == target && w == target) return image;
    const double sy = static_cast<double>(h) / static_cast<double>(target);
    const double sx = static_cast<double>(w) / static_cast<double>(target);

    struct Tap {
        std::size_t lo, hi;
        double frac;
    };
    const auto taps = [target](std::size_t n, double scale) {
        std::vector<Tap> t(target);
        for (std::size_t i = 0; i < target; ++i) {
            const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0,
                                          static_cast<double>(n - 1));
            const auto lo = static_cast<std::size_t>(std::floor(src));
            t[i] = {lo, std::min(lo + 1, n - 1), src - static_cast<double>(lo)};
        }
        return t;
    };
    const auto ty = taps(h, sy);
    const auto tx = taps(w, sx);

    Tensor out({c, target, target});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < target; ++y) {
            const auto& a = ty[y];
            for (std::size_t x = 0; x < target; ++x) {
                const auto& b = tx[x];
                const double top = px.at(ch, a.lo, b.lo) * (1.0 - b.frac) + px.at(ch, a.lo, b.hi) * b.frac;
                const double bottom = px.at(ch, a.hi, b.lo) * (1.0 - b.frac) + px.at(ch, a.hi, b.hi) * b.frac;
                out.at(ch, y, x) = top * (1.0 - a.frac) + bottom * a.frac;
            }
        }
    return {std::move(out), image.range};
}

PreparedFrame preprocess_frame(const Tensor& raw, std::size_t target_size) {
    using Clock = std::chrono::steady_clock;
    const auto seconds = [](Clock::time_point a, Clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };
    PreparedFrame frame;
    const auto t0 = Clock::now();
    Image gray = to_grayscale(Image{raw, PixelRange::Byte});
    const auto t1 = Clock::now();
    Image unit = normalize(gray);
    const auto t2 = Clock::now();
    Image scaled = resize(unit, target_size);
    const auto t3 = Clock::now();
    frame.input = std::move(scaled.pixels);
    frame.timings = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
    return frame;
}

Split train_test_split(const data::Dataset& dataset, double ratio, std::uint64_t seed) {
    if (dataset.empty()) throw DataError("cannot split an empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0,1)");
    const std::size_t n = dataset.size();
    const auto train_total = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    if (train_total == 0 || train_total == n)
        throw DataError("split ratio " + std::to_string(ratio) + " leaves an empty train or test set for " +
                        std::to_string(n) + " samples");

    const auto counts = dataset.class_counts();
    // Per-class quotas of the train total; sums to train_total exactly.
    std::vector<std::size_t> quota(counts.size());
    {
        std::vector<double> remainder(counts.size());
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            const double q = ratio * static_cast<double>(counts[c]);
            quota[c] = std::min(counts[c], static_cast<std::size_t>(std::floor(q + 1e-9)));
            remainder[c] = q - static_cast<double>(quota[c]);
            assigned += quota[c];
        }
        std::vector<std::size_t> order(counts.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
        for (std::size_t k = 0; assigned < train_total && k < order.size(); ++k) {
            if (quota[order[k]] < counts[order[k]]) {
                ++quota[order[k]];
                ++assigned;
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    Split split;
    split.train.class_names = dataset.class_names;
    split.test.class_names = dataset.class_names;
    split.train.samples.reserve(train_total);
    split.test.samples.reserve(n - train_total);
    for (auto idx : order) {
        const auto& s = dataset.samples[idx];
        if (quota[s.label] > 0) {
            --quota[s.label];
            split.train.samples.push_back(s);
        } else {
            split.test.samples.push_back(s);
        }
    }
    return split;
}

std::vector<nn::Example> to_examples(const data::Dataset& dataset, std::size_t target_size) {
    std::vector<nn::Example> out;
    out.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        try {
            out.push_back({preprocess_frame(s.image, target_size).input, s.label});
        } catch (const Error& e) {
            throw DataError("preprocessing failed for sample '" + s.id + "': " + e.what());
        }
    }
    return out;
}

}  // namespace wdp::preprocess
