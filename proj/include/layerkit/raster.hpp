#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "layerkit/errors.hpp"

namespace layerkit {

/// 8-bit RGBA image, row major, straight (non-premultiplied) alpha.
struct RasterRGBA {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // 4 * width * height

    RasterRGBA() = default;
    RasterRGBA(int w, int h)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 4, 0) {}

    static RasterRGBA filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                             std::uint8_t a) {
        RasterRGBA img(w, h);
        for (std::size_t i = 0; i < img.pixels.size(); i += 4) {
            img.pixels[i] = r;
            img.pixels[i + 1] = g;
            img.pixels[i + 2] = b;
            img.pixels[i + 3] = a;
        }
        return img;
    }

    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)) * 4;
    }

    std::uint8_t* at(int x, int y) { return pixels.data() + offset(x, y); }
    const std::uint8_t* at(int x, int y) const { return pixels.data() + offset(x, y); }

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    friend bool operator==(const RasterRGBA&, const RasterRGBA&) = default;
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits; // 0 or 1, row major

    BinaryMask() = default;
    BinaryMask(int w, int h)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

    std::size_t popcount() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += b;
        return n;
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

namespace detail {

inline void require_same_size(int wa, int ha, int wb, int hb, const char* what) {
    if (wa != wb || ha != hb) {
        throw DimensionMismatch(std::string(what) + ": dimensions differ");
    }
}

/// round-half-up quantization of v in [0,1] to 8 bits.
inline std::uint8_t quantize8(double v) {
    if (v <= 0.0) return 0;
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

} // namespace detail

/// Source-over compositing. Computed in double on straight-alpha values
/// scaled to [0,1]; quantized once at the end. Fully opaque top pixels
/// pass through bit-exactly.
inline RasterRGBA alpha_over(const RasterRGBA& top, const RasterRGBA& bottom) {
    detail::require_same_size(top.width, top.height, bottom.width, bottom.height, "alpha_over");
    RasterRGBA out(top.width, top.height);
    for (std::size_t i = 0; i < out.pixels.size(); i += 4) {
        const double at = top.pixels[i + 3] / 255.0;
        const double ab = bottom.pixels[i + 3] / 255.0;
        const double ao = at + ab * (1.0 - at);
        if (ao == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
            const double ct = top.pixels[i + static_cast<std::size_t>(c)] / 255.0;
            const double cb = bottom.pixels[i + static_cast<std::size_t>(c)] / 255.0;
            const double co = (ct * at + cb * ab * (1.0 - at)) / ao;
            out.pixels[i + static_cast<std::size_t>(c)] = detail::quantize8(co);
        }
        out.pixels[i + 3] = detail::quantize8(ao);
    }
    return out;
}

/// Bit set iff alpha > threshold (strict).
inline BinaryMask mask_from_alpha(const RasterRGBA& img, std::uint8_t threshold = 0) {
    BinaryMask m(img.width, img.height);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        m.bits[i] = img.pixels[i * 4 + 3] > threshold ? 1 : 0;
    }
    return m;
}

/// Mean absolute difference between the masked input and the
/// alpha-premultiplied RGB of a layer, normalized per mask pixel and
/// channel: sum |mask*I - a_L*RGB_L| / (3*|mask| + 1e-8). Off-mask layer
/// paint counts against the numerator.
inline double masked_l1(const RasterRGBA& img, const RasterRGBA& layer, const BinaryMask& mask) {
    detail::require_same_size(img.width, img.height, layer.width, layer.height, "masked_l1");
    detail::require_same_size(img.width, img.height, mask.width, mask.height, "masked_l1");
    double numerator = 0.0;
    for (std::size_t p = 0; p < mask.bits.size(); ++p) {
        const std::size_t i = p * 4;
        const double al = layer.pixels[i + 3] / 255.0;
        for (int c = 0; c < 3; ++c) {
            const double premul = (layer.pixels[i + static_cast<std::size_t>(c)] / 255.0) * al;
            const double ref = mask.bits[p] ? img.pixels[i + static_cast<std::size_t>(c)] / 255.0 : 0.0;
            numerator += std::abs(ref - premul);
        }
    }
    const double denominator = 3.0 * static_cast<double>(mask.popcount()) + 1e-8;
    return numerator / denominator;
}

/// Intersection over union. Two empty masks compare as 1 so that a
/// correct "no paint" prediction earns full credit.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
    detail::require_same_size(a.width, a.height, b.width, b.height, "iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Mean per-channel absolute difference on alpha-premultiplied RGB,
/// intensities in [0,1].
inline double rgb_l1(const RasterRGBA& a, const RasterRGBA& b) {
    detail::require_same_size(a.width, a.height, b.width, b.height, "rgb_l1");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); i += 4) {
        const double aa = a.pixels[i + 3] / 255.0;
        const double ab = b.pixels[i + 3] / 255.0;
        for (int c = 0; c < 3; ++c) {
            const double va = (a.pixels[i + static_cast<std::size_t>(c)] / 255.0) * aa;
            const double vb = (b.pixels[i + static_cast<std::size_t>(c)] / 255.0) * ab;
            sum += std::abs(va - vb);
        }
    }
    return sum / (3.0 * static_cast<double>(a.pixel_count()));
}

} // namespace layerkit
