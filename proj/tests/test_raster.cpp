#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "layerkit/raster.hpp"
#include "layerkit/rng.hpp"

using namespace layerkit;

namespace {

RasterRGBA random_raster(Rng& rng, int w, int h, bool random_alpha = true) {
    RasterRGBA img(w, h);
    for (std::size_t i = 0; i < img.pixels.size(); i += 4) {
        img.pixels[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        img.pixels[i + 1] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        img.pixels[i + 2] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        img.pixels[i + 3] = random_alpha ? static_cast<std::uint8_t>(rng.uniform_int(0, 255)) : 255;
    }
    return img;
}

BinaryMask random_mask(Rng& rng, int w, int h, double density) {
    BinaryMask m(w, h);
    for (std::uint8_t& b : m.bits) b = rng.bernoulli(density) ? 1 : 0;
    return m;
}

// Independent pixel-count oracle for IoU.
double iou_oracle(const BinaryMask& a, const BinaryMask& b) {
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        if (a.bits[i] && b.bits[i]) ++inter;
        if (a.bits[i] || b.bits[i]) ++uni;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace

TEST_CASE("alpha_over passes opaque top and transparent top through", "[raster]") {
    Rng rng(99);
    const RasterRGBA bottom = random_raster(rng, 8, 8);
    const RasterRGBA opaque = random_raster(rng, 8, 8, false);
    CHECK(alpha_over(opaque, bottom) == opaque);

    RasterRGBA clear(8, 8);
    CHECK(alpha_over(clear, bottom) == bottom);
}

TEST_CASE("alpha_over half-transparent red over black", "[raster]") {
    const RasterRGBA top = RasterRGBA::filled(2, 2, 255, 0, 0, 128);
    const RasterRGBA bottom = RasterRGBA::filled(2, 2, 0, 0, 0, 255);
    const RasterRGBA out = alpha_over(top, bottom);
    // source-over with a_t = 128/255 over opaque black:
    // out alpha = 1, out red = 255 * (128/255) -> 128 after rounding
    CHECK(out.at(0, 0)[0] == 128);
    CHECK(out.at(0, 0)[1] == 0);
    CHECK(out.at(0, 0)[2] == 0);
    CHECK(out.at(0, 0)[3] == 255);
}

TEST_CASE("alpha_over rejects mismatched sizes", "[raster]") {
    CHECK_THROWS_AS(alpha_over(RasterRGBA(2, 2), RasterRGBA(3, 2)), DimensionMismatch);
}

TEST_CASE("mask_from_alpha uses a strict threshold", "[raster]") {
    RasterRGBA img(3, 1);
    CHECK(mask_from_alpha(img).popcount() == 0);

    img.at(1, 0)[3] = 1;
    const BinaryMask m = mask_from_alpha(img, 0);
    CHECK(m.popcount() == 1);
    CHECK(m.bits[1] == 1);
    CHECK(mask_from_alpha(img, 1).popcount() == 0);

    const RasterRGBA opaque = RasterRGBA::filled(3, 1, 5, 5, 5, 255);
    CHECK(mask_from_alpha(opaque).popcount() == 3);
}

TEST_CASE("masked_l1 basics", "[raster]") {
    // Layer identical to the masked input -> exactly 0.
    const RasterRGBA img = RasterRGBA::filled(4, 4, 120, 30, 220, 255);
    CHECK(masked_l1(img, img, mask_from_alpha(img)) == 0.0);

    // Uniform per-channel difference of 51/255 = 0.2 inside the mask.
    const RasterRGBA layer = RasterRGBA::filled(4, 4, 69, 235, 169, 255);
    const RasterRGBA input = RasterRGBA::filled(4, 4, 120, 184, 220, 255);
    const double expected = (51.0 / 255.0) * (3.0 * 16.0) / (3.0 * 16.0 + 1e-8);
    CHECK(masked_l1(input, layer, mask_from_alpha(layer)) == Catch::Approx(expected).epsilon(1e-12));

    // Empty mask and empty layer -> 0 (epsilon rescues the division).
    const RasterRGBA empty(4, 4);
    CHECK(masked_l1(img, empty, mask_from_alpha(empty)) == 0.0);
}

TEST_CASE("masked_l1 penalizes off-mask paint", "[raster]") {
    const RasterRGBA img = RasterRGBA::filled(2, 1, 100, 100, 100, 255);
    RasterRGBA layer(2, 1);
    // Pixel 0 painted, pixel 1 clear; mask only covers pixel 1.
    layer.at(0, 0)[0] = 255;
    layer.at(0, 0)[3] = 255;
    BinaryMask mask(2, 1);
    mask.bits[1] = 1;
    const double v = masked_l1(img, layer, mask);
    // numerator: off-mask premultiplied red (1.0) + on-mask |img - 0| over rgb
    const double expected = (1.0 + 3.0 * 100.0 / 255.0) / (3.0 + 1e-8);
    CHECK(v == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("iou example cases", "[raster]") {
    BinaryMask a(4, 4), b(4, 4);
    // two 2x2 squares overlapping in a 1x2 strip
    auto set = [](BinaryMask& m, int x0, int y0) {
        for (int y = y0; y < y0 + 2; ++y) {
            for (int x = x0; x < x0 + 2; ++x) {
                m.bits[static_cast<std::size_t>(y * m.width + x)] = 1;
            }
        }
    };
    set(a, 0, 0);
    set(b, 1, 0);
    CHECK(iou(a, b) == Catch::Approx(2.0 / 6.0).epsilon(1e-15));

    CHECK(iou(a, a) == 1.0);
    BinaryMask empty(4, 4);
    CHECK(iou(empty, empty) == 1.0);
    CHECK(iou(a, empty) == 0.0);

    BinaryMask c(4, 4), d(4, 4);
    c.bits[0] = 1;
    d.bits[5] = 1;
    CHECK(iou(c, d) == 0.0);
}

TEST_CASE("iou matches the pixel-count oracle and is symmetric", "[raster]") {
    Rng rng(7);
    for (int iter = 0; iter < 300; ++iter) {
        const BinaryMask a = random_mask(rng, 16, 9, rng.uniform(0.0, 1.0));
        const BinaryMask b = random_mask(rng, 16, 9, rng.uniform(0.0, 1.0));
        const double v = iou(a, b);
        CHECK(v == iou_oracle(a, b));
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("rgb_l1 example cases", "[raster]") {
    const RasterRGBA black = RasterRGBA::filled(4, 2, 0, 0, 0, 255);
    const RasterRGBA white = RasterRGBA::filled(4, 2, 255, 255, 255, 255);
    CHECK(rgb_l1(black, black) == 0.0);
    CHECK(rgb_l1(black, white) == 1.0);

    // Half the pixels differ by exactly 51 in one channel.
    RasterRGBA a = RasterRGBA::filled(2, 1, 100, 50, 0, 255);
    RasterRGBA b = a;
    b.at(0, 0)[0] = 151;
    CHECK(rgb_l1(a, b) == Catch::Approx(51.0 / (255.0 * 3.0 * 2.0)).epsilon(1e-12));
}

TEST_CASE("rgb_l1 is a metric", "[raster]") {
    Rng rng(1234);
    for (int iter = 0; iter < 100; ++iter) {
        const RasterRGBA a = random_raster(rng, 6, 5);
        const RasterRGBA b = random_raster(rng, 6, 5);
        const RasterRGBA c = random_raster(rng, 6, 5);
        const double ab = rgb_l1(a, b), ba = rgb_l1(b, a);
        CHECK(ab == ba);
        CHECK(rgb_l1(a, a) == 0.0);
        CHECK(rgb_l1(a, c) <= ab + rgb_l1(b, c) + 1e-15);
    }
}
