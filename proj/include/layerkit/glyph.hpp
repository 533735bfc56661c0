#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layerkit/errors.hpp"
#include "layerkit/geometry.hpp"

namespace layerkit {

/// Closed contours in pixels, origin on the baseline, y-down.
struct GlyphOutline {
    std::vector<std::vector<Vec2>> contours;
    double advance = 0.0; // pixels, before char spacing
};

class GlyphSource {
public:
    virtual ~GlyphSource() = default;

    virtual bool has_font(const std::string& font_id) const = 0;
    virtual GlyphOutline glyph(const std::string& font_id, char32_t code_point, double size,
                               bool italic, bool bold) const = 0;
    virtual double ascent(double size) const = 0;
    virtual double descent(double size) const = 0;
};

/// Synthetic vector font family. Every glyph is a rectangle frame plus a
/// 3x6 grid of interior cells toggled by an injective hash of the code
/// point, so glyphs are unique per code point (within the BMP) and
/// byte-identical across runs. All coordinates live on a 1/8-em grid,
/// which keeps integer-pixel layouts exactly representable for font
/// sizes that are multiples of 8.
class BoxFont final : public GlyphSource {
public:
    static const std::vector<std::string>& font_ids() {
        static const std::vector<std::string> ids = {"boxfont", "boxfont-serif", "boxfont-mono",
                                                     "boxfont-round"};
        return ids;
    }

    bool has_font(const std::string& font_id) const override {
        for (const std::string& id : font_ids()) {
            if (id == font_id) return true;
        }
        return false;
    }

    double ascent(double size) const override { return 0.75 * size; }
    double descent(double size) const override { return 0.25 * size; }

    GlyphOutline glyph(const std::string& font_id, char32_t cp, double size, bool italic,
                       bool bold) const override {
        if (!has_font(font_id)) {
            throw FontNotFound("unknown font id '" + font_id + "'");
        }
        GlyphOutline out;
        const double unit = size / 8.0;
        out.advance = 6.0 * unit;
        if (cp == U' ' || cp == U'\t' ) {
            return out;
        }
        if (cp < 0x20) {
            out.advance = 0.0;
            return out;
        }

        // Units of size/8; y is relative to the baseline (ascent 6 up,
        // descent 2 down), glyph body spans x in [0, 5].
        const auto cell = [&out, unit, italic](double x0, double y0, double x1, double y1) {
            std::vector<Vec2> quad = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
            for (Vec2& v : quad) {
                if (italic) v.x -= 0.25 * v.y; // shear: top leans toward +x
                v = unit * v;
            }
            out.contours.push_back(std::move(quad));
        };

        cell(0, -6, 1, 2);  // left bar
        cell(4, -6, 5, 2);  // right bar
        cell(1, -6, 4, -5); // top bar
        if (bold) {
            cell(1, 0, 4, 2); // thick bottom bar
        } else {
            cell(1, 1, 4, 2);
        }

        const std::uint64_t salt = fnv1a(font_id);
        const std::uint64_t mult = bold ? 0x9E3779B97F4A7C15ULL : 0xC2B2AE3D27D4EB4FULL;
        // Odd multiplier: the map cp -> (cp * mult) mod 2^18 is a bijection,
        // so patterns are distinct for all code points below 0x40000.
        const std::uint64_t pattern = ((static_cast<std::uint64_t>(cp) ^ salt) * mult) & 0x3FFFF;
        for (int row = 0; row < 6; ++row) {
            for (int col = 0; col < 3; ++col) {
                if ((pattern >> (row * 3 + col)) & 1ULL) {
                    const double x0 = 1.0 + col;
                    const double y0 = -5.0 + row;
                    cell(x0, y0, x0 + 1.0, y0 + 1.0);
                }
            }
        }
        return out;
    }

private:
    static std::uint64_t fnv1a(const std::string& s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

} // namespace layerkit
