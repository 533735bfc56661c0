#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layerkit/geometry.hpp"

namespace layerkit {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class Direction { ltr, rtl };
enum class Alignment { left, center, right, justify };

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Solid color or a two-stop linear gradient (angle in radians,
/// measured like every other angle in the y-down canvas frame).
struct ColorSpec {
    enum class Kind { solid, linear_gradient };

    Kind kind = Kind::solid;
    Rgb solid_color{};
    std::array<Rgb, 2> stops{};
    double angle = 0.0;

    static ColorSpec solid(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        ColorSpec c;
        c.kind = Kind::solid;
        c.solid_color = {r, g, b};
        return c;
    }

    static ColorSpec gradient(Rgb a, Rgb b, double angle) {
        ColorSpec c;
        c.kind = Kind::linear_gradient;
        c.stops = {a, b};
        c.angle = angle;
        return c;
    }

    friend bool operator==(const ColorSpec&, const ColorSpec&) = default;
};

struct ShadowSpec {
    Rgb color{};
    double offset_angle = 0.0;    // radians in [0, 2*pi)
    double offset_distance = 0.0; // pixels, >= 0
    double blur_radius = 0.0;     // pixels, >= 0
    friend bool operator==(const ShadowSpec&, const ShadowSpec&) = default;
};

/// (x, y) anchors the top-left of the pre-rotation bounding box;
/// rotation by theta pivots about the box center.
struct Geometry {
    double x = 0.0, y = 0.0;
    double w = 0.0, h = 0.0;
    double theta = 0.0; // radians in [0, 2*pi)
    Bending bending{};
    friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct Semantic {
    std::string text;
    Direction direction = Direction::ltr;
    friend bool operator==(const Semantic&, const Semantic&) = default;
};

struct Appearance {
    std::string font_id;
    double font_size = 0.0; // pixels, > 0
    ColorSpec fill{};
    double stroke_width = 0.0; // pixels, >= 0
    ColorSpec stroke_color{};
    std::optional<ShadowSpec> shadow;
    double line_height = 1.2;  // multiplier, > 0
    double char_spacing = 0.0; // pixels, may be negative
    bool italic = false;
    bool bold = false;
    bool underline = false;
    friend bool operator==(const Appearance&, const Appearance&) = default;
};

struct Relational {
    Alignment alignment = Alignment::left;
    int z_order = 0;
    friend bool operator==(const Relational&, const Relational&) = default;
};

struct TextInstance {
    Geometry geometry;
    Semantic semantic;
    Appearance appearance;
    Relational relational;
    friend bool operator==(const TextInstance&, const TextInstance&) = default;
};

struct TextProtocol {
    int canvas_width = 0;
    int canvas_height = 0;
    std::vector<TextInstance> instances;
    friend bool operator==(const TextProtocol&, const TextProtocol&) = default;
};

struct Violation {
    std::string path;
    std::string message;
    friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

inline bool finite(double v) { return std::isfinite(v); }

inline bool valid_utf8(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        int extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c >> 5) == 0x6) {
            extra = 1;
            cp = c & 0x1f;
        } else if ((c >> 4) == 0xe) {
            extra = 2;
            cp = c & 0x0f;
        } else if ((c >> 3) == 0x1e) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + static_cast<std::size_t>(extra) >= s.size()) {
            return false;
        }
        for (int k = 1; k <= extra; ++k) {
            const unsigned char cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
            if ((cc >> 6) != 0x2) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // Reject overlong encodings, surrogates, and out-of-range points.
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
            (extra == 3 && cp < 0x10000) || cp > 0x10FFFF ||
            (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += static_cast<std::size_t>(extra) + 1;
    }
    return true;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

/// Decode UTF-8 to Unicode scalar values. Assumes valid_utf8.
inline std::vector<char32_t> decode_utf8(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            out.push_back(c);
            ++i;
        } else if ((c >> 5) == 0x6) {
            out.push_back(static_cast<char32_t>(((c & 0x1fu) << 6) |
                                                (static_cast<unsigned char>(s[i + 1]) & 0x3fu)));
            i += 2;
        } else if ((c >> 4) == 0xe) {
            out.push_back(static_cast<char32_t>(
                ((c & 0x0fu) << 12) | ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 6) |
                (static_cast<unsigned char>(s[i + 2]) & 0x3fu)));
            i += 3;
        } else {
            out.push_back(static_cast<char32_t>(
                ((c & 0x07u) << 18) | ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 12) |
                ((static_cast<unsigned char>(s[i + 2]) & 0x3fu) << 6) |
                (static_cast<unsigned char>(s[i + 3]) & 0x3fu)));
            i += 4;
        }
    }
    return out;
}

} // namespace detail

/// Collect every invariant violation. An empty result means the
/// protocol is valid; violations are data, not errors.
inline std::vector<Violation> validate(const TextProtocol& p) {
    std::vector<Violation> out;
    const auto add = [&out](std::string path, std::string message) {
        out.push_back({std::move(path), std::move(message)});
    };

    if (p.canvas_width < 1) add("canvas[0]", "canvas width must be >= 1");
    if (p.canvas_height < 1) add("canvas[1]", "canvas height must be >= 1");

    for (std::size_t i = 0; i < p.instances.size(); ++i) {
        const TextInstance& inst = p.instances[i];
        const std::string base = "instances[" + std::to_string(i) + "]";
        const Geometry& g = inst.geometry;

        if (!detail::finite(g.x) || !detail::finite(g.y)) {
            add(base + ".geometry", "position must be finite");
        }
        if (!(g.w > 0.0) || !detail::finite(g.w)) add(base + ".geometry.w", "width must be > 0");
        if (!(g.h > 0.0) || !detail::finite(g.h)) add(base + ".geometry.h", "height must be > 0");
        if (!(g.theta >= 0.0 && g.theta < kTwoPi)) {
            add(base + ".geometry.theta", "theta must lie in [0, 2*pi)");
        }
        if (g.bending.tau != 0 && g.bending.tau != 1) {
            add(base + ".geometry.bending.tau", "tau must be 0 or 1");
        }
        if (g.bending.tau == 1) {
            bool finite_pts = true;
            for (const Vec2& q : g.bending.p) {
                finite_pts = finite_pts && detail::finite(q.x) && detail::finite(q.y);
            }
            if (!finite_pts) {
                add(base + ".geometry.bending.p", "control points must be finite");
            } else if (g.bending.p[0] == g.bending.p[1] && g.bending.p[0] == g.bending.p[2] &&
                       g.bending.p[0] == g.bending.p[3]) {
                add(base + ".geometry.bending", "degenerate curve: all control points coincide");
            }
        }

        if (!detail::valid_utf8(inst.semantic.text)) {
            add(base + ".semantic.text", "text is not valid UTF-8");
        }

        const Appearance& a = inst.appearance;
        if (a.font_id.empty()) add(base + ".appearance.font", "font identifier must be nonempty");
        if (!(a.font_size > 0.0) || !detail::finite(a.font_size)) {
            add(base + ".appearance.size", "font size must be > 0");
        }
        if (!(a.stroke_width >= 0.0) || !detail::finite(a.stroke_width)) {
            add(base + ".appearance.stroke_width", "stroke width must be >= 0");
        }
        if (!(a.line_height > 0.0) || !detail::finite(a.line_height)) {
            add(base + ".appearance.line_height", "line height must be > 0");
        }
        if (!detail::finite(a.char_spacing)) {
            add(base + ".appearance.char_spacing", "char spacing must be finite");
        }
        const auto check_color = [&](const ColorSpec& c, const std::string& path) {
            if (c.kind == ColorSpec::Kind::linear_gradient &&
                !(c.angle >= 0.0 && c.angle < kTwoPi)) {
                add(path + ".angle", "gradient angle must lie in [0, 2*pi)");
            }
        };
        check_color(a.fill, base + ".appearance.fill");
        check_color(a.stroke_color, base + ".appearance.stroke_color");
        if (a.shadow) {
            if (!(a.shadow->offset_angle >= 0.0 && a.shadow->offset_angle < kTwoPi)) {
                add(base + ".appearance.shadow.angle", "shadow angle must lie in [0, 2*pi)");
            }
            if (!(a.shadow->offset_distance >= 0.0) || !detail::finite(a.shadow->offset_distance)) {
                add(base + ".appearance.shadow.distance", "shadow distance must be >= 0");
            }
            if (!(a.shadow->blur_radius >= 0.0) || !detail::finite(a.shadow->blur_radius)) {
                add(base + ".appearance.shadow.blur", "shadow blur must be >= 0");
            }
        }
    }

    for (std::size_t i = 0; i < p.instances.size(); ++i) {
        for (std::size_t j = i + 1; j < p.instances.size(); ++j) {
            if (p.instances[i].relational.z_order == p.instances[j].relational.z_order) {
                add("instances[" + std::to_string(i) + "].relational.z",
                    "duplicate z-order with instances[" + std::to_string(j) + "]");
            }
        }
    }
    return out;
}

} // namespace layerkit
