#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "layerkit/geometry.hpp"
#include "layerkit/glyph.hpp"
#include "layerkit/layout.hpp"
#include "layerkit/protocol.hpp"
#include "layerkit/raster.hpp"

namespace layerkit {
namespace detail {

using Polygon = std::vector<Vec2>;

struct Region {
    int x0 = 0, y0 = 0;
    int w = 0, h = 0;
    bool empty() const { return w <= 0 || h <= 0; }
};

/// 8-bit coverage over a pixel region (region coordinates may extend
/// beyond the canvas; compositing clips).
struct CoverageMap {
    Region region;
    std::vector<std::uint8_t> cov;
};

constexpr int kSS = 4; // 4x4 ordered supersampling

inline Region region_for(const std::vector<Polygon>& polys, int margin, int canvas_w,
                         int canvas_h) {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    bool first = true;
    for (const Polygon& poly : polys) {
        for (const Vec2& v : poly) {
            if (first) {
                min_x = max_x = v.x;
                min_y = max_y = v.y;
                first = false;
            } else {
                min_x = std::min(min_x, v.x);
                max_x = std::max(max_x, v.x);
                min_y = std::min(min_y, v.y);
                max_y = std::max(max_y, v.y);
            }
        }
    }
    if (first) return {};
    Region r;
    r.x0 = static_cast<int>(std::floor(min_x)) - margin;
    r.y0 = static_cast<int>(std::floor(min_y)) - margin;
    int x1 = static_cast<int>(std::ceil(max_x)) + margin;
    int y1 = static_cast<int>(std::ceil(max_y)) + margin;
    // Bound memory: nothing farther than `margin` from the canvas can
    // influence visible pixels.
    r.x0 = std::max(r.x0, -margin - 1);
    r.y0 = std::max(r.y0, -margin - 1);
    x1 = std::min(x1, canvas_w + margin + 1);
    y1 = std::min(y1, canvas_h + margin + 1);
    r.w = x1 - r.x0;
    r.h = y1 - r.y0;
    return r;
}

/// Boolean sample grid at 4x the pixel resolution of a region.
struct SampleGrid {
    Region region;
    std::vector<std::uint8_t> bits; // (4w) x (4h)

    int sw() const { return region.w * kSS; }
    int sh() const { return region.h * kSS; }
};

/// Scanline fill, even-odd rule per polygon, union across polygons.
/// Sample centers sit at (i + 0.5)/4 pixel offsets, so geometry landing
/// on integer pixel edges yields all-or-nothing coverage.
inline SampleGrid rasterize(const std::vector<Polygon>& polys, const Region& region) {
    SampleGrid grid;
    grid.region = region;
    if (region.empty()) return grid;
    grid.bits.assign(static_cast<std::size_t>(grid.sw()) * static_cast<std::size_t>(grid.sh()), 0);

    // Bucket polygons by the sample rows they can touch.
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(grid.sh()));
    for (std::size_t pi = 0; pi < polys.size(); ++pi) {
        double ymin = polys[pi][0].y, ymax = polys[pi][0].y;
        for (const Vec2& v : polys[pi]) {
            ymin = std::min(ymin, v.y);
            ymax = std::max(ymax, v.y);
        }
        int gy0 = static_cast<int>(std::floor((ymin - region.y0) * kSS)) - 1;
        int gy1 = static_cast<int>(std::ceil((ymax - region.y0) * kSS)) + 1;
        gy0 = std::max(gy0, 0);
        gy1 = std::min(gy1, grid.sh() - 1);
        for (int gy = gy0; gy <= gy1; ++gy) {
            rows[static_cast<std::size_t>(gy)].push_back(static_cast<int>(pi));
        }
    }

    std::vector<double> crossings;
    for (int gy = 0; gy < grid.sh(); ++gy) {
        const double ys = region.y0 + (gy + 0.5) / kSS;
        std::uint8_t* row = grid.bits.data() + static_cast<std::size_t>(gy) * grid.sw();
        for (int pi : rows[static_cast<std::size_t>(gy)]) {
            const Polygon& poly = polys[static_cast<std::size_t>(pi)];
            crossings.clear();
            for (std::size_t e = 0; e < poly.size(); ++e) {
                const Vec2& a = poly[e];
                const Vec2& b = poly[(e + 1) % poly.size()];
                if ((a.y <= ys && b.y > ys) || (b.y <= ys && a.y > ys)) {
                    crossings.push_back(a.x + (ys - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
            std::sort(crossings.begin(), crossings.end());
            for (std::size_t c = 0; c + 1 < crossings.size(); c += 2) {
                const double xa = crossings[c], xb = crossings[c + 1];
                int gx0 = static_cast<int>(std::ceil((xa - region.x0) * kSS - 0.5));
                int gx1 = static_cast<int>(std::ceil((xb - region.x0) * kSS - 0.5)) - 1;
                gx0 = std::max(gx0, 0);
                gx1 = std::min(gx1, grid.sw() - 1);
                for (int gx = gx0; gx <= gx1; ++gx) row[gx] = 1;
            }
        }
    }
    return grid;
}

/// Chebyshev (square) dilation by `radius` samples, separable into one
/// horizontal and one vertical 1D dilation. A square pen keeps
/// axis-aligned geometry axis-aligned, which the synthetic corpus
/// relies on for exact reproduction.
inline void dilate(SampleGrid& grid, int radius) {
    if (radius <= 0 || grid.bits.empty()) return;
    const int w = grid.sw(), h = grid.sh();
    const std::int32_t inf = w + h + 2;

    // 1D dilation: set iff a set sample lies within `radius`, found by
    // forward/backward nearest-set scans.
    const auto dilate_line = [radius, inf](std::uint8_t* line, int n, int stride) {
        static thread_local std::vector<std::int32_t> dist;
        dist.assign(static_cast<std::size_t>(n), inf);
        std::int32_t d = inf;
        for (int i = 0; i < n; ++i) {
            d = line[i * stride] ? 0 : (d >= inf ? inf : d + 1);
            dist[static_cast<std::size_t>(i)] = d;
        }
        d = inf;
        for (int i = n - 1; i >= 0; --i) {
            d = line[i * stride] ? 0 : (d >= inf ? inf : d + 1);
            if (std::min(d, dist[static_cast<std::size_t>(i)]) <= radius) line[i * stride] = 1;
        }
    };

    for (int y = 0; y < h; ++y) {
        dilate_line(grid.bits.data() + static_cast<std::size_t>(y) * w, w, 1);
    }
    for (int x = 0; x < w; ++x) {
        dilate_line(grid.bits.data() + static_cast<std::size_t>(x), h, w);
    }
}

inline CoverageMap downsample(const SampleGrid& grid) {
    CoverageMap map;
    map.region = grid.region;
    if (grid.region.empty()) return map;
    map.cov.assign(static_cast<std::size_t>(grid.region.w) * static_cast<std::size_t>(grid.region.h), 0);
    for (int py = 0; py < grid.region.h; ++py) {
        for (int px = 0; px < grid.region.w; ++px) {
            int count = 0;
            for (int sy = 0; sy < kSS; ++sy) {
                const std::uint8_t* row = grid.bits.data() +
                                          static_cast<std::size_t>(py * kSS + sy) * grid.sw() +
                                          static_cast<std::size_t>(px) * kSS;
                count += row[0] + row[1] + row[2] + row[3];
            }
            // round-half-up of count * 255 / 16, integer only
            map.cov[static_cast<std::size_t>(py) * grid.region.w + static_cast<std::size_t>(px)] =
                static_cast<std::uint8_t>((count * 510 + 16) / 32);
        }
    }
    return map;
}

/// One box-blur pass (horizontal + vertical), zero padding, integer
/// round-half-up. Window is 2*radius + 1.
inline void box_blur_pass(CoverageMap& map, int radius) {
    if (radius <= 0 || map.cov.empty()) return;
    const int w = map.region.w, h = map.region.h;
    const int win = 2 * radius + 1;
    std::vector<std::uint8_t> tmp(map.cov.size());
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = map.cov.data() + static_cast<std::size_t>(y) * w;
        std::uint8_t* dst = tmp.data() + static_cast<std::size_t>(y) * w;
        int sum = 0;
        for (int x = 0; x < std::min(radius, w); ++x) sum += src[x];
        for (int x = 0; x < w; ++x) {
            if (x + radius < w) sum += src[x + radius];
            dst[x] = static_cast<std::uint8_t>((2 * sum + win) / (2 * win));
            if (x - radius >= 0) sum -= src[x - radius];
        }
    }
    for (int x = 0; x < w; ++x) {
        int sum = 0;
        for (int y = 0; y < std::min(radius, h); ++y) {
            sum += tmp[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
        }
        for (int y = 0; y < h; ++y) {
            if (y + radius < h) {
                sum += tmp[static_cast<std::size_t>(y + radius) * w + static_cast<std::size_t>(x)];
            }
            map.cov[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] =
                static_cast<std::uint8_t>((2 * sum + win) / (2 * win));
            if (y - radius >= 0) {
                sum -= tmp[static_cast<std::size_t>(y - radius) * w + static_cast<std::size_t>(x)];
            }
        }
    }
}

/// Per-pixel color for a fill: solid, or a two-stop linear gradient
/// spanning the instance's fill bounding box along the gradient angle.
struct Paint {
    const ColorSpec* spec = nullptr;
    Rgb flat{};      // used when spec == nullptr (shadow color)
    Region frame{};  // gradient reference frame

    Rgb at(int px, int py) const {
        if (!spec || spec->kind == ColorSpec::Kind::solid) {
            return spec ? spec->solid_color : flat;
        }
        const double ux = std::cos(spec->angle), uy = std::sin(spec->angle);
        const double corners_x[2] = {static_cast<double>(frame.x0),
                                     static_cast<double>(frame.x0 + frame.w)};
        const double corners_y[2] = {static_cast<double>(frame.y0),
                                     static_cast<double>(frame.y0 + frame.h)};
        double dmin = 0, dmax = 0;
        bool first = true;
        for (double cx : corners_x) {
            for (double cy : corners_y) {
                const double d = cx * ux + cy * uy;
                if (first) {
                    dmin = dmax = d;
                    first = false;
                } else {
                    dmin = std::min(dmin, d);
                    dmax = std::max(dmax, d);
                }
            }
        }
        double t = 0.0;
        if (dmax > dmin) {
            const double d = (px + 0.5) * ux + (py + 0.5) * uy;
            t = std::clamp((d - dmin) / (dmax - dmin), 0.0, 1.0);
        }
        const auto lerp = [t](std::uint8_t a, std::uint8_t b) {
            return static_cast<std::uint8_t>(
                std::floor((1.0 - t) * a + t * b + 0.5));
        };
        return {lerp(spec->stops[0].r, spec->stops[1].r), lerp(spec->stops[0].g, spec->stops[1].g),
                lerp(spec->stops[0].b, spec->stops[1].b)};
    }
};

/// Working canvas: straight-alpha doubles, quantized once at the end.
struct CanvasBuffer {
    int w = 0, h = 0;
    std::vector<double> data; // r,g,b,a in [0,1]

    CanvasBuffer(int width, int height)
        : w(width), h(height),
          data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4, 0.0) {}

    void composite(const CoverageMap& map, const Paint& paint) {
        for (int ry = 0; ry < map.region.h; ++ry) {
            const int py = map.region.y0 + ry;
            if (py < 0 || py >= h) continue;
            for (int rx = 0; rx < map.region.w; ++rx) {
                const int px = map.region.x0 + rx;
                if (px < 0 || px >= w) continue;
                const std::uint8_t c =
                    map.cov[static_cast<std::size_t>(ry) * map.region.w + static_cast<std::size_t>(rx)];
                if (c == 0) continue;
                const double as = c / 255.0;
                const Rgb rgb = paint.at(px, py);
                const double src[3] = {rgb.r / 255.0, rgb.g / 255.0, rgb.b / 255.0};
                double* dst = data.data() +
                              (static_cast<std::size_t>(py) * w + static_cast<std::size_t>(px)) * 4;
                const double ab = dst[3];
                const double ao = as + ab * (1.0 - as);
                for (int ch = 0; ch < 3; ++ch) {
                    dst[ch] = (src[ch] * as + dst[ch] * ab * (1.0 - as)) / ao;
                }
                dst[3] = ao;
            }
        }
    }

    RasterRGBA quantize() const {
        RasterRGBA out(w, h);
        for (std::size_t i = 0; i < data.size(); i += 4) {
            if (data[i + 3] <= 0.0) continue;
            out.pixels[i] = quantize8(data[i]);
            out.pixels[i + 1] = quantize8(data[i + 1]);
            out.pixels[i + 2] = quantize8(data[i + 2]);
            out.pixels[i + 3] = quantize8(data[i + 3]);
        }
        return out;
    }
};

inline std::vector<Polygon> instance_polygons(const TextInstance& inst, const LayoutRun& run,
                                              const GlyphSource& source) {
    std::vector<Polygon> polys;
    for (const GlyphPlacement& pl : run.glyphs) {
        const GlyphOutline outline = source.glyph(inst.appearance.font_id, pl.code_point, pl.scale,
                                                  inst.appearance.italic, inst.appearance.bold);
        const double ca = std::cos(pl.rotation), sa = std::sin(pl.rotation);
        for (const std::vector<Vec2>& contour : outline.contours) {
            Polygon poly;
            poly.reserve(contour.size());
            for (const Vec2& v : contour) {
                poly.push_back({pl.baseline.x + v.x * ca - v.y * sa,
                                pl.baseline.y + v.x * sa + v.y * ca});
            }
            polys.push_back(std::move(poly));
        }
    }
    for (const DecorationQuad& q : run.underlines) {
        polys.emplace_back(q.corners.begin(), q.corners.end());
    }
    return polys;
}

} // namespace detail

/// Deterministic render of a protocol into an RGBA text layer.
/// Instances are drawn in ascending z-order; per instance the draw
/// order is shadow, stroke, fill. Identical inputs produce identical
/// bytes: coverage is accumulated with integer arithmetic after a fixed
/// 4x4 supersampling pattern.
inline RasterRGBA render_text_layer(const TextProtocol& p, const GlyphSource& source) {
    if (const auto violations = validate(p); !violations.empty()) {
        throw InvalidProtocol("cannot render: " + violations.front().path + ": " +
                              violations.front().message);
    }

    detail::CanvasBuffer canvas(p.canvas_width, p.canvas_height);

    std::vector<std::size_t> order(p.instances.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&p](std::size_t a, std::size_t b) {
        return p.instances[a].relational.z_order < p.instances[b].relational.z_order;
    });

    for (std::size_t idx : order) {
        const TextInstance& inst = p.instances[idx];
        const LayoutRun run = layout_instance(inst, source);
        const std::vector<detail::Polygon> polys = detail::instance_polygons(inst, run, source);
        if (polys.empty()) continue;

        const detail::Region frame = detail::region_for(polys, 0, p.canvas_width, p.canvas_height);

        if (inst.appearance.shadow) {
            const ShadowSpec& sh = *inst.appearance.shadow;
            const double dx = sh.offset_distance * std::cos(sh.offset_angle);
            const double dy = sh.offset_distance * std::sin(sh.offset_angle);
            std::vector<detail::Polygon> shifted = polys;
            for (detail::Polygon& poly : shifted) {
                for (Vec2& v : poly) {
                    v.x += dx;
                    v.y += dy;
                }
            }
            const int blur = static_cast<int>(std::llround(sh.blur_radius));
            const detail::Region region =
                detail::region_for(shifted, 3 * blur + 2, p.canvas_width, p.canvas_height);
            detail::CoverageMap cov = detail::downsample(detail::rasterize(shifted, region));
            for (int pass = 0; pass < 3; ++pass) detail::box_blur_pass(cov, blur);
            detail::Paint paint;
            paint.flat = sh.color;
            canvas.composite(cov, paint);
        }

        if (inst.appearance.stroke_width > 0.0) {
            const int margin = static_cast<int>(std::ceil(inst.appearance.stroke_width)) + 2;
            const detail::Region region =
                detail::region_for(polys, margin, p.canvas_width, p.canvas_height);
            detail::SampleGrid grid = detail::rasterize(polys, region);
            detail::dilate(grid,
                           static_cast<int>(std::llround(inst.appearance.stroke_width * detail::kSS)));
            detail::Paint paint;
            paint.spec = &inst.appearance.stroke_color;
            paint.frame = frame;
            canvas.composite(detail::downsample(grid), paint);
        }

        {
            const detail::Region region =
                detail::region_for(polys, 1, p.canvas_width, p.canvas_height);
            detail::Paint paint;
            paint.spec = &inst.appearance.fill;
            paint.frame = frame;
            canvas.composite(detail::downsample(detail::rasterize(polys, region)), paint);
        }
    }
    return canvas.quantize();
}

/// Debug view of glyph placements: one dot per baseline, a whisker
/// along the local tangent, and underline quads.
inline std::string layout_debug_svg(const TextProtocol& p, const GlyphSource& source) {
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.canvas_width
        << "\" height=\"" << p.canvas_height << "\">\n";
    for (const TextInstance& inst : p.instances) {
        const LayoutRun run = layout_instance(inst, source);
        for (const GlyphPlacement& pl : run.glyphs) {
            const double len = pl.scale * 0.5;
            const double ex = pl.baseline.x + len * std::cos(pl.rotation);
            const double ey = pl.baseline.y + len * std::sin(pl.rotation);
            svg << "  <circle cx=\"" << pl.baseline.x << "\" cy=\"" << pl.baseline.y
                << "\" r=\"1.5\" fill=\"red\"/>\n";
            svg << "  <line x1=\"" << pl.baseline.x << "\" y1=\"" << pl.baseline.y << "\" x2=\""
                << ex << "\" y2=\"" << ey << "\" stroke=\"blue\" stroke-width=\"0.5\"/>\n";
        }
        for (const DecorationQuad& q : run.underlines) {
            svg << "  <polygon points=\"";
            for (const Vec2& v : q.corners) svg << v.x << "," << v.y << " ";
            svg << "\" fill=\"none\" stroke=\"green\" stroke-width=\"0.5\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace layerkit
