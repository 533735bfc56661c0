#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "layerkit/geometry.hpp"
#include "layerkit/glyph.hpp"
#include "layerkit/protocol.hpp"

namespace layerkit {

struct GlyphPlacement {
    char32_t code_point = 0;
    Vec2 baseline{};       // canvas pixels
    double rotation = 0.0; // radians
    double scale = 0.0;    // font size passed through to the glyph source
};

struct DecorationQuad {
    std::array<Vec2, 4> corners{};
};

struct LayoutRun {
    std::vector<GlyphPlacement> glyphs;
    std::vector<DecorationQuad> underlines;
};

namespace detail {

inline bool is_space_cp(char32_t cp) { return cp == U' ' || cp == U'\t'; }

struct Shaped {
    char32_t cp;
    double advance;
    bool printable; // has a visible outline
};

inline double run_width(const std::vector<Shaped>& cps, double spacing, std::size_t from,
                        std::size_t to) {
    if (to <= from) return 0.0;
    double w = 0.0;
    for (std::size_t i = from; i < to; ++i) w += cps[i].advance;
    return w + spacing * static_cast<double>(to - from - 1);
}

/// Greedy word wrap at the box width; a word wider than the box is
/// broken at glyph granularity.
inline std::vector<std::vector<Shaped>> wrap_lines(const std::vector<Shaped>& para,
                                                   double spacing, double box_w) {
    std::vector<std::vector<Shaped>> lines;
    std::vector<Shaped> cur;
    std::size_t i = 0;
    while (i < para.size()) {
        if (is_space_cp(para[i].cp)) {
            // Separator run; committed only if the following word fits.
            std::size_t j = i;
            while (j < para.size() && is_space_cp(para[j].cp)) ++j;
            std::size_t k = j;
            while (k < para.size() && !is_space_cp(para[k].cp)) ++k;
            std::vector<Shaped> cand = cur;
            cand.insert(cand.end(), para.begin() + static_cast<std::ptrdiff_t>(i),
                        para.begin() + static_cast<std::ptrdiff_t>(k));
            if (!cur.empty() && run_width(cand, spacing, 0, cand.size()) > box_w && k > j) {
                lines.push_back(cur);
                cur.clear();
                i = j; // drop the separator at the break
            } else {
                cur = std::move(cand);
                i = k;
            }
        } else {
            std::size_t k = i;
            while (k < para.size() && !is_space_cp(para[k].cp)) ++k;
            std::vector<Shaped> cand = cur;
            cand.insert(cand.end(), para.begin() + static_cast<std::ptrdiff_t>(i),
                        para.begin() + static_cast<std::ptrdiff_t>(k));
            if (!cur.empty() && run_width(cand, spacing, 0, cand.size()) > box_w) {
                lines.push_back(cur);
                cur.clear();
                continue; // retry the word on a fresh line
            }
            cur = std::move(cand);
            i = k;
            // Emergency break for a word wider than the box.
            while (run_width(cur, spacing, 0, cur.size()) > box_w && cur.size() > 1) {
                std::size_t fit = cur.size() - 1;
                while (fit > 1 && run_width(cur, spacing, 0, fit) > box_w) --fit;
                lines.emplace_back(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(fit));
                cur.erase(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(fit));
            }
        }
    }
    lines.push_back(cur);
    return lines;
}

inline void strip_spaces(std::vector<Shaped>& line) {
    while (!line.empty() && is_space_cp(line.back().cp)) line.pop_back();
    std::size_t lead = 0;
    while (lead < line.size() && is_space_cp(line[lead].cp)) ++lead;
    line.erase(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(lead));
}

} // namespace detail

/// Glyph placements for one instance. tau=0 lays horizontal wrapped
/// lines inside the geometry box and rotates the run by theta about the
/// box center; tau=1 walks the bending curve at arc-length steps with
/// glyphs rotated to the local tangent (theta is ignored, and justify
/// falls back to center since stretching along a curve is undefined).
inline LayoutRun layout_instance(const TextInstance& inst, const GlyphSource& source) {
    const Appearance& ap = inst.appearance;
    if (!source.has_font(ap.font_id)) {
        throw FontNotFound("unknown font id '" + ap.font_id + "'");
    }

    LayoutRun run;
    const std::vector<char32_t> cps = detail::decode_utf8(inst.semantic.text);
    const double spacing = ap.char_spacing;
    const double size = ap.font_size;
    const double underline_off = 0.125 * size;
    const double underline_th = 0.0625 * size;

    const auto shape = [&](char32_t cp) -> detail::Shaped {
        const GlyphOutline g = source.glyph(ap.font_id, cp, size, ap.italic, ap.bold);
        return {cp, g.advance, !g.contours.empty()};
    };

    if (inst.geometry.bending.tau == 1) {
        const ArcTable table(inst.geometry.bending);
        std::vector<detail::Shaped> line;
        for (char32_t cp : cps) {
            line.push_back(shape(cp == U'\n' ? U' ' : cp));
        }
        detail::strip_spaces(line);
        if (inst.semantic.direction == Direction::rtl) {
            std::reverse(line.begin(), line.end());
        }
        const double total = detail::run_width(line, spacing, 0, line.size());
        double pen = 0.0;
        switch (inst.relational.alignment) {
            case Alignment::left: pen = 0.0; break;
            case Alignment::right: pen = table.total_length() - total; break;
            case Alignment::center:
            case Alignment::justify: pen = (table.total_length() - total) / 2.0; break;
        }
        for (const detail::Shaped& s : line) {
            if (s.printable) {
                const ArcTable::Sample at = table.at_length(pen);
                run.glyphs.push_back({s.cp, at.position, at.angle, size});
                if (ap.underline) {
                    DecorationQuad q;
                    const std::array<Vec2, 4> local = {
                        Vec2{0.0, underline_off}, Vec2{s.advance, underline_off},
                        Vec2{s.advance, underline_off + underline_th},
                        Vec2{0.0, underline_off + underline_th}};
                    const double ca = std::cos(at.angle), sa = std::sin(at.angle);
                    for (std::size_t c = 0; c < 4; ++c) {
                        const Vec2 l = local[c];
                        q.corners[c] = at.position + Vec2{l.x * ca - l.y * sa, l.x * sa + l.y * ca};
                    }
                    run.underlines.push_back(q);
                }
            }
            pen += s.advance + spacing;
        }
        return run;
    }

    // tau = 0: horizontal lines inside the box.
    const Geometry& g = inst.geometry;
    const double pitch = size * ap.line_height;
    const Vec2 center{g.x + g.w / 2.0, g.y + g.h / 2.0};

    std::vector<std::vector<detail::Shaped>> paragraphs(1);
    for (char32_t cp : cps) {
        if (cp == U'\n') {
            paragraphs.emplace_back();
        } else if (cp >= 0x20 || cp == U'\t') {
            paragraphs.back().push_back(shape(cp));
        }
    }

    int line_index = 0;
    for (const std::vector<detail::Shaped>& para : paragraphs) {
        std::vector<std::vector<detail::Shaped>> lines = detail::wrap_lines(para, spacing, g.w);
        for (std::size_t li = 0; li < lines.size(); ++li, ++line_index) {
            std::vector<detail::Shaped> line = lines[li];
            detail::strip_spaces(line);
            if (line.empty()) continue;

            const double width = detail::run_width(line, spacing, 0, line.size());
            double x0 = 0.0;
            double gap_extra = 0.0;
            switch (inst.relational.alignment) {
                case Alignment::left: break;
                case Alignment::center: x0 = (g.w - width) / 2.0; break;
                case Alignment::right: x0 = g.w - width; break;
                case Alignment::justify: {
                    std::size_t gaps = 0;
                    for (const detail::Shaped& s : line) gaps += detail::is_space_cp(s.cp) ? 1 : 0;
                    const bool last_line = li + 1 == lines.size();
                    if (gaps > 0 && !last_line) {
                        gap_extra = (g.w - width) / static_cast<double>(gaps);
                    }
                    break;
                }
            }
            if (inst.semantic.direction == Direction::rtl) {
                std::reverse(line.begin(), line.end());
            }

            const double baseline_y = g.y + source.ascent(size) + pitch * line_index;
            double pen = g.x + x0;
            double line_end = pen;
            for (const detail::Shaped& s : line) {
                if (s.printable) {
                    run.glyphs.push_back(
                        {s.cp, rotate_about({pen, baseline_y}, center, g.theta), g.theta, size});
                }
                line_end = pen + s.advance;
                pen = line_end + spacing + (detail::is_space_cp(s.cp) ? gap_extra : 0.0);
            }
            if (ap.underline) {
                DecorationQuad q;
                const double yu0 = baseline_y + underline_off;
                const double yu1 = yu0 + underline_th;
                q.corners = {rotate_about({g.x + x0, yu0}, center, g.theta),
                             rotate_about({line_end, yu0}, center, g.theta),
                             rotate_about({line_end, yu1}, center, g.theta),
                             rotate_about({g.x + x0, yu1}, center, g.theta)};
                run.underlines.push_back(q);
            }
        }
    }
    return run;
}

} // namespace layerkit
