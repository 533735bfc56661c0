#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerkit/glyph.hpp"
#include "layerkit/image_io.hpp"
#include "layerkit/protocol.hpp"
#include "layerkit/protocol_json.hpp"
#include "layerkit/raster.hpp"
#include "layerkit/render.hpp"
#include "layerkit/reward.hpp"
#include "layerkit/rng.hpp"

namespace layerkit {

/// Difficulty knobs for the synthetic corpus.
struct CorpusKnobs {
    int min_instances = 1;
    int max_instances = 5;
    double curve_fraction = 0.2; // tau=1 instances (horizontal paths)
    int max_stickers = 6;
    double translucent_sticker_fraction = 0.4;
    double gradient_bg_fraction = 0.5;
    double gradient_fill_fraction = 0.2;
    double stroke_fraction = 0.3;
    double shadow_fraction = 0.25;
    double underline_fraction = 0.25;
    double bold_fraction = 0.2;
    double rtl_fraction = 0.1;
};

/// One synthetic design with exact ground truth. The composite
/// invariant holds byte-exactly: design == over(text, over(sticker, bg)).
struct CorpusItem {
    std::string id;
    std::uint64_t seed = 0;
    int index = 0;
    RasterRGBA design;
    RasterRGBA background; // opaque
    RasterRGBA sticker;    // RGBA with transparency
    RasterRGBA text_layer; // render of `protocol`
    TextProtocol protocol;
    BinaryMask text_mask;
    BinaryMask sticker_mask;
};

namespace detail {

// Text attributes are drawn from ranges that keep every rendered glyph
// edge on integer pixel boundaries (sizes are multiples of 8 so the
// 1/8-em boxfont grid lands on integers; offsets, spacings and line
// pitches are integers; curved paths are horizontal lines with control
// points at exact thirds). Rendering such instances produces a binary
// alpha channel, so compositing them over any background reproduces
// the design bit-exactly and the ground-truth protocol earns the
// maximum reward. Rotation, blur and italics would break this and are
// exercised by renderer tests instead of generated data.
inline const std::vector<std::string>& corpus_words() {
    static const std::vector<std::string> words = {
        "SALE",  "mega",   "deal",   "NOW",   "fresh", "brand",  "vivid",  "retro",
        "party", "summer", "winter", "glow",  "pure",  "bold",   "craft",  "urban",
        "festa", "caf\xc3\xa9", "n\xc3\xa9on", "\xce\xb1\xce\xb2\xce\xb3", "prime", "lux",
        "？OFF", "2024",   "353",    "big",   "tiny",  "zoom",   "flash",  "wave",
        "mint",  "coral",  "dusk",   "dawn",  "north", "south",  "quick",  "super"};
    return words;
}

inline Rgb random_rgb(Rng& rng) {
    return {static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
            static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
            static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
}

inline ColorSpec random_color(Rng& rng, double gradient_fraction) {
    if (rng.bernoulli(gradient_fraction)) {
        return ColorSpec::gradient(random_rgb(rng), random_rgb(rng), rng.uniform(0.0, 6.283185));
    }
    const Rgb c = random_rgb(rng);
    return ColorSpec::solid(c.r, c.g, c.b);
}

/// Width of a run of code points in the boxfont (advance 0.75*size,
/// constant across fonts), plus inter-glyph spacing.
inline int boxfont_run_width(std::size_t glyphs, int size, int spacing) {
    if (glyphs == 0) return 0;
    const int adv = size * 3 / 4;
    return static_cast<int>(glyphs) * adv + spacing * (static_cast<int>(glyphs) - 1);
}

inline RasterRGBA generate_background(Rng& rng, int w, int h, const CorpusKnobs& knobs) {
    if (!rng.bernoulli(knobs.gradient_bg_fraction)) {
        const Rgb c = random_rgb(rng);
        return RasterRGBA::filled(w, h, c.r, c.g, c.b, 255);
    }
    const Rgb c0 = random_rgb(rng);
    const Rgb c1 = random_rgb(rng);
    const double angle = rng.uniform(0.0, 6.283185);
    RasterRGBA img(w, h);
    const double ux = std::cos(angle), uy = std::sin(angle);
    double dmin = 0, dmax = 0;
    bool first = true;
    for (int cy : {0, h}) {
        for (int cx : {0, w}) {
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
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double t = 0.0;
            if (dmax > dmin) {
                t = std::clamp(((x + 0.5) * ux + (y + 0.5) * uy - dmin) / (dmax - dmin), 0.0, 1.0);
            }
            std::uint8_t* px = img.at(x, y);
            px[0] = static_cast<std::uint8_t>(std::floor((1.0 - t) * c0.r + t * c1.r + 0.5));
            px[1] = static_cast<std::uint8_t>(std::floor((1.0 - t) * c0.g + t * c1.g + 0.5));
            px[2] = static_cast<std::uint8_t>(std::floor((1.0 - t) * c0.b + t * c1.b + 0.5));
            px[3] = 255;
        }
    }
    return img;
}

/// Anti-aliased primitives (disks, rectangles, rounded rectangles) with
/// 4x4 supersampled coverage, composited in z order.
inline RasterRGBA generate_sticker_layer(Rng& rng, int w, int h, const CorpusKnobs& knobs) {
    detail::CanvasBuffer canvas(w, h);
    const int count = knobs.max_stickers > 0 ? rng.uniform_int(0, knobs.max_stickers) : 0;
    for (int s = 0; s < count; ++s) {
        const int kind = rng.uniform_int(0, 2);
        const double cx = rng.uniform(0.1 * w, 0.9 * w);
        const double cy = rng.uniform(0.1 * h, 0.9 * h);
        const double half_w = rng.uniform(0.03 * w, 0.18 * w);
        const double half_h = kind == 0 ? half_w : rng.uniform(0.03 * h, 0.18 * h);
        const double corner = kind == 2 ? rng.uniform(0.2, 0.8) * std::min(half_w, half_h) : 0.0;
        const Rgb color = random_rgb(rng);
        const std::uint8_t opacity = rng.bernoulli(knobs.translucent_sticker_fraction) ? 128 : 255;

        const auto inside = [&](double px, double py) {
            const double dx = px - cx, dy = py - cy;
            if (kind == 0) return dx * dx + dy * dy <= half_w * half_w;
            if (kind == 1) return std::abs(dx) <= half_w && std::abs(dy) <= half_h;
            const double qx = std::abs(dx) - (half_w - corner);
            const double qy = std::abs(dy) - (half_h - corner);
            return std::min(std::max(qx, qy), 0.0) +
                       std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) <=
                   corner;
        };

        detail::CoverageMap cov;
        cov.region.x0 = std::max(0, static_cast<int>(std::floor(cx - half_w)) - 1);
        cov.region.y0 = std::max(0, static_cast<int>(std::floor(cy - half_h)) - 1);
        const int x1 = std::min(w, static_cast<int>(std::ceil(cx + half_w)) + 1);
        const int y1 = std::min(h, static_cast<int>(std::ceil(cy + half_h)) + 1);
        cov.region.w = x1 - cov.region.x0;
        cov.region.h = y1 - cov.region.y0;
        if (cov.region.empty()) continue;
        cov.cov.assign(static_cast<std::size_t>(cov.region.w) * cov.region.h, 0);
        for (int py = 0; py < cov.region.h; ++py) {
            for (int px = 0; px < cov.region.w; ++px) {
                int hits = 0;
                for (int sy = 0; sy < 4; ++sy) {
                    for (int sx = 0; sx < 4; ++sx) {
                        if (inside(cov.region.x0 + px + (sx + 0.5) / 4.0,
                                   cov.region.y0 + py + (sy + 0.5) / 4.0)) {
                            ++hits;
                        }
                    }
                }
                // coverage scaled by the primitive's own opacity
                cov.cov[static_cast<std::size_t>(py) * cov.region.w + px] =
                    static_cast<std::uint8_t>((hits * opacity * 2 + 16) / 32);
            }
        }
        detail::Paint paint;
        paint.flat = color;
        canvas.composite(cov, paint);
    }
    return canvas.quantize();
}

struct TextPlan {
    std::vector<std::string> words;
    int size = 16;
    int spacing = 0;
};

inline std::string join_words(const std::vector<std::string>& words) {
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) text.push_back(' ');
        text += words[i];
    }
    return text;
}

/// Pick words and a size that fit into max_width pixels.
inline TextPlan plan_text(Rng& rng, int max_width) {
    static const int kSizes[5] = {16, 24, 32, 40, 48};
    TextPlan plan;
    plan.size = kSizes[rng.uniform_int(0, 4)];
    plan.spacing = rng.bernoulli(0.3) ? 2 : 0;
    const int want = rng.uniform_int(1, 4);
    for (int i = 0; i < want; ++i) plan.words.push_back(rng.pick(corpus_words()));

    const auto total_width = [&plan] {
        const std::string text = join_words(plan.words);
        return boxfont_run_width(decode_utf8(text).size(), plan.size, plan.spacing);
    };
    while (total_width() > max_width && plan.words.size() > 1) plan.words.pop_back();
    while (total_width() > max_width && plan.size > 16) plan.size -= 8;
    while (total_width() > max_width) {
        std::vector<char32_t> cps = decode_utf8(plan.words[0]);
        if (cps.size() <= 1) break;
        cps.resize(cps.size() / 2);
        plan.words[0] = encode_utf8(cps);
    }
    return plan;
}

inline TextInstance generate_instance(Rng& rng, int canvas_w, int canvas_h,
                                      const CorpusKnobs& knobs) {
    static const std::vector<std::string> kFonts = BoxFont::font_ids();
    const int margin = 8;
    const TextPlan plan = plan_text(rng, canvas_w - 2 * margin);

    TextInstance inst;
    inst.appearance.font_id = rng.pick(kFonts);
    inst.appearance.font_size = plan.size;
    inst.appearance.char_spacing = plan.spacing;
    inst.appearance.bold = rng.bernoulli(knobs.bold_fraction);
    inst.appearance.italic = false;
    inst.appearance.fill = random_color(rng, knobs.gradient_fill_fraction);
    if (rng.bernoulli(knobs.stroke_fraction)) {
        inst.appearance.stroke_width = rng.uniform_int(1, 2);
        const Rgb c = random_rgb(rng);
        inst.appearance.stroke_color = ColorSpec::solid(c.r, c.g, c.b);
    }
    if (rng.bernoulli(knobs.shadow_fraction)) {
        static const double kAngles[4] = {0.0, 1.5707963267948966, 3.141592653589793,
                                          4.71238898038469};
        inst.appearance.shadow = ShadowSpec{random_rgb(rng), kAngles[rng.uniform_int(0, 3)],
                                            static_cast<double>(rng.uniform_int(1, 3)), 0.0};
    }
    if (plan.size % 16 == 0 && rng.bernoulli(knobs.underline_fraction)) {
        inst.appearance.underline = true;
    }
    inst.semantic.direction = rng.bernoulli(knobs.rtl_fraction) ? Direction::rtl : Direction::ltr;
    static const Alignment kAligns[3] = {Alignment::left, Alignment::center, Alignment::right};
    inst.relational.alignment = kAligns[rng.uniform_int(0, 2)];

    const int ascent = plan.size * 3 / 4;
    const int descent = plan.size / 4;
    const std::string text = join_words(plan.words);
    const int text_width =
        boxfont_run_width(decode_utf8(text).size(), plan.size, plan.spacing);

    if (rng.bernoulli(knobs.curve_fraction) && plan.size * 5 / 4 + 2 * margin < canvas_h) {
        // Horizontal curved path: control points at exact thirds so the
        // cubic reduces to a straight segment; exercises the arc-length
        // machinery while keeping glyph placement on integers.
        inst.geometry.bending.tau = 1;
        int len = text_width + 12;
        len += (6 - len % 6) % 6; // multiple of 6: integer thirds, even slack
        len = std::min(len, canvas_w - 2 * margin);
        len -= len % 6;
        const int x0 = rng.uniform_int(margin, std::max(margin, canvas_w - margin - len));
        const int yb = rng.uniform_int(margin + ascent, canvas_h - margin - descent);
        inst.geometry.bending.p = {Vec2{static_cast<double>(x0), static_cast<double>(yb)},
                                   Vec2{static_cast<double>(x0 + len / 3), static_cast<double>(yb)},
                                   Vec2{static_cast<double>(x0 + 2 * len / 3), static_cast<double>(yb)},
                                   Vec2{static_cast<double>(x0 + len), static_cast<double>(yb)}};
        inst.geometry.x = x0;
        inst.geometry.y = yb - ascent;
        inst.geometry.w = len;
        inst.geometry.h = plan.size * 5 / 4;
        inst.semantic.text = text;
        return inst;
    }

    // Straight text, possibly wrapping onto several lines.
    static const double kLineHeights[3] = {1.0, 1.25, 1.5};
    inst.appearance.line_height = kLineHeights[rng.uniform_int(0, 2)];
    const int pitch = static_cast<int>(plan.size * inst.appearance.line_height);

    int box_w = text_width + 2 * rng.uniform_int(0, 10); // even slack
    int lines = 1;
    if (plan.words.size() >= 3 && rng.bernoulli(0.35)) {
        // Force wrapping: box width fits the longest word but not the run.
        int longest = 0;
        for (const std::string& word : plan.words) {
            longest = std::max(longest,
                               boxfont_run_width(decode_utf8(word).size(), plan.size, plan.spacing));
        }
        box_w = longest + 2 * rng.uniform_int(0, 4);
        // Count lines with the real wrap.
        std::vector<Shaped> shaped;
        for (char32_t cp : decode_utf8(text)) {
            shaped.push_back({cp, static_cast<double>(plan.size * 3 / 4), cp != U' '});
        }
        lines = static_cast<int>(
            wrap_lines(shaped, plan.spacing, static_cast<double>(box_w)).size());
    }
    box_w = std::min(box_w, canvas_w - 2 * margin);
    int box_h = pitch * lines;
    while (box_h + 2 * margin > canvas_h && lines > 1) {
        --lines;
        box_h = pitch * lines;
    }
    inst.geometry.w = box_w;
    inst.geometry.h = box_h;
    inst.geometry.x = rng.uniform_int(margin, std::max(margin, canvas_w - margin - box_w));
    inst.geometry.y = rng.uniform_int(margin, std::max(margin, canvas_h - margin - box_h));
    inst.semantic.text = text;
    return inst;
}

} // namespace detail

/// Deterministic synthetic corpus. Every item satisfies, by
/// construction, design == over(text, over(sticker, background))
/// byte-exactly, and the ground-truth protocol re-renders to the stored
/// text layer bit for bit.
inline std::vector<CorpusItem> generate_corpus(std::uint64_t seed, int count, int canvas_w,
                                               int canvas_h, const CorpusKnobs& knobs = {}) {
    if (count < 1) throw RangeError("corpus count must be >= 1");
    if (canvas_w < 48 || canvas_h < 48) throw RangeError("corpus canvas must be at least 48x48");

    const BoxFont font;
    std::vector<CorpusItem> items;
    items.reserve(static_cast<std::size_t>(count));
    for (int index = 0; index < count; ++index) {
        Rng rng(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index)));
        CorpusItem item;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "item-%04d", index);
        item.id = idbuf;
        item.seed = seed;
        item.index = index;

        item.background = detail::generate_background(rng, canvas_w, canvas_h, knobs);
        item.sticker = detail::generate_sticker_layer(rng, canvas_w, canvas_h, knobs);

        item.protocol.canvas_width = canvas_w;
        item.protocol.canvas_height = canvas_h;
        const int instances = rng.uniform_int(knobs.min_instances, knobs.max_instances);
        for (int i = 0; i < instances; ++i) {
            item.protocol.instances.push_back(
                detail::generate_instance(rng, canvas_w, canvas_h, knobs));
        }
        // z-orders: a random permutation of 0..n-1
        std::vector<int> zs(item.protocol.instances.size());
        for (std::size_t i = 0; i < zs.size(); ++i) zs[i] = static_cast<int>(i);
        for (std::size_t i = zs.size(); i > 1; --i) {
            std::swap(zs[i - 1], zs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
        }
        for (std::size_t i = 0; i < zs.size(); ++i) {
            item.protocol.instances[i].relational.z_order = zs[i];
        }

        item.text_layer = render_text_layer(item.protocol, font);
        item.design = alpha_over(item.text_layer, alpha_over(item.sticker, item.background));
        item.text_mask = mask_from_alpha(item.text_layer, 0);
        item.sticker_mask = mask_from_alpha(item.sticker, 0);
        items.push_back(std::move(item));
    }
    return items;
}

inline RewardContext reward_context_for(const CorpusItem& item) {
    RewardContext ctx;
    ctx.input = item.design;
    ctx.reference_mask = item.text_mask;
    for (const TextInstance& inst : item.protocol.instances) {
        ctx.reference_texts.push_back(
            {inst.semantic.text,
             BBox{inst.geometry.x, inst.geometry.y, inst.geometry.w, inst.geometry.h}});
    }
    return ctx;
}

inline void write_corpus_item(const std::filesystem::path& dir, const CorpusItem& item,
                              const CorpusKnobs& knobs) {
    std::filesystem::create_directories(dir);
    write_png(dir / "design.png", item.design);
    write_png(dir / "bg.png", item.background);
    write_png(dir / "sticker.png", item.sticker);
    write_png(dir / "text.png", item.text_layer);
    std::ofstream proto(dir / "protocol.json", std::ios::binary);
    proto << serialize_protocol(item.protocol);
    if (!proto) throw IoError("cannot write " + (dir / "protocol.json").string());

    nlohmann::ordered_json meta;
    meta["id"] = item.id;
    meta["seed"] = item.seed;
    meta["index"] = item.index;
    meta["canvas"] = {item.design.width, item.design.height};
    meta["knobs"] = {{"min_instances", knobs.min_instances},
                     {"max_instances", knobs.max_instances},
                     {"curve_fraction", knobs.curve_fraction},
                     {"max_stickers", knobs.max_stickers},
                     {"translucent_sticker_fraction", knobs.translucent_sticker_fraction},
                     {"gradient_bg_fraction", knobs.gradient_bg_fraction},
                     {"gradient_fill_fraction", knobs.gradient_fill_fraction},
                     {"stroke_fraction", knobs.stroke_fraction},
                     {"shadow_fraction", knobs.shadow_fraction},
                     {"underline_fraction", knobs.underline_fraction},
                     {"bold_fraction", knobs.bold_fraction},
                     {"rtl_fraction", knobs.rtl_fraction}};
    std::ofstream metaf(dir / "meta.json", std::ios::binary);
    metaf << meta.dump(2) << "\n";
    if (!metaf) throw IoError("cannot write " + (dir / "meta.json").string());
}

/// Load one item directory (design.png, bg.png, sticker.png, text.png,
/// protocol.json, meta.json); masks are recomputed from the layers.
inline CorpusItem read_corpus_item(const std::filesystem::path& dir) {
    CorpusItem item;
    item.design = read_png(dir / "design.png");
    item.background = read_png(dir / "bg.png");
    item.sticker = read_png(dir / "sticker.png");
    item.text_layer = read_png(dir / "text.png");

    std::ifstream proto(dir / "protocol.json", std::ios::binary);
    if (!proto) throw IoError("cannot read " + (dir / "protocol.json").string());
    std::string text((std::istreambuf_iterator<char>(proto)), std::istreambuf_iterator<char>());
    item.protocol = parse_protocol(text);

    std::ifstream metaf(dir / "meta.json", std::ios::binary);
    if (metaf) {
        try {
            const auto meta = nlohmann::json::parse(metaf);
            item.id = meta.value("id", dir.filename().string());
            item.seed = meta.value("seed", std::uint64_t{0});
            item.index = meta.value("index", 0);
        } catch (const nlohmann::json::exception&) {
            item.id = dir.filename().string();
        }
    } else {
        item.id = dir.filename().string();
    }
    item.text_mask = mask_from_alpha(item.text_layer, 0);
    item.sticker_mask = mask_from_alpha(item.sticker, 0);
    return item;
}

/// Load every item-* subdirectory of a corpus tree, sorted by name.
inline std::vector<CorpusItem> read_corpus(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> subdirs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory()) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    std::vector<CorpusItem> items;
    for (const auto& sub : subdirs) {
        if (std::filesystem::exists(sub / "protocol.json")) {
            items.push_back(read_corpus_item(sub));
        }
    }
    if (items.empty()) throw EmptyCorpus("no corpus items under '" + dir.string() + "'");
    return items;
}

} // namespace layerkit
