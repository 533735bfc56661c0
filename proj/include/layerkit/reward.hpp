#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "layerkit/errors.hpp"
#include "layerkit/protocol.hpp"
#include "layerkit/raster.hpp"
#include "layerkit/render.hpp"

namespace layerkit {

/// Normalized Levenshtein similarity on Unicode scalar values:
/// 1 - Lev(a, b) / max(|a|, |b|). Two empty strings compare as 1.
inline double levenshtein_sim(std::string_view a, std::string_view b) {
    const std::vector<char32_t> ua = detail::decode_utf8(std::string(a));
    const std::vector<char32_t> ub = detail::decode_utf8(std::string(b));
    const std::size_t n = ua.size(), m = ub.size();
    if (n == 0 && m == 0) return 1.0;

    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    const double dist = static_cast<double>(prev[m]);
    return 1.0 - dist / static_cast<double>(std::max(n, m));
}

struct BBox {
    double x = 0, y = 0, w = 0, h = 0;
};

inline double bbox_iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// One-to-one greedy matching by descending box IoU. Zero-overlap pairs
/// may still match once everything better is taken, so a correct string
/// in the wrong place earns semantic credit but no localization credit.
/// Ties break on the lower pred index, then the lower ref index.
inline std::vector<std::pair<std::size_t, std::size_t>> greedy_bbox_match(
    const std::vector<BBox>& pred, const std::vector<BBox>& ref) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    pairs.reserve(pred.size() * ref.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < ref.size(); ++j) {
            pairs.emplace_back(bbox_iou(pred[i], ref[j]), i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
        return std::get<2>(a) < std::get<2>(b);
    });
    std::vector<char> pred_used(pred.size(), 0), ref_used(ref.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [iou_v, i, j] : pairs) {
        (void)iou_v;
        if (!pred_used[i] && !ref_used[j]) {
            pred_used[i] = ref_used[j] = 1;
            out.emplace_back(i, j);
        }
    }
    return out;
}

/// Nonnegative weights, stored normalized to sum 1 so the total reward
/// stays in [0, 1].
struct RewardWeights {
    double pix = 1.0 / 3.0;
    double loc = 1.0 / 3.0;
    double sem = 1.0 / 3.0;

    static RewardWeights normalized(double a, double b, double c) {
        if (a < 0.0 || b < 0.0 || c < 0.0) {
            throw RangeError("reward weights must be nonnegative");
        }
        const double sum = a + b + c;
        if (!(sum > 0.0)) throw RangeError("reward weights must not all be zero");
        return {a / sum, b / sum, c / sum};
    }
};

struct RewardBreakdown {
    double r_pix = 0.0;
    double r_loc = 0.0;
    double r_sem = 0.0;
    double total = 0.0;
    RewardWeights weights{};
    std::string note; // nonempty when the candidate was unrenderable
};

struct ReferenceText {
    std::string text;
    BBox box{};
};

struct RewardContext {
    RasterRGBA input;          // the design being parsed
    BinaryMask reference_mask; // ground-truth text mask
    std::vector<ReferenceText> reference_texts;
};

/// exp(-masked L1) between the input and the rendered layer, masked by
/// the *prediction's* own alpha.
inline double reward_pix(const RewardContext& ctx, const RasterRGBA& rendered) {
    return std::exp(-masked_l1(ctx.input, rendered, mask_from_alpha(rendered, 0)));
}

inline double reward_loc(const RewardContext& ctx, const RasterRGBA& rendered) {
    return iou(mask_from_alpha(rendered, 0), ctx.reference_mask);
}

/// Instance-level edit similarity: greedy box matching, each pair scored
/// by levenshtein_sim, unmatched items on either side score 0, combined
/// as a length-weighted mean with weight max(|a|, |b|, 1).
inline double reward_sem(const TextProtocol& pred, const RewardContext& ctx) {
    std::vector<BBox> pred_boxes, ref_boxes;
    for (const TextInstance& inst : pred.instances) {
        pred_boxes.push_back(
            {inst.geometry.x, inst.geometry.y, inst.geometry.w, inst.geometry.h});
    }
    for (const ReferenceText& ref : ctx.reference_texts) ref_boxes.push_back(ref.box);

    if (pred_boxes.empty() && ref_boxes.empty()) return 1.0;

    const auto scalar_len = [](const std::string& s) {
        return detail::decode_utf8(s).size();
    };

    double weighted = 0.0, weight_sum = 0.0;
    std::vector<char> pred_matched(pred_boxes.size(), 0), ref_matched(ref_boxes.size(), 0);
    for (const auto& [i, j] : greedy_bbox_match(pred_boxes, ref_boxes)) {
        pred_matched[i] = ref_matched[j] = 1;
        const std::string& a = pred.instances[i].semantic.text;
        const std::string& b = ctx.reference_texts[j].text;
        const double w = static_cast<double>(std::max({scalar_len(a), scalar_len(b), std::size_t{1}}));
        weighted += w * levenshtein_sim(a, b);
        weight_sum += w;
    }
    for (std::size_t i = 0; i < pred_matched.size(); ++i) {
        if (!pred_matched[i]) {
            weight_sum += static_cast<double>(
                std::max(scalar_len(pred.instances[i].semantic.text), std::size_t{1}));
        }
    }
    for (std::size_t j = 0; j < ref_matched.size(); ++j) {
        if (!ref_matched[j]) {
            weight_sum += static_cast<double>(
                std::max(scalar_len(ctx.reference_texts[j].text), std::size_t{1}));
        }
    }
    return weighted / weight_sum;
}

/// Render the candidate and combine the three terms. A candidate that
/// cannot be rendered (bad font, degenerate curve, invalid protocol,
/// canvas mismatch) scores 0 with a note instead of aborting, so a
/// policy-optimization group can still rank it.
inline RewardBreakdown score_protocol(const TextProtocol& pred, const RewardContext& ctx,
                                      const RewardWeights& weights, const GlyphSource& glyphs) {
    RewardBreakdown out;
    out.weights = weights;
    try {
        if (pred.canvas_width != ctx.input.width || pred.canvas_height != ctx.input.height) {
            throw DimensionMismatch("protocol canvas does not match the input image");
        }
        const RasterRGBA rendered = render_text_layer(pred, glyphs);
        out.r_pix = reward_pix(ctx, rendered);
        out.r_loc = reward_loc(ctx, rendered);
        out.r_sem = reward_sem(pred, ctx);
        out.total = weights.pix * out.r_pix + weights.loc * out.r_loc + weights.sem * out.r_sem;
    } catch (const Error& e) {
        out = RewardBreakdown{};
        out.weights = weights;
        out.note = e.what();
    }
    return out;
}

} // namespace layerkit
