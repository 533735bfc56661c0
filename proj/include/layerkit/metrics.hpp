#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerkit/corpus.hpp"
#include "layerkit/protocol.hpp"
#include "layerkit/raster.hpp"
#include "layerkit/render.hpp"
#include "layerkit/reward.hpp"

namespace layerkit {

/// Correctness thresholds for continuous protocol fields. These are
/// artifact configuration, not canonical values; angles are in degrees,
/// relative thresholds are taken against the ground-truth value.
struct AttrThresholds {
    double font_size_rel = 0.05;
    double color_per_channel = 8.0;
    double stroke_width_abs = 1.0;
    double shadow_angle_abs = 10.0; // degrees
    double shadow_blur_abs = 2.0;
    double line_height_rel = 0.05;
    double char_spacing_abs = 0.5;
    double shadow_distance_abs = 1.0;
};

inline double layer_iou(const BinaryMask& pred, const BinaryMask& gt) { return iou(pred, gt); }

namespace detail {

inline std::vector<BBox> instance_boxes(const TextProtocol& p) {
    std::vector<BBox> boxes;
    boxes.reserve(p.instances.size());
    for (const TextInstance& inst : p.instances) {
        boxes.push_back({inst.geometry.x, inst.geometry.y, inst.geometry.w, inst.geometry.h});
    }
    return boxes;
}

inline bool angle_close(double a, double b, double threshold_deg) {
    double d = std::abs(a - b);
    d = std::fmod(d, kTwoPi);
    d = std::min(d, kTwoPi - d);
    return d <= threshold_deg * 3.141592653589793 / 180.0;
}

inline bool rgb_close(const Rgb& a, const Rgb& b, double per_channel) {
    return std::abs(static_cast<int>(a.r) - static_cast<int>(b.r)) <= per_channel &&
           std::abs(static_cast<int>(a.g) - static_cast<int>(b.g)) <= per_channel &&
           std::abs(static_cast<int>(a.b) - static_cast<int>(b.b)) <= per_channel;
}

inline bool color_close(const ColorSpec& a, const ColorSpec& b, const AttrThresholds& th) {
    if (a.kind != b.kind) return false;
    if (a.kind == ColorSpec::Kind::solid) {
        return rgb_close(a.solid_color, b.solid_color, th.color_per_channel);
    }
    return rgb_close(a.stops[0], b.stops[0], th.color_per_channel) &&
           rgb_close(a.stops[1], b.stops[1], th.color_per_channel) &&
           angle_close(a.angle, b.angle, th.shadow_angle_abs);
}

inline bool rel_close(double pred, double gt, double rel) {
    return std::abs(pred - gt) <= rel * std::abs(gt);
}

/// Per-field attribute score of one matched instance pair: discrete
/// fields by exact match, continuous fields within thresholds.
inline double instance_attr_score(const TextInstance& pred, const TextInstance& gt,
                                  const AttrThresholds& th) {
    int correct = 0, fields = 0;
    const auto field = [&correct, &fields](bool ok) {
        ++fields;
        if (ok) ++correct;
    };

    field(rel_close(pred.appearance.font_size, gt.appearance.font_size, th.font_size_rel));
    field(color_close(pred.appearance.fill, gt.appearance.fill, th));
    field(std::abs(pred.appearance.stroke_width - gt.appearance.stroke_width) <=
          th.stroke_width_abs);
    field(color_close(pred.appearance.stroke_color, gt.appearance.stroke_color, th));

    const bool shadow_ok = [&] {
        if (pred.appearance.shadow.has_value() != gt.appearance.shadow.has_value()) return false;
        if (!gt.appearance.shadow) return true;
        const ShadowSpec& ps = *pred.appearance.shadow;
        const ShadowSpec& gs = *gt.appearance.shadow;
        return rgb_close(ps.color, gs.color, th.color_per_channel) &&
               angle_close(ps.offset_angle, gs.offset_angle, th.shadow_angle_abs) &&
               std::abs(ps.offset_distance - gs.offset_distance) <= th.shadow_distance_abs &&
               std::abs(ps.blur_radius - gs.blur_radius) <= th.shadow_blur_abs;
    }();
    field(shadow_ok);

    field(rel_close(pred.appearance.line_height, gt.appearance.line_height, th.line_height_rel));
    field(std::abs(pred.appearance.char_spacing - gt.appearance.char_spacing) <=
          th.char_spacing_abs);
    field(pred.appearance.italic == gt.appearance.italic);
    field(pred.appearance.bold == gt.appearance.bold);
    field(pred.appearance.underline == gt.appearance.underline);
    field(pred.relational.alignment == gt.relational.alignment);
    field(pred.relational.z_order == gt.relational.z_order);

    return static_cast<double>(correct) / static_cast<double>(fields);
}

} // namespace detail

/// Exact-match accuracy of the font identifier over greedily matched
/// instances; unmatched instances on either side count as wrong.
inline double font_accuracy(const TextProtocol& pred, const TextProtocol& gt) {
    const std::size_t denom = std::max(pred.instances.size(), gt.instances.size());
    if (denom == 0) return 1.0;
    std::size_t correct = 0;
    for (const auto& [i, j] :
         greedy_bbox_match(detail::instance_boxes(pred), detail::instance_boxes(gt))) {
        if (pred.instances[i].appearance.font_id == gt.instances[j].appearance.font_id) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(denom);
}

/// Mean per-field accuracy over appearance and relational attributes
/// (font excluded; it is reported separately). Unmatched instances
/// score 0 via the max(|pred|, |gt|) denominator.
inline double attr_accuracy(const TextProtocol& pred, const TextProtocol& gt,
                            const AttrThresholds& th = {}) {
    const std::size_t denom = std::max(pred.instances.size(), gt.instances.size());
    if (denom == 0) return 1.0;
    double sum = 0.0;
    for (const auto& [i, j] :
         greedy_bbox_match(detail::instance_boxes(pred), detail::instance_boxes(gt))) {
        sum += detail::instance_attr_score(pred.instances[i], gt.instances[j], th);
    }
    return sum / static_cast<double>(denom);
}

struct LayerPrediction {
    TextProtocol protocol;
    RasterRGBA sticker;    // empty -> treated as fully transparent
    RasterRGBA background; // empty -> treated as fully transparent
};

struct EvalItemRow {
    std::string id;
    double t_iou = 0, s_iou = 0;
    double l1_text = 0, l1_sticker = 0, l1_bg = 0, l1_avg = 0;
    double font_acc = 0, attr_acc = 0;
};

struct EvalReport {
    double t_iou = 0, s_iou = 0;
    double l1_text = 0, l1_sticker = 0, l1_bg = 0, l1_avg = 0;
    double font_accuracy = 0, attr_accuracy = 0;
    std::vector<EvalItemRow> items;
};

/// Score a prediction set against corpus ground truth: layer IoU, RGB L1
/// per layer, and protocol-field accuracies.
inline EvalReport evaluate(const std::map<std::string, LayerPrediction>& predictions,
                           const std::vector<CorpusItem>& corpus, const GlyphSource& glyphs,
                           const AttrThresholds& th = {}) {
    EvalReport report;
    for (const CorpusItem& item : corpus) {
        const auto it = predictions.find(item.id);
        if (it == predictions.end()) {
            throw MissingPrediction("no prediction for corpus item '" + item.id + "'");
        }
        const LayerPrediction& pred = it->second;
        const int w = item.design.width, h = item.design.height;
        const RasterRGBA text = render_text_layer(pred.protocol, glyphs);
        const RasterRGBA sticker =
            pred.sticker.pixels.empty() ? RasterRGBA(w, h) : pred.sticker;
        const RasterRGBA background =
            pred.background.pixels.empty() ? RasterRGBA(w, h) : pred.background;

        EvalItemRow row;
        row.id = item.id;
        row.t_iou = layer_iou(mask_from_alpha(text, 0), item.text_mask);
        row.s_iou = layer_iou(mask_from_alpha(sticker, 0), item.sticker_mask);
        row.l1_text = rgb_l1(text, item.text_layer);
        row.l1_sticker = rgb_l1(sticker, item.sticker);
        row.l1_bg = rgb_l1(background, item.background);
        row.l1_avg = (row.l1_text + row.l1_sticker + row.l1_bg) / 3.0;
        row.font_acc = font_accuracy(pred.protocol, item.protocol);
        row.attr_acc = attr_accuracy(pred.protocol, item.protocol, th);
        report.items.push_back(row);
    }

    const double n = static_cast<double>(report.items.size());
    for (const EvalItemRow& row : report.items) {
        report.t_iou += row.t_iou / n;
        report.s_iou += row.s_iou / n;
        report.l1_text += row.l1_text / n;
        report.l1_sticker += row.l1_sticker / n;
        report.l1_bg += row.l1_bg / n;
        report.l1_avg += row.l1_avg / n;
        report.font_accuracy += row.font_acc / n;
        report.attr_accuracy += row.attr_acc / n;
    }
    return report;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["t_iou"] = report.t_iou;
    j["s_iou"] = report.s_iou;
    j["font_accuracy"] = report.font_accuracy;
    j["attr_accuracy"] = report.attr_accuracy;
    j["rgb_l1"] = {{"text", report.l1_text},
                   {"sticker", report.l1_sticker},
                   {"bg", report.l1_bg},
                   {"avg", report.l1_avg}};
    j["items"] = nlohmann::ordered_json::array();
    for (const EvalItemRow& row : report.items) {
        nlohmann::ordered_json r;
        r["id"] = row.id;
        r["t_iou"] = row.t_iou;
        r["s_iou"] = row.s_iou;
        r["font_accuracy"] = row.font_acc;
        r["attr_accuracy"] = row.attr_acc;
        r["rgb_l1"] = {{"text", row.l1_text},
                       {"sticker", row.l1_sticker},
                       {"bg", row.l1_bg},
                       {"avg", row.l1_avg}};
        j["items"].push_back(std::move(r));
    }
    return j;
}

inline AttrThresholds thresholds_from_json(const nlohmann::json& j) {
    AttrThresholds th;
    th.font_size_rel = j.value("font_size_rel", th.font_size_rel);
    th.color_per_channel = j.value("color_per_channel", th.color_per_channel);
    th.stroke_width_abs = j.value("stroke_width_abs", th.stroke_width_abs);
    th.shadow_angle_abs = j.value("shadow_angle_abs", th.shadow_angle_abs);
    th.shadow_blur_abs = j.value("shadow_blur_abs", th.shadow_blur_abs);
    th.line_height_rel = j.value("line_height_rel", th.line_height_rel);
    th.char_spacing_abs = j.value("char_spacing_abs", th.char_spacing_abs);
    th.shadow_distance_abs = j.value("shadow_distance_abs", th.shadow_distance_abs);
    return th;
}

} // namespace layerkit
