#pragma once

#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "layerkit/errors.hpp"
#include "layerkit/protocol.hpp"

namespace layerkit {

namespace detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Strict object view: every key must be consumed, everything else is a
/// schema violation. Surfaces protocol drift early.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : obj_(j), path_(std::move(path)) {
        if (!j.is_object()) throw SchemaError(path_ + ": expected an object");
    }

    const json* find(const char* key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& require(const char* key) {
        const json* j = find(key);
        if (!j) throw SchemaError(path_ + ": missing required field '" + key + "'");
        return *j;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            (void)value;
            if (!seen_.contains(key)) {
                throw SchemaError(path_ + ": unknown field '" + key + "'");
            }
        }
    }

    const std::string& path() const { return path_; }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path + ": expected a number");
    return j.get<double>();
}

inline double as_finite(const json& j, const std::string& path) {
    const double v = as_number(j, path);
    if (!std::isfinite(v)) throw RangeError(path + ": value must be finite");
    return v;
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw SchemaError(path + ": expected a boolean");
    return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path + ": expected a string");
    return j.get<std::string>();
}

inline double angle_in_range(const json& j, const std::string& path) {
    const double v = as_finite(j, path);
    if (!(v >= 0.0 && v < kTwoPi)) throw RangeError(path + ": angle must lie in [0, 2*pi)");
    return v;
}

inline Rgb parse_rgb(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(path + ": expected [r,g,b]");
    Rgb rgb;
    std::uint8_t* chan[3] = {&rgb.r, &rgb.g, &rgb.b};
    for (int c = 0; c < 3; ++c) {
        const json& e = j[static_cast<std::size_t>(c)];
        if (!e.is_number_integer()) throw SchemaError(path + ": channels must be integers");
        const auto v = e.get<std::int64_t>();
        if (v < 0 || v > 255) throw RangeError(path + ": channel out of [0, 255]");
        *chan[c] = static_cast<std::uint8_t>(v);
    }
    return rgb;
}

inline ColorSpec parse_color(const json& j, const std::string& path) {
    if (j.is_array()) {
        ColorSpec c;
        c.kind = ColorSpec::Kind::solid;
        c.solid_color = parse_rgb(j, path);
        return c;
    }
    StrictObject obj(j, path);
    ColorSpec c;
    c.kind = ColorSpec::Kind::linear_gradient;
    const json& stops = obj.require("stops");
    if (!stops.is_array() || stops.size() != 2) {
        throw SchemaError(path + ".stops: expected two [r,g,b] stops");
    }
    c.stops[0] = parse_rgb(stops[0], path + ".stops[0]");
    c.stops[1] = parse_rgb(stops[1], path + ".stops[1]");
    c.angle = angle_in_range(obj.require("angle"), path + ".angle");
    obj.finish();
    return c;
}

inline Vec2 parse_point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw SchemaError(path + ": expected [x,y]");
    return {as_finite(j[0], path + "[0]"), as_finite(j[1], path + "[1]")};
}

inline TextInstance parse_instance(const json& j, const std::string& path) {
    StrictObject obj(j, path);
    TextInstance inst;

    {
        StrictObject geo(obj.require("geometry"), path + ".geometry");
        inst.geometry.x = as_finite(geo.require("x"), path + ".geometry.x");
        inst.geometry.y = as_finite(geo.require("y"), path + ".geometry.y");
        inst.geometry.w = as_finite(geo.require("w"), path + ".geometry.w");
        inst.geometry.h = as_finite(geo.require("h"), path + ".geometry.h");
        if (!(inst.geometry.w > 0.0)) throw RangeError(path + ".geometry.w: must be > 0");
        if (!(inst.geometry.h > 0.0)) throw RangeError(path + ".geometry.h: must be > 0");
        if (const json* theta = geo.find("theta")) {
            inst.geometry.theta = angle_in_range(*theta, path + ".geometry.theta");
        }
        if (const json* bend = geo.find("bending")) {
            StrictObject b(*bend, path + ".geometry.bending");
            const json& pts = b.require("p");
            if (!pts.is_array() || pts.size() != 4) {
                throw SchemaError(path + ".geometry.bending.p: expected four control points");
            }
            for (int k = 0; k < 4; ++k) {
                inst.geometry.bending.p[static_cast<std::size_t>(k)] =
                    parse_point(pts[static_cast<std::size_t>(k)],
                                path + ".geometry.bending.p[" + std::to_string(k) + "]");
            }
            if (const json* tau = b.find("tau")) {
                if (!tau->is_number_integer()) {
                    throw SchemaError(path + ".geometry.bending.tau: expected an integer");
                }
                const auto v = tau->get<std::int64_t>();
                if (v != 0 && v != 1) {
                    throw RangeError(path + ".geometry.bending.tau: must be 0 or 1");
                }
                inst.geometry.bending.tau = static_cast<int>(v);
            }
            b.finish();
        }
        geo.finish();
    }

    {
        StrictObject sem(obj.require("semantic"), path + ".semantic");
        inst.semantic.text = as_string(sem.require("text"), path + ".semantic.text");
        if (const json* dir = sem.find("direction")) {
            const std::string d = as_string(*dir, path + ".semantic.direction");
            if (d == "ltr") {
                inst.semantic.direction = Direction::ltr;
            } else if (d == "rtl") {
                inst.semantic.direction = Direction::rtl;
            } else {
                throw SchemaError(path + ".semantic.direction: unknown value '" + d + "'");
            }
        }
        sem.finish();
    }

    {
        StrictObject app(obj.require("appearance"), path + ".appearance");
        inst.appearance.font_id = as_string(app.require("font"), path + ".appearance.font");
        inst.appearance.font_size = as_finite(app.require("size"), path + ".appearance.size");
        if (!(inst.appearance.font_size > 0.0)) {
            throw RangeError(path + ".appearance.size: must be > 0");
        }
        inst.appearance.fill = parse_color(app.require("fill"), path + ".appearance.fill");
        if (const json* sw = app.find("stroke_width")) {
            inst.appearance.stroke_width = as_finite(*sw, path + ".appearance.stroke_width");
            if (inst.appearance.stroke_width < 0.0) {
                throw RangeError(path + ".appearance.stroke_width: must be >= 0");
            }
        }
        if (const json* sc = app.find("stroke_color")) {
            inst.appearance.stroke_color = parse_color(*sc, path + ".appearance.stroke_color");
        }
        if (const json* sh = app.find("shadow")) {
            StrictObject shadow(*sh, path + ".appearance.shadow");
            ShadowSpec spec;
            spec.color = parse_rgb(shadow.require("color"), path + ".appearance.shadow.color");
            spec.offset_angle = angle_in_range(shadow.require("angle"), path + ".appearance.shadow.angle");
            spec.offset_distance = as_finite(shadow.require("distance"), path + ".appearance.shadow.distance");
            spec.blur_radius = as_finite(shadow.require("blur"), path + ".appearance.shadow.blur");
            if (spec.offset_distance < 0.0) {
                throw RangeError(path + ".appearance.shadow.distance: must be >= 0");
            }
            if (spec.blur_radius < 0.0) {
                throw RangeError(path + ".appearance.shadow.blur: must be >= 0");
            }
            shadow.finish();
            inst.appearance.shadow = spec;
        }
        if (const json* lh = app.find("line_height")) {
            inst.appearance.line_height = as_finite(*lh, path + ".appearance.line_height");
            if (!(inst.appearance.line_height > 0.0)) {
                throw RangeError(path + ".appearance.line_height: must be > 0");
            }
        }
        if (const json* cs = app.find("char_spacing")) {
            inst.appearance.char_spacing = as_finite(*cs, path + ".appearance.char_spacing");
        }
        if (const json* b = app.find("italic")) inst.appearance.italic = as_bool(*b, path + ".appearance.italic");
        if (const json* b = app.find("bold")) inst.appearance.bold = as_bool(*b, path + ".appearance.bold");
        if (const json* b = app.find("underline")) inst.appearance.underline = as_bool(*b, path + ".appearance.underline");
        app.finish();
    }

    {
        StrictObject rel(obj.require("relational"), path + ".relational");
        const std::string a = as_string(rel.require("align"), path + ".relational.align");
        if (a == "left") {
            inst.relational.alignment = Alignment::left;
        } else if (a == "center") {
            inst.relational.alignment = Alignment::center;
        } else if (a == "right") {
            inst.relational.alignment = Alignment::right;
        } else if (a == "justify") {
            inst.relational.alignment = Alignment::justify;
        } else {
            throw SchemaError(path + ".relational.align: unknown value '" + a + "'");
        }
        const json& z = rel.require("z");
        if (!z.is_number_integer()) throw SchemaError(path + ".relational.z: expected an integer");
        inst.relational.z_order = z.get<int>();
        rel.finish();
    }

    obj.finish();
    return inst;
}

} // namespace detail

/// Parse the documented JSON schema into a TextProtocol. Optional fields
/// receive their documented defaults; unknown keys and out-of-range
/// values are rejected.
inline TextProtocol parse_protocol(std::string_view text) {
    detail::json root;
    try {
        root = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw EncodingError(std::string("invalid JSON: ") + e.what());
    }

    detail::StrictObject obj(root, "$");
    TextProtocol proto;
    const detail::json& canvas = obj.require("canvas");
    if (!canvas.is_array() || canvas.size() != 2 || !canvas[0].is_number_integer() ||
        !canvas[1].is_number_integer()) {
        throw SchemaError("$.canvas: expected [width, height] integers");
    }
    proto.canvas_width = canvas[0].get<int>();
    proto.canvas_height = canvas[1].get<int>();
    if (proto.canvas_width < 1 || proto.canvas_height < 1) {
        throw RangeError("$.canvas: dimensions must be >= 1");
    }

    const detail::json& instances = obj.require("instances");
    if (!instances.is_array()) throw SchemaError("$.instances: expected an array");
    for (std::size_t i = 0; i < instances.size(); ++i) {
        proto.instances.push_back(detail::parse_instance(
            instances[i], "$.instances[" + std::to_string(i) + "]"));
    }
    obj.finish();
    return proto;
}

namespace detail {

inline ordered_json rgb_to_json(const Rgb& c) {
    return ordered_json::array({c.r, c.g, c.b});
}

inline ordered_json color_to_json(const ColorSpec& c) {
    if (c.kind == ColorSpec::Kind::solid) return rgb_to_json(c.solid_color);
    ordered_json j;
    j["stops"] = ordered_json::array({rgb_to_json(c.stops[0]), rgb_to_json(c.stops[1])});
    j["angle"] = c.angle;
    return j;
}

} // namespace detail

/// Canonical serialization: fixed key order, shortest round-trip float
/// representation, shadow omitted when absent, bending omitted when it
/// equals the default. parse_protocol(serialize_protocol(p)) == p.
inline std::string serialize_protocol(const TextProtocol& p) {
    if (const auto violations = validate(p); !violations.empty()) {
        throw InvalidProtocol("cannot serialize: " + violations.front().path + ": " +
                              violations.front().message);
    }
    using detail::ordered_json;
    ordered_json root;
    root["canvas"] = ordered_json::array({p.canvas_width, p.canvas_height});
    ordered_json instances = ordered_json::array();
    for (const TextInstance& inst : p.instances) {
        ordered_json geo;
        geo["x"] = inst.geometry.x;
        geo["y"] = inst.geometry.y;
        geo["w"] = inst.geometry.w;
        geo["h"] = inst.geometry.h;
        geo["theta"] = inst.geometry.theta;
        const Bending& bend = inst.geometry.bending;
        if (bend != Bending{}) {
            ordered_json b;
            b["p"] = ordered_json::array();
            for (const Vec2& q : bend.p) {
                b["p"].push_back(ordered_json::array({q.x, q.y}));
            }
            b["tau"] = bend.tau;
            geo["bending"] = std::move(b);
        }

        ordered_json sem;
        sem["text"] = inst.semantic.text;
        sem["direction"] = inst.semantic.direction == Direction::ltr ? "ltr" : "rtl";

        ordered_json app;
        app["font"] = inst.appearance.font_id;
        app["size"] = inst.appearance.font_size;
        app["fill"] = detail::color_to_json(inst.appearance.fill);
        app["stroke_width"] = inst.appearance.stroke_width;
        app["stroke_color"] = detail::color_to_json(inst.appearance.stroke_color);
        if (inst.appearance.shadow) {
            ordered_json sh;
            sh["color"] = detail::rgb_to_json(inst.appearance.shadow->color);
            sh["angle"] = inst.appearance.shadow->offset_angle;
            sh["distance"] = inst.appearance.shadow->offset_distance;
            sh["blur"] = inst.appearance.shadow->blur_radius;
            app["shadow"] = std::move(sh);
        }
        app["line_height"] = inst.appearance.line_height;
        app["char_spacing"] = inst.appearance.char_spacing;
        app["italic"] = inst.appearance.italic;
        app["bold"] = inst.appearance.bold;
        app["underline"] = inst.appearance.underline;

        ordered_json rel;
        switch (inst.relational.alignment) {
            case Alignment::left: rel["align"] = "left"; break;
            case Alignment::center: rel["align"] = "center"; break;
            case Alignment::right: rel["align"] = "right"; break;
            case Alignment::justify: rel["align"] = "justify"; break;
        }
        rel["z"] = inst.relational.z_order;

        ordered_json j;
        j["geometry"] = std::move(geo);
        j["semantic"] = std::move(sem);
        j["appearance"] = std::move(app);
        j["relational"] = std::move(rel);
        instances.push_back(std::move(j));
    }
    root["instances"] = std::move(instances);
    return root.dump();
}

} // namespace layerkit
