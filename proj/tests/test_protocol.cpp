#include <catch2/catch_amalgamated.hpp>

#include "layerkit/protocol.hpp"
#include "layerkit/protocol_json.hpp"
#include "layerkit/rng.hpp"

using namespace layerkit;

namespace {

// A fixture exercising every documented field.
const char* kFullInstance = R"({
  "canvas": [800, 600],
  "instances": [{
    "geometry": {
      "x": 40.5, "y": 60, "w": 300, "h": 80, "theta": 0.25,
      "bending": {"p": [[40, 100], [140, 60], [240, 60], [340, 100]], "tau": 1}
    },
    "semantic": {"text": "Grand SALE", "direction": "ltr"},
    "appearance": {
      "font": "boxfont", "size": 32, "fill": [255, 20, 20],
      "stroke_width": 2, "stroke_color": [0, 0, 0],
      "shadow": {"color": [10, 10, 10], "angle": 1.5707963267948966, "distance": 3, "blur": 2},
      "line_height": 1.25, "char_spacing": 1.5,
      "italic": true, "bold": false, "underline": true
    },
    "relational": {"align": "center", "z": 4}
  }]
})";

TextProtocol random_protocol(Rng& rng) {
    TextProtocol p;
    p.canvas_width = rng.uniform_int(1, 1024);
    p.canvas_height = rng.uniform_int(1, 1024);
    const int n = rng.uniform_int(0, 4);
    for (int i = 0; i < n; ++i) {
        TextInstance inst;
        inst.geometry.x = rng.uniform(-100.0, 900.0);
        inst.geometry.y = rng.uniform(-100.0, 900.0);
        inst.geometry.w = rng.uniform(1.0, 500.0);
        inst.geometry.h = rng.uniform(1.0, 500.0);
        inst.geometry.theta = rng.uniform(0.0, 6.28);
        if (rng.bernoulli(0.4)) {
            inst.geometry.bending.tau = 1;
            for (Vec2& q : inst.geometry.bending.p) {
                q = {rng.uniform(0.0, 800.0), rng.uniform(0.0, 600.0)};
            }
        }
        inst.semantic.text = rng.bernoulli(0.2) ? "caf\xc3\xa9 \xe2\x98\x86" : "sample text";
        inst.semantic.direction = rng.bernoulli(0.2) ? Direction::rtl : Direction::ltr;
        inst.appearance.font_id = "boxfont";
        inst.appearance.font_size = rng.uniform(4.0, 96.0);
        inst.appearance.fill = rng.bernoulli(0.5)
                                   ? ColorSpec::solid(static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                                      100, 20)
                                   : ColorSpec::gradient({255, 0, 0}, {0, 0, 255}, rng.uniform(0.0, 6.0));
        inst.appearance.stroke_width = rng.bernoulli(0.5) ? rng.uniform(0.0, 4.0) : 0.0;
        inst.appearance.stroke_color = ColorSpec::solid(1, 2, 3);
        if (rng.bernoulli(0.3)) {
            inst.appearance.shadow =
                ShadowSpec{{9, 9, 9}, rng.uniform(0.0, 6.0), rng.uniform(0.0, 5.0), rng.uniform(0.0, 4.0)};
        }
        inst.appearance.line_height = rng.uniform(0.5, 2.0);
        inst.appearance.char_spacing = rng.uniform(-1.0, 3.0);
        inst.appearance.italic = rng.bernoulli(0.5);
        inst.appearance.bold = rng.bernoulli(0.5);
        inst.appearance.underline = rng.bernoulli(0.5);
        inst.relational.alignment = static_cast<Alignment>(rng.uniform_int(0, 3));
        inst.relational.z_order = i; // unique
        p.instances.push_back(inst);
    }
    return p;
}

} // namespace

TEST_CASE("empty protocol parses", "[protocol]") {
    const TextProtocol p = parse_protocol(R"({"canvas":[800,600],"instances":[]})");
    CHECK(p.canvas_width == 800);
    CHECK(p.canvas_height == 600);
    CHECK(p.instances.empty());
}

TEST_CASE("instance with every field populates all four records", "[protocol]") {
    const TextProtocol p = parse_protocol(kFullInstance);
    REQUIRE(p.instances.size() == 1);
    const TextInstance& inst = p.instances[0];
    CHECK(inst.geometry.x == 40.5);
    CHECK(inst.geometry.theta == 0.25);
    CHECK(inst.geometry.bending.tau == 1);
    CHECK(inst.geometry.bending.p[3] == Vec2{340, 100});
    CHECK(inst.semantic.text == "Grand SALE");
    CHECK(inst.semantic.direction == Direction::ltr);
    CHECK(inst.appearance.font_id == "boxfont");
    CHECK(inst.appearance.font_size == 32.0);
    CHECK(inst.appearance.fill == ColorSpec::solid(255, 20, 20));
    CHECK(inst.appearance.stroke_width == 2.0);
    REQUIRE(inst.appearance.shadow.has_value());
    CHECK(inst.appearance.shadow->offset_distance == 3.0);
    CHECK(inst.appearance.shadow->blur_radius == 2.0);
    CHECK(inst.appearance.line_height == 1.25);
    CHECK(inst.appearance.char_spacing == 1.5);
    CHECK(inst.appearance.italic);
    CHECK(inst.appearance.underline);
    CHECK(inst.relational.alignment == Alignment::center);
    CHECK(inst.relational.z_order == 4);
    CHECK(validate(p).empty());
}

TEST_CASE("defaults applied for absent optional fields", "[protocol]") {
    const TextProtocol p = parse_protocol(R"({
      "canvas":[100,100],
      "instances":[{
        "geometry":{"x":0,"y":0,"w":50,"h":20},
        "semantic":{"text":"hi"},
        "appearance":{"font":"boxfont","size":16,"fill":[0,0,0]},
        "relational":{"align":"left","z":0}
      }]})");
    const TextInstance& inst = p.instances[0];
    CHECK(inst.geometry.theta == 0.0);
    CHECK(inst.geometry.bending.tau == 0);
    CHECK(inst.semantic.direction == Direction::ltr);
    CHECK(inst.appearance.stroke_width == 0.0);
    CHECK_FALSE(inst.appearance.shadow.has_value());
    CHECK(inst.appearance.line_height == 1.2);
    CHECK(inst.appearance.char_spacing == 0.0);
    CHECK_FALSE(inst.appearance.italic);
}

TEST_CASE("theta out of range is rejected", "[protocol]") {
    std::string text = kFullInstance;
    const auto pos = text.find("\"theta\": 0.25");
    text.replace(pos, 13, "\"theta\": 7.0");
    CHECK_THROWS_AS(parse_protocol(text), RangeError);
}

TEST_CASE("parse failures carry the right category", "[protocol]") {
    CHECK_THROWS_AS(parse_protocol("not json at all"), EncodingError);
    CHECK_THROWS_AS(parse_protocol("{\"canvas\":[1,1],\"instances\":[],\"bogus\":1}"), SchemaError);
    CHECK_THROWS_AS(parse_protocol("{\"instances\":[]}"), SchemaError);
    CHECK_THROWS_AS(parse_protocol("{\"canvas\":[0,5],\"instances\":[]}"), RangeError);
    // bad UTF-8 inside a string literal
    const std::string bad = std::string("{\"canvas\":[1,1],\"instances\":[{\"geometry\":{\"x\":0,\"y\":0,") +
                            "\"w\":1,\"h\":1},\"semantic\":{\"text\":\"\xff\xfe\"}," +
                            "\"appearance\":{\"font\":\"boxfont\",\"size\":10,\"fill\":[0,0,0]}," +
                            "\"relational\":{\"align\":\"left\",\"z\":0}}]}";
    CHECK_THROWS_AS(parse_protocol(bad), EncodingError);
    CHECK_THROWS_AS(
        parse_protocol(R"({"canvas":[1,1],"instances":[{"geometry":{"x":0,"y":0,"w":1,"h":1},
          "semantic":{"text":"a","direction":"boustrophedon"},
          "appearance":{"font":"boxfont","size":10,"fill":[0,0,0]},
          "relational":{"align":"left","z":0}}]})"),
        SchemaError);
}

TEST_CASE("validate reports duplicate z-order naming both instances", "[protocol]") {
    TextProtocol p = parse_protocol(kFullInstance);
    p.instances[0].geometry.bending.tau = 0;
    TextInstance copy = p.instances[0];
    p.instances.push_back(copy); // same z
    const auto violations = validate(p);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].path.find("instances[0]") != std::string::npos);
    CHECK(violations[0].message.find("instances[1]") != std::string::npos);
}

TEST_CASE("validate flags a degenerate curve", "[protocol]") {
    TextProtocol p = parse_protocol(kFullInstance);
    for (Vec2& q : p.instances[0].geometry.bending.p) q = {10, 10};
    const auto violations = validate(p);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].message.find("degenerate") != std::string::npos);
}

TEST_CASE("each single-field violation is reported exactly once", "[protocol]") {
    const auto expect_one = [](TextProtocol p) {
        const auto violations = validate(p);
        CHECK(violations.size() == 1);
    };
    TextProtocol base = parse_protocol(kFullInstance);
    REQUIRE(validate(base).empty());

    TextProtocol p = base;
    p.instances[0].geometry.w = -1.0;
    expect_one(p);
    p = base;
    p.instances[0].geometry.theta = 6.5;
    expect_one(p);
    p = base;
    p.instances[0].appearance.font_size = 0.0;
    expect_one(p);
    p = base;
    p.instances[0].appearance.stroke_width = -0.5;
    expect_one(p);
    p = base;
    p.instances[0].appearance.line_height = 0.0;
    expect_one(p);
    p = base;
    p.instances[0].appearance.shadow->blur_radius = -1.0;
    expect_one(p);
    p = base;
    p.canvas_width = 0;
    expect_one(p);
}

TEST_CASE("serialize round-trips field-exactly", "[protocol]") {
    Rng rng(20240817);
    for (int iter = 0; iter < 200; ++iter) {
        const TextProtocol p = random_protocol(rng);
        if (!validate(p).empty()) continue;
        const std::string text = serialize_protocol(p);
        const TextProtocol q = parse_protocol(text);
        REQUIRE(q == p);
        // canonical: serializing twice gives identical bytes
        CHECK(serialize_protocol(q) == text);
    }
}

TEST_CASE("parse-serialize-parse equals a single parse", "[protocol]") {
    const TextProtocol once = parse_protocol(kFullInstance);
    const TextProtocol twice = parse_protocol(serialize_protocol(once));
    CHECK(once == twice);
}

TEST_CASE("shadow-free protocols omit the shadow key", "[protocol]") {
    TextProtocol p = parse_protocol(kFullInstance);
    p.instances[0].appearance.shadow.reset();
    CHECK(serialize_protocol(p).find("shadow") == std::string::npos);
}

TEST_CASE("serializing an invalid protocol fails", "[protocol]") {
    TextProtocol p = parse_protocol(kFullInstance);
    p.instances[0].appearance.font_size = -3.0;
    CHECK_THROWS_AS(serialize_protocol(p), InvalidProtocol);
}
