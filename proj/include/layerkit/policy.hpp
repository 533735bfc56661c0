#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerkit/errors.hpp"
#include "layerkit/glyph.hpp"
#include "layerkit/protocol.hpp"
#include "layerkit/rng.hpp"

namespace layerkit {

/// One categorical decision of the toy policy, parameterized by raw
/// logits.
struct CategoricalFactor {
    std::string name;
    std::vector<std::string> labels;
    std::vector<double> logits;
};

struct ImagePolicy {
    std::string image_id;
    std::vector<CategoricalFactor> factors;
};

/// Factorized categorical policy over discretized protocol attributes,
/// one independent factor set per image. Stands in for an
/// autoregressive vision-language policy at desk scale.
struct ToyPolicy {
    std::vector<ImagePolicy> images;
};

/// Action space of one image: the policy picks a text string, a cell of
/// a grid x grid placement lattice, a font, and a font size; the rest of
/// the protocol is filled with fixed defaults.
struct ToyTask {
    std::string image_id;
    int canvas_w = 128;
    int canvas_h = 128;
    std::vector<std::string> vocab;
    int grid = 8;
    std::vector<std::string> fonts;
    std::vector<int> sizes;
    Rgb fill{20, 20, 30};

    static constexpr int kFactorText = 0;
    static constexpr int kFactorX = 1;
    static constexpr int kFactorY = 2;
    static constexpr int kFactorFont = 3;
    static constexpr int kFactorSize = 4;

    /// choices: [text index, x bin, y bin, font index, size index].
    TextProtocol assemble(const std::vector<int>& choices) const {
        const std::string& text = vocab[static_cast<std::size_t>(choices[kFactorText])];
        const int size = sizes[static_cast<std::size_t>(choices[kFactorSize])];
        const std::size_t glyphs = detail::decode_utf8(text).size();
        const int adv = size * 3 / 4;
        const int w = std::max(1, static_cast<int>(glyphs) * adv);
        const int h = size * 5 / 4; // line pitch at line_height 1.25

        // bin centers of the placement lattice
        const double cx = (choices[kFactorX] + 0.5) * canvas_w / grid;
        const double cy = (choices[kFactorY] + 0.5) * canvas_h / grid;

        TextProtocol p;
        p.canvas_width = canvas_w;
        p.canvas_height = canvas_h;
        TextInstance inst;
        inst.geometry.x = cx - w / 2;
        inst.geometry.y = cy - h / 2;
        inst.geometry.w = w;
        inst.geometry.h = h;
        inst.semantic.text = text;
        inst.appearance.font_id = fonts[static_cast<std::size_t>(choices[kFactorFont])];
        inst.appearance.font_size = size;
        inst.appearance.fill = ColorSpec::solid(fill.r, fill.g, fill.b);
        inst.appearance.line_height = 1.25;
        p.instances.push_back(std::move(inst));
        return p;
    }

    std::vector<CategoricalFactor> make_factors() const {
        std::vector<CategoricalFactor> factors(5);
        factors[kFactorText].name = "text";
        factors[kFactorText].labels = vocab;
        factors[kFactorX].name = "x_bin";
        factors[kFactorY].name = "y_bin";
        for (int i = 0; i < grid; ++i) {
            factors[kFactorX].labels.push_back(std::to_string(i));
            factors[kFactorY].labels.push_back(std::to_string(i));
        }
        factors[kFactorFont].name = "font";
        factors[kFactorFont].labels = fonts;
        factors[kFactorSize].name = "size";
        for (int s : sizes) factors[kFactorSize].labels.push_back(std::to_string(s));
        for (CategoricalFactor& f : factors) {
            if (f.labels.size() < 2) {
                throw RangeError("toy task factor '" + f.name + "' needs >= 2 categories");
            }
            f.logits.assign(f.labels.size(), 0.0);
        }
        return factors;
    }
};

/// Uniform (all-zero logits) policy matching the tasks' factor layout.
inline ToyPolicy uniform_policy_for(const std::vector<ToyTask>& tasks) {
    ToyPolicy policy;
    for (const ToyTask& task : tasks) {
        policy.images.push_back({task.image_id, task.make_factors()});
    }
    return policy;
}

namespace detail {

inline std::vector<double> softmax(const std::vector<double>& logits, double temperature = 1.0) {
    std::vector<double> p(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - mx) / temperature);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

inline double log_sum_exp(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

/// log pi(choice) at temperature 1 (the policy's own distribution).
inline double log_prob(const CategoricalFactor& factor, int choice) {
    return factor.logits[static_cast<std::size_t>(choice)] - log_sum_exp(factor.logits);
}

inline int sample_categorical(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace detail

inline nlohmann::ordered_json policy_to_json(const ToyPolicy& policy) {
    nlohmann::ordered_json j;
    j["images"] = nlohmann::ordered_json::array();
    for (const ImagePolicy& img : policy.images) {
        nlohmann::ordered_json ji;
        ji["id"] = img.image_id;
        ji["factors"] = nlohmann::ordered_json::array();
        for (const CategoricalFactor& f : img.factors) {
            nlohmann::ordered_json jf;
            jf["name"] = f.name;
            jf["labels"] = f.labels;
            jf["logits"] = f.logits;
            ji["factors"].push_back(std::move(jf));
        }
        j["images"].push_back(std::move(ji));
    }
    return j;
}

inline ToyPolicy policy_from_json(const nlohmann::json& j) {
    ToyPolicy policy;
    for (const auto& ji : j.at("images")) {
        ImagePolicy img;
        img.image_id = ji.at("id").get<std::string>();
        for (const auto& jf : ji.at("factors")) {
            CategoricalFactor f;
            f.name = jf.at("name").get<std::string>();
            f.labels = jf.at("labels").get<std::vector<std::string>>();
            f.logits = jf.at("logits").get<std::vector<double>>();
            if (f.labels.size() != f.logits.size() || f.labels.size() < 2) {
                throw SchemaError("policy factor '" + f.name + "' is malformed");
            }
            img.factors.push_back(std::move(f));
        }
        policy.images.push_back(std::move(img));
    }
    return policy;
}

} // namespace layerkit
