#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layerkit/corpus.hpp"
#include "layerkit/glyph.hpp"
#include "layerkit/grpo.hpp"
#include "layerkit/policy.hpp"
#include "layerkit/raster.hpp"
#include "layerkit/render.hpp"
#include "layerkit/reward.hpp"
#include "layerkit/rng.hpp"

namespace layerkit {

/// A policy-optimization task bound to a concrete image and scoring
/// context. When built by make_toy_task the ground-truth protocol lies
/// exactly on the action lattice, so the optimum earns reward 1.
struct ToyTaskFixture {
    ToyTask task;
    std::vector<int> gt_choices; // empty when the optimum is off-lattice
    RasterRGBA design;
    RewardContext context;
};

/// Single-image task: a solid background plus one text instance whose
/// string, placement cell, font and size are all members of the action
/// space.
inline ToyTaskFixture make_toy_task(std::uint64_t seed, int canvas = 128, int grid = 8,
                                    int vocab_size = 8, int font_count = 4,
                                    std::vector<int> sizes = {16, 24, 32, 40}) {
    Rng rng(splitmix64(seed ^ 0x707970746f79ULL));
    ToyTaskFixture fx;
    fx.task.image_id = "toy-" + std::to_string(seed);
    fx.task.canvas_w = canvas;
    fx.task.canvas_h = canvas;
    fx.task.grid = grid;
    fx.task.sizes = std::move(sizes);

    // Short words keep every candidate inside the canvas.
    std::vector<std::string> pool;
    for (const std::string& word : detail::corpus_words()) {
        if (detail::decode_utf8(word).size() <= 4) pool.push_back(word);
    }
    while (static_cast<int>(fx.task.vocab.size()) < vocab_size) {
        const std::string& w = rng.pick(pool);
        bool seen = false;
        for (const std::string& v : fx.task.vocab) seen = seen || v == w;
        if (!seen) fx.task.vocab.push_back(w);
    }
    for (int f = 0; f < font_count; ++f) {
        fx.task.fonts.push_back(BoxFont::font_ids()[static_cast<std::size_t>(f) %
                                                    BoxFont::font_ids().size()]);
    }

    // Ground truth on the lattice, away from the canvas border.
    const int lo = grid / 4, hi = grid - 1 - grid / 4;
    fx.gt_choices = {rng.uniform_int(0, vocab_size - 1), rng.uniform_int(lo, hi),
                     rng.uniform_int(lo, hi), rng.uniform_int(0, font_count - 1),
                     rng.uniform_int(0, static_cast<int>(fx.task.sizes.size()) - 1)};

    const BoxFont font;
    const TextProtocol gt_protocol = fx.task.assemble(fx.gt_choices);
    const RasterRGBA text = render_text_layer(gt_protocol, font);
    const Rgb bg = detail::random_rgb(rng);
    fx.design = alpha_over(text, RasterRGBA::filled(canvas, canvas, bg.r, bg.g, bg.b, 255));

    fx.context.input = fx.design;
    fx.context.reference_mask = mask_from_alpha(text, 0);
    const TextInstance& inst = gt_protocol.instances[0];
    fx.context.reference_texts = {
        {inst.semantic.text,
         BBox{inst.geometry.x, inst.geometry.y, inst.geometry.w, inst.geometry.h}}};
    return fx;
}

/// Task derived from a full corpus item: the vocabulary holds the item's
/// own strings plus distractors; the optimum is generally off-lattice.
inline ToyTaskFixture fixture_from_item(const CorpusItem& item, int vocab_size, int grid,
                                        Rng& rng) {
    ToyTaskFixture fx;
    fx.task.image_id = item.id;
    fx.task.canvas_w = item.design.width;
    fx.task.canvas_h = item.design.height;
    fx.task.grid = grid;
    fx.task.fonts = BoxFont::font_ids();
    fx.task.sizes = {16, 24, 32, 40};
    for (const TextInstance& inst : item.protocol.instances) {
        if (static_cast<int>(fx.task.vocab.size()) >= vocab_size) break;
        bool seen = false;
        for (const std::string& v : fx.task.vocab) seen = seen || v == inst.semantic.text;
        if (!seen) fx.task.vocab.push_back(inst.semantic.text);
    }
    while (static_cast<int>(fx.task.vocab.size()) < vocab_size) {
        const std::string& w = rng.pick(detail::corpus_words());
        bool seen = false;
        for (const std::string& v : fx.task.vocab) seen = seen || v == w;
        if (!seen) fx.task.vocab.push_back(w);
    }
    fx.design = item.design;
    fx.context = reward_context_for(item);
    return fx;
}

inline std::vector<ToyTask> tasks_of(const std::vector<ToyTaskFixture>& fixtures) {
    std::vector<ToyTask> tasks;
    tasks.reserve(fixtures.size());
    for (const ToyTaskFixture& fx : fixtures) tasks.push_back(fx.task);
    return tasks;
}

/// Reward closure for the trainer: assemble the candidate protocol and
/// score it against the fixture's context.
inline RewardFn toy_reward_fn(const std::vector<ToyTaskFixture>& fixtures,
                              const RewardWeights& weights, const GlyphSource& glyphs) {
    return [&fixtures, weights, &glyphs](std::size_t image_index, const std::vector<int>& choices) {
        const ToyTaskFixture& fx = fixtures[image_index];
        return score_protocol(fx.task.assemble(choices), fx.context, weights, glyphs).total;
    };
}

} // namespace layerkit
