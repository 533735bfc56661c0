#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "layerkit/render.hpp"
#include "layerkit/reward.hpp"
#include "layerkit/rng.hpp"

using namespace layerkit;

namespace {

// Full-matrix DP oracle, independent of the two-row implementation.
std::size_t lev_oracle(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    std::vector<std::vector<std::size_t>> dp(a.size() + 1,
                                             std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) dp[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) dp[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            dp[i][j] = std::min({dp[i - 1][j] + 1, dp[i][j - 1] + 1,
                                 dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
        }
    }
    return dp[a.size()][b.size()];
}

std::string random_word(Rng& rng, int max_len) {
    static const char32_t alphabet[] = {U'a', U'b', U'c', U'z', U'1', U' ', U'é', U'☃'};
    std::vector<char32_t> cps;
    const int len = rng.uniform_int(0, max_len);
    for (int i = 0; i < len; ++i) cps.push_back(alphabet[rng.uniform_int(0, 7)]);
    return detail::encode_utf8(cps);
}

RewardContext context_for(const RasterRGBA& input, const RasterRGBA& reference_render,
                          std::vector<ReferenceText> texts) {
    RewardContext ctx;
    ctx.input = input;
    ctx.reference_mask = mask_from_alpha(reference_render, 0);
    ctx.reference_texts = std::move(texts);
    return ctx;
}

} // namespace

TEST_CASE("levenshtein similarity basics", "[reward]") {
    CHECK(levenshtein_sim("abc", "abc") == 1.0);
    CHECK(levenshtein_sim("", "") == 1.0);
    CHECK(levenshtein_sim("kitten", "sitting") == Catch::Approx(1.0 - 3.0 / 7.0).epsilon(1e-15));
    CHECK(levenshtein_sim("SALE", "SALE!") == Catch::Approx(0.8).epsilon(1e-15));
    CHECK(levenshtein_sim("", "abcd") == 0.0);
    // unicode scalars, not bytes
    CHECK(levenshtein_sim("caf\xc3\xa9", "cafe") == Catch::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("levenshtein matches the DP oracle and is symmetric", "[reward]") {
    Rng rng(2025);
    for (int iter = 0; iter < 2000; ++iter) {
        const std::string a = random_word(rng, 32);
        const std::string b = random_word(rng, 32);
        const auto ua = detail::decode_utf8(a);
        const auto ub = detail::decode_utf8(b);
        double expected = 1.0;
        if (!ua.empty() || !ub.empty()) {
            expected = 1.0 - static_cast<double>(lev_oracle(ua, ub)) /
                                 static_cast<double>(std::max(ua.size(), ub.size()));
        }
        REQUIRE(levenshtein_sim(a, b) == expected);
        REQUIRE(levenshtein_sim(a, b) == levenshtein_sim(b, a));
        REQUIRE((levenshtein_sim(a, b) == 1.0) == (ua == ub));
    }
}

TEST_CASE("reward_pix equals exp(-masked_l1) with the prediction mask", "[reward]") {
    Rng rng(11);
    for (int iter = 0; iter < 50; ++iter) {
        RasterRGBA input(8, 8), rendered(8, 8);
        for (std::size_t i = 0; i < input.pixels.size(); ++i) {
            input.pixels[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
            rendered.pixels[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        }
        RewardContext ctx;
        ctx.input = input;
        ctx.reference_mask = BinaryMask(8, 8);
        const double expected =
            std::exp(-masked_l1(input, rendered, mask_from_alpha(rendered, 0)));
        REQUIRE(reward_pix(ctx, rendered) == expected);
    }
}

TEST_CASE("reward_pix degenerate and exact cases", "[reward]") {
    // rendered layer reproducing the masked input exactly -> exp(0) = 1
    const RasterRGBA input = RasterRGBA::filled(4, 4, 77, 88, 99, 255);
    RewardContext ctx;
    ctx.input = input;
    ctx.reference_mask = BinaryMask(4, 4);
    CHECK(reward_pix(ctx, input) == 1.0);

    // empty rendered layer -> numerator and popcount are both zero
    CHECK(reward_pix(ctx, RasterRGBA(4, 4)) == 1.0);

    // uniform masked difference of 51/255 -> exp(-0.2)
    const RasterRGBA off = RasterRGBA::filled(4, 4, 128, 139, 150, 255);
    CHECK(reward_pix(ctx, off) ==
          Catch::Approx(std::exp(-(51.0 / 255.0) * 48.0 / (48.0 + 1e-8))).epsilon(1e-14));
}

TEST_CASE("reward_loc follows mask IoU conventions", "[reward]") {
    RasterRGBA rendered(4, 4);
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 4; ++y) rendered.at(x, y)[3] = 255;
    }
    RewardContext ctx;
    ctx.input = RasterRGBA(4, 4);
    ctx.reference_mask = mask_from_alpha(rendered, 0);
    CHECK(reward_loc(ctx, rendered) == 1.0);

    CHECK(reward_loc(ctx, RasterRGBA(4, 4)) == 0.0);

    // half-overlapping equal-area masks -> 1/3
    RasterRGBA shifted(4, 4);
    for (int x = 1; x < 3; ++x) {
        for (int y = 0; y < 4; ++y) shifted.at(x, y)[3] = 255;
    }
    CHECK(reward_loc(ctx, shifted) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("reward_sem matching and weighting", "[reward]") {
    const auto instance_with = [](const std::string& text, double x) {
        TextInstance inst;
        inst.geometry = {x, 0, 40, 20, 0.0, {}};
        inst.semantic.text = text;
        inst.appearance.font_id = "boxfont";
        inst.appearance.font_size = 16;
        return inst;
    };
    TextProtocol pred;
    pred.canvas_width = pred.canvas_height = 100;

    RewardContext ctx;
    ctx.reference_texts = {{"SALE", BBox{0, 0, 40, 20}}};

    SECTION("identical single instance") {
        pred.instances = {instance_with("SALE", 0)};
        CHECK(reward_sem(pred, ctx) == 1.0);
    }
    SECTION("one edit away") {
        ctx.reference_texts[0].text = "SALE!";
        pred.instances = {instance_with("SALE", 0)};
        CHECK(reward_sem(pred, ctx) == Catch::Approx(0.8).epsilon(1e-15));
    }
    SECTION("hallucinated instance halves the weighted mean") {
        pred.instances = {instance_with("SALE", 0), instance_with("XYZW", 60)};
        pred.instances[1].relational.z_order = 1;
        CHECK(reward_sem(pred, ctx) == Catch::Approx(0.5).epsilon(1e-15));
    }
    SECTION("missed reference scores zero weight share") {
        pred.instances.clear();
        CHECK(reward_sem(pred, ctx) == 0.0);
    }
    SECTION("no instances on either side") {
        pred.instances.clear();
        ctx.reference_texts.clear();
        CHECK(reward_sem(pred, ctx) == 1.0);
    }
}

TEST_CASE("weights normalize and reject bad input", "[reward]") {
    const RewardWeights w = RewardWeights::normalized(1, 1, 1);
    CHECK(w.pix == Catch::Approx(1.0 / 3.0));
    CHECK(w.pix + w.loc + w.sem == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(RewardWeights::normalized(-1, 1, 1), RangeError);
    CHECK_THROWS_AS(RewardWeights::normalized(0, 0, 0), RangeError);
}

TEST_CASE("score_protocol is deterministic and bounded", "[reward]") {
    const BoxFont font;
    TextProtocol pred;
    pred.canvas_width = pred.canvas_height = 64;
    TextInstance inst;
    inst.geometry = {8, 8, 48, 20, 0.0, {}};
    inst.semantic.text = "hey";
    inst.appearance.font_id = "boxfont";
    inst.appearance.font_size = 16;
    inst.appearance.fill = ColorSpec::solid(200, 0, 0);
    pred.instances = {inst};

    const RasterRGBA rendered = render_text_layer(pred, font);
    const RasterRGBA input =
        alpha_over(rendered, RasterRGBA::filled(64, 64, 30, 60, 90, 255));
    const RewardContext ctx = context_for(
        input, rendered, {{"hey", BBox{8, 8, 48, 20}}});

    const RewardWeights w = RewardWeights::normalized(1, 1, 1);
    const RewardBreakdown a = score_protocol(pred, ctx, w, font);
    const RewardBreakdown b = score_protocol(pred, ctx, w, font);
    CHECK(a.total == b.total);
    CHECK(a.note.empty());
    CHECK(a.r_pix == 1.0); // binary-alpha render over the same composite
    CHECK(a.r_loc == 1.0);
    CHECK(a.r_sem == 1.0);
    CHECK(a.total == 1.0);
    CHECK(std::abs(a.total - (w.pix * a.r_pix + w.loc * a.r_loc + w.sem * a.r_sem)) <= 1e-12);
}

TEST_CASE("unrenderable candidates score zero with a note", "[reward]") {
    const BoxFont font;
    TextProtocol pred;
    pred.canvas_width = pred.canvas_height = 32;
    TextInstance inst;
    inst.geometry = {0, 0, 20, 10, 0.0, {}};
    inst.semantic.text = "x";
    inst.appearance.font_id = "no-such-font";
    inst.appearance.font_size = 8;
    pred.instances = {inst};

    RewardContext ctx;
    ctx.input = RasterRGBA(32, 32);
    ctx.reference_mask = BinaryMask(32, 32);

    const RewardBreakdown out =
        score_protocol(pred, ctx, RewardWeights::normalized(1, 1, 1), font);
    CHECK(out.total == 0.0);
    CHECK_FALSE(out.note.empty());

    // canvas mismatch is also survivable
    pred.instances[0].appearance.font_id = "boxfont";
    pred.canvas_width = 16;
    const RewardBreakdown mismatch =
        score_protocol(pred, ctx, RewardWeights::normalized(1, 1, 1), font);
    CHECK(mismatch.total == 0.0);
    CHECK_FALSE(mismatch.note.empty());
}

TEST_CASE("dropping the pixel weight ignores in-mask corruption", "[reward]") {
    const BoxFont font;
    TextProtocol pred;
    pred.canvas_width = pred.canvas_height = 64;
    TextInstance inst;
    inst.geometry = {8, 8, 48, 20, 0.0, {}};
    inst.semantic.text = "ok";
    inst.appearance.font_id = "boxfont";
    inst.appearance.font_size = 16;
    inst.appearance.fill = ColorSpec::solid(10, 200, 10);
    pred.instances = {inst};

    const RasterRGBA rendered = render_text_layer(pred, font);
    const RasterRGBA input = alpha_over(rendered, RasterRGBA::filled(64, 64, 0, 0, 0, 255));
    const RewardContext ctx = context_for(input, rendered, {{"ok", BBox{8, 8, 48, 20}}});

    TextProtocol corrupted = pred;
    corrupted.instances[0].appearance.fill = ColorSpec::solid(200, 10, 10);

    const RewardBreakdown no_pix =
        score_protocol(corrupted, ctx, RewardWeights::normalized(0, 1, 1), font);
    CHECK(no_pix.total == 1.0);

    const RewardBreakdown balanced =
        score_protocol(corrupted, ctx, RewardWeights::normalized(1, 1, 1), font);
    CHECK(balanced.total < 1.0);
    CHECK(balanced.r_loc == 1.0);
    CHECK(balanced.r_sem == 1.0);
    CHECK(balanced.r_pix < 1.0);
}
