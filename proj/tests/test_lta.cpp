#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "layerkit/lta.hpp"
#include "layerkit/rng.hpp"

using namespace layerkit;

namespace {

TokenTensor random_tokens(Rng& rng, int n, int d) {
    TokenTensor t(n, d);
    for (double& v : t.values) v = rng.normal();
    return t;
}

LtaParams random_params(Rng& rng, int d, int h) {
    LtaParams p(d, h);
    for (double& v : p.wq) v = rng.normal();
    for (double& v : p.wk) v = rng.normal();
    for (double& v : p.wv) v = rng.normal();
    for (double& v : p.wo) v = rng.normal();
    for (double& v : p.gates) v = rng.normal();
    return p;
}

} // namespace

TEST_CASE("closed gates reduce to the identity", "[lta]") {
    Rng rng(3);
    const TokenTensor tokens = random_tokens(rng, 5, 8);
    LtaParams params = random_params(rng, 8, 2);
    params.gates = {-30.0, -30.0, -30.0};
    const TokenTensor out = lta_forward(tokens, params);
    for (std::size_t i = 0; i < tokens.values.size(); ++i) {
        REQUIRE(std::abs(out.values[i] - tokens.values[i]) <= 1e-9);
    }
}

TEST_CASE("scalar case matches the direct formula", "[lta]") {
    // N = 1, d = 1, h = 1, identity weights, tokens (1, 2, 3).
    TokenTensor tokens(1, 1);
    tokens.at(0, 0, 0) = 1.0;
    tokens.at(1, 0, 0) = 2.0;
    tokens.at(2, 0, 0) = 3.0;
    LtaParams params = LtaParams::identity(1, 1);
    params.gates = {0.0, 0.0, 0.0}; // sigma = 0.5

    const TokenTensor out = lta_forward(tokens, params);

    const double t[3] = {1.0, 2.0, 3.0};
    for (int r = 0; r < 3; ++r) {
        // scores z[r][c] = t_r * t_c (scale 1/sqrt(1) = 1)
        double weights[3], sum = 0.0;
        for (int c = 0; c < 3; ++c) {
            weights[c] = std::exp(t[r] * t[c]);
            sum += weights[c];
        }
        double attn = 0.0;
        for (int c = 0; c < 3; ++c) attn += weights[c] / sum * t[c];
        const double expected = t[r] + 0.5 * attn;
        REQUIRE(std::abs(out.at(r, 0, 0) - expected) <= 1e-12);
    }
}

TEST_CASE("positions can be permuted freely", "[lta]") {
    Rng rng(4);
    const int n = 6, d = 4;
    const TokenTensor tokens = random_tokens(rng, n, d);
    const LtaParams params = random_params(rng, d, 2);
    const TokenTensor out = lta_forward(tokens, params);

    const int perm[6] = {3, 0, 5, 1, 4, 2};
    TokenTensor shuffled(n, d);
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) shuffled.at(b, i, k) = tokens.at(b, perm[i], k);
        }
    }
    const TokenTensor out_shuffled = lta_forward(shuffled, params);
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) {
                REQUIRE(out_shuffled.at(b, i, k) == out.at(b, perm[i], k));
            }
        }
    }
}

TEST_CASE("attention is strictly position-local", "[lta]") {
    Rng rng(5);
    const int n = 7, d = 6;
    const TokenTensor tokens = random_tokens(rng, n, d);
    const LtaParams params = random_params(rng, d, 3);
    const TokenTensor base = lta_forward(tokens, params);

    TokenTensor poked = tokens;
    const int target = 4;
    for (int b = 0; b < 3; ++b) {
        for (int k = 0; k < d; ++k) poked.at(b, target, k) += rng.normal();
    }
    const TokenTensor out = lta_forward(poked, params);
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) {
                if (i == target) continue;
                REQUIRE(out.at(b, i, k) == base.at(b, i, k)); // exact zeros off-position
            }
        }
    }
}

TEST_CASE("attention output is a per-coordinate convex combination", "[lta]") {
    // With V and O projections at identity and gates wide open, the
    // residual increment at each coordinate must lie inside the range of
    // the three branch values (softmax rows sum to one).
    Rng rng(6);
    const int n = 4, d = 4;
    const TokenTensor tokens = random_tokens(rng, n, d);
    LtaParams params = LtaParams::identity(d, 2);
    for (double& v : params.wq) v = rng.normal();
    for (double& v : params.wk) v = rng.normal();
    params.gates = {30.0, 30.0, 30.0}; // sigma ~ 1

    const TokenTensor out = lta_forward(tokens, params);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            const double lo =
                std::min({tokens.at(0, i, k), tokens.at(1, i, k), tokens.at(2, i, k)});
            const double hi =
                std::max({tokens.at(0, i, k), tokens.at(1, i, k), tokens.at(2, i, k)});
            for (int b = 0; b < 3; ++b) {
                const double delta = out.at(b, i, k) - tokens.at(b, i, k);
                REQUIRE(delta >= lo - 1e-9);
                REQUIRE(delta <= hi + 1e-9);
            }
        }
    }
}

TEST_CASE("zero upstream gradient zeroes everything", "[lta]") {
    Rng rng(7);
    const TokenTensor tokens = random_tokens(rng, 3, 4);
    const LtaParams params = random_params(rng, 4, 2);
    const LtaGradients grads = lta_backward(tokens, params, TokenTensor(3, 4));
    for (double v : grads.tokens.values) CHECK(v == 0.0);
    for (double v : grads.params.wq) CHECK(v == 0.0);
    for (double v : grads.params.wo) CHECK(v == 0.0);
    for (double v : grads.params.gates) CHECK(v == 0.0);
}

TEST_CASE("gate gradient matches its closed form", "[lta]") {
    Rng rng(8);
    const int n = 3, d = 4;
    const TokenTensor tokens = random_tokens(rng, n, d);
    const LtaParams params = random_params(rng, d, 2);

    // loss = sum(output): upstream of ones
    TokenTensor upstream(n, d);
    for (double& v : upstream.values) v = 1.0;
    const LtaGradients grads = lta_backward(tokens, params, upstream);

    const TokenTensor out = lta_forward(tokens, params);
    for (int b = 0; b < 3; ++b) {
        const double g = 1.0 / (1.0 + std::exp(-params.gates[static_cast<std::size_t>(b)]));
        double y_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) {
                y_sum += (out.at(b, i, k) - tokens.at(b, i, k)) / g;
            }
        }
        const double expected = g * (1.0 - g) * y_sum;
        REQUIRE(grads.params.gates[static_cast<std::size_t>(b)] ==
                Catch::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("finite differences confirm the analytic gradients", "[lta]") {
    const GradCheckReport a = lta_grad_check(4, 8, 2, 7);
    CHECK(a.max_error() <= 1e-4);

    // degenerate single-dimension heads
    const GradCheckReport b = lta_grad_check(1, 2, 2, 11);
    CHECK(b.max_error() <= 1e-4);

    // deterministic per seed
    const GradCheckReport c = lta_grad_check(4, 8, 2, 7);
    CHECK(a.tokens == c.tokens);
    CHECK(a.wq == c.wq);
    CHECK(a.gates == c.gates);
}

TEST_CASE("shape errors are rejected", "[lta]") {
    CHECK_THROWS_AS(LtaParams(8, 3), StructureMismatch);
    Rng rng(9);
    const TokenTensor tokens = random_tokens(rng, 2, 6);
    const LtaParams params = random_params(rng, 4, 2);
    CHECK_THROWS_AS(lta_forward(tokens, params), StructureMismatch);
    CHECK_THROWS_AS(lta_backward(tokens, params, TokenTensor(2, 6)), StructureMismatch);
}
