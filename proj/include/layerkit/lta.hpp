#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "layerkit/errors.hpp"
#include "layerkit/rng.hpp"

namespace layerkit {

/// Stacked branch features: 3 branches (condition, background, sticker)
/// sharing N positions and dimension d. Double precision throughout;
/// this module exists for numerical verification, not throughput.
struct TokenTensor {
    int positions = 0;
    int dim = 0;
    std::vector<double> values; // [branch][position][dim], row major

    TokenTensor() = default;
    TokenTensor(int n, int d)
        : positions(n), dim(d),
          values(static_cast<std::size_t>(3) * static_cast<std::size_t>(n) *
                     static_cast<std::size_t>(d),
                 0.0) {}

    double& at(int branch, int n, int k) {
        return values[(static_cast<std::size_t>(branch) * positions + static_cast<std::size_t>(n)) *
                          dim +
                      static_cast<std::size_t>(k)];
    }
    double at(int branch, int n, int k) const {
        return values[(static_cast<std::size_t>(branch) * positions + static_cast<std::size_t>(n)) *
                          dim +
                      static_cast<std::size_t>(k)];
    }
};

/// Shared projections, output projection, and per-branch residual gates.
struct LtaParams {
    int dim = 0;
    int heads = 1;
    std::vector<double> wq, wk, wv, wo; // d x d, row major
    std::array<double, 3> gates{-4.0, -4.0, -4.0};

    LtaParams() = default;
    LtaParams(int d, int h) : dim(d), heads(h) {
        if (d < 1 || h < 1 || d % h != 0) {
            throw StructureMismatch("dim must be a positive multiple of heads");
        }
        wq.assign(static_cast<std::size_t>(d) * d, 0.0);
        wk = wv = wo = wq;
    }

    /// Identity projections and nearly-closed gates: the untrained block
    /// is approximately the identity map.
    static LtaParams identity(int d, int h) {
        LtaParams p(d, h);
        for (int i = 0; i < d; ++i) {
            p.wq[static_cast<std::size_t>(i) * d + i] = 1.0;
            p.wk[static_cast<std::size_t>(i) * d + i] = 1.0;
            p.wv[static_cast<std::size_t>(i) * d + i] = 1.0;
            p.wo[static_cast<std::size_t>(i) * d + i] = 1.0;
        }
        return p;
    }
};

struct LtaGradients {
    TokenTensor tokens;           // d loss / d input tokens
    LtaParams params;             // gradients stored in the same layout
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void require_shapes(const TokenTensor& t, const LtaParams& p) {
    if (t.dim != p.dim || p.heads < 1 || p.dim % p.heads != 0 || t.positions < 1) {
        throw StructureMismatch("token tensor and parameters have inconsistent shapes");
    }
}

/// Per-position attention workspace: everything needed to replay one
/// position's forward pass during backward.
struct LtaPositionState {
    std::vector<double> s;  // 3 x d input rows
    std::vector<double> q, k, v; // 3 x d
    std::vector<double> scores;  // heads x 3 x 3 softmax rows
    std::vector<double> attn_out; // 3 x d, pre-W_O
    std::vector<double> y;  // 3 x d, post-W_O
};

inline void lta_position_forward(const TokenTensor& tokens, const LtaParams& p, int n,
                                 LtaPositionState& st) {
    const int d = p.dim;
    const int h = p.heads;
    const int dh = d / h;
    st.s.assign(3 * static_cast<std::size_t>(d), 0.0);
    for (int b = 0; b < 3; ++b) {
        for (int k = 0; k < d; ++k) {
            st.s[static_cast<std::size_t>(b) * d + k] = tokens.at(b, n, k);
        }
    }
    const auto matmul_rows3 = [d](const std::vector<double>& rows, const std::vector<double>& w,
                                  std::vector<double>& out) {
        out.assign(3 * static_cast<std::size_t>(d), 0.0);
        for (int b = 0; b < 3; ++b) {
            for (int i = 0; i < d; ++i) {
                const double s = rows[static_cast<std::size_t>(b) * d + i];
                if (s == 0.0) continue;
                for (int j = 0; j < d; ++j) {
                    out[static_cast<std::size_t>(b) * d + j] += s * w[static_cast<std::size_t>(i) * d + j];
                }
            }
        }
    };
    matmul_rows3(st.s, p.wq, st.q);
    matmul_rows3(st.s, p.wk, st.k);
    matmul_rows3(st.s, p.wv, st.v);

    st.scores.assign(static_cast<std::size_t>(h) * 9, 0.0);
    st.attn_out.assign(3 * static_cast<std::size_t>(d), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int head = 0; head < h; ++head) {
        const int off = head * dh;
        for (int r = 0; r < 3; ++r) {
            double logits[3];
            double mx = -1e300;
            for (int c = 0; c < 3; ++c) {
                double dot = 0.0;
                for (int k = 0; k < dh; ++k) {
                    dot += st.q[static_cast<std::size_t>(r) * d + off + k] *
                           st.k[static_cast<std::size_t>(c) * d + off + k];
                }
                logits[c] = dot * scale;
                mx = std::max(mx, logits[c]);
            }
            double sum = 0.0;
            for (int c = 0; c < 3; ++c) {
                logits[c] = std::exp(logits[c] - mx);
                sum += logits[c];
            }
            for (int c = 0; c < 3; ++c) {
                const double prob = logits[c] / sum;
                st.scores[(static_cast<std::size_t>(head) * 3 + r) * 3 + c] = prob;
                for (int k = 0; k < dh; ++k) {
                    st.attn_out[static_cast<std::size_t>(r) * d + off + k] +=
                        prob * st.v[static_cast<std::size_t>(c) * d + off + k];
                }
            }
        }
    }
    matmul_rows3(st.attn_out, p.wo, st.y);
}

} // namespace detail

/// Branch attention forward pass: per position, multi-head scaled
/// dot-product attention among the three branch tokens, output
/// projection, then a sigmoid-gated residual per branch.
inline TokenTensor lta_forward(const TokenTensor& tokens, const LtaParams& params) {
    detail::require_shapes(tokens, params);
    TokenTensor out(tokens.positions, tokens.dim);
    detail::LtaPositionState st;
    const double g[3] = {detail::sigmoid(params.gates[0]), detail::sigmoid(params.gates[1]),
                         detail::sigmoid(params.gates[2])};
    for (int n = 0; n < tokens.positions; ++n) {
        detail::lta_position_forward(tokens, params, n, st);
        for (int b = 0; b < 3; ++b) {
            for (int k = 0; k < tokens.dim; ++k) {
                out.at(b, n, k) =
                    tokens.at(b, n, k) + g[b] * st.y[static_cast<std::size_t>(b) * tokens.dim + k];
            }
        }
    }
    return out;
}

/// Exact analytic gradients of sum(upstream * output) with respect to
/// the input tokens and every parameter.
inline LtaGradients lta_backward(const TokenTensor& tokens, const LtaParams& params,
                                 const TokenTensor& upstream) {
    detail::require_shapes(tokens, params);
    if (upstream.positions != tokens.positions || upstream.dim != tokens.dim) {
        throw StructureMismatch("upstream gradient shape mismatch");
    }
    const int d = params.dim;
    const int h = params.heads;
    const int dh = d / h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    LtaGradients grads;
    grads.tokens = TokenTensor(tokens.positions, d);
    grads.params = LtaParams(d, h);
    grads.params.gates = {0.0, 0.0, 0.0};

    const double g[3] = {detail::sigmoid(params.gates[0]), detail::sigmoid(params.gates[1]),
                         detail::sigmoid(params.gates[2])};

    detail::LtaPositionState st;
    std::vector<double> dy(3 * static_cast<std::size_t>(d));
    std::vector<double> d_attn(3 * static_cast<std::size_t>(d));
    std::vector<double> dq(3 * static_cast<std::size_t>(d));
    std::vector<double> dk(3 * static_cast<std::size_t>(d));
    std::vector<double> dv(3 * static_cast<std::size_t>(d));

    for (int n = 0; n < tokens.positions; ++n) {
        detail::lta_position_forward(tokens, params, n, st);

        // residual: out = s + sigma(alpha_b) * y
        for (int b = 0; b < 3; ++b) {
            double gate_dot = 0.0;
            for (int k = 0; k < d; ++k) {
                const double up = upstream.at(b, n, k);
                grads.tokens.at(b, n, k) += up; // identity path
                dy[static_cast<std::size_t>(b) * d + k] = up * g[b];
                gate_dot += up * st.y[static_cast<std::size_t>(b) * d + k];
            }
            grads.params.gates[static_cast<std::size_t>(b)] += gate_dot * g[b] * (1.0 - g[b]);
        }

        // y = attn_out * W_O
        std::fill(d_attn.begin(), d_attn.end(), 0.0);
        for (int b = 0; b < 3; ++b) {
            for (int i = 0; i < d; ++i) {
                const double a = st.attn_out[static_cast<std::size_t>(b) * d + i];
                for (int j = 0; j < d; ++j) {
                    const double dyv = dy[static_cast<std::size_t>(b) * d + j];
                    grads.params.wo[static_cast<std::size_t>(i) * d + j] += a * dyv;
                    d_attn[static_cast<std::size_t>(b) * d + i] +=
                        dyv * params.wo[static_cast<std::size_t>(i) * d + j];
                }
            }
        }

        // attention per head
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        for (int head = 0; head < h; ++head) {
            const int off = head * dh;
            for (int r = 0; r < 3; ++r) {
                // dP[r][c] = sum_k d_attn[r][off+k] * v[c][off+k]
                double dp[3];
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int k = 0; k < dh; ++k) {
                        acc += d_attn[static_cast<std::size_t>(r) * d + off + k] *
                               st.v[static_cast<std::size_t>(c) * d + off + k];
                    }
                    dp[c] = acc;
                }
                const double* prob = &st.scores[(static_cast<std::size_t>(head) * 3 + r) * 3];
                double dot = 0.0;
                for (int c = 0; c < 3; ++c) dot += dp[c] * prob[c];
                double dz[3];
                for (int c = 0; c < 3; ++c) dz[c] = prob[c] * (dp[c] - dot);

                for (int c = 0; c < 3; ++c) {
                    for (int k = 0; k < dh; ++k) {
                        // dV[c] += P[r][c] * d_attn[r]
                        dv[static_cast<std::size_t>(c) * d + off + k] +=
                            prob[c] * d_attn[static_cast<std::size_t>(r) * d + off + k];
                        // z[r][c] = scale * q[r] . k[c]
                        dq[static_cast<std::size_t>(r) * d + off + k] +=
                            dz[c] * scale * st.k[static_cast<std::size_t>(c) * d + off + k];
                        dk[static_cast<std::size_t>(c) * d + off + k] +=
                            dz[c] * scale * st.q[static_cast<std::size_t>(r) * d + off + k];
                    }
                }
            }
        }

        // q = s W_Q etc.: accumulate weight grads and token grads
        for (int b = 0; b < 3; ++b) {
            for (int i = 0; i < d; ++i) {
                const double s = st.s[static_cast<std::size_t>(b) * d + i];
                double acc = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double dqv = dq[static_cast<std::size_t>(b) * d + j];
                    const double dkv = dk[static_cast<std::size_t>(b) * d + j];
                    const double dvv = dv[static_cast<std::size_t>(b) * d + j];
                    grads.params.wq[static_cast<std::size_t>(i) * d + j] += s * dqv;
                    grads.params.wk[static_cast<std::size_t>(i) * d + j] += s * dkv;
                    grads.params.wv[static_cast<std::size_t>(i) * d + j] += s * dvv;
                    acc += dqv * params.wq[static_cast<std::size_t>(i) * d + j] +
                           dkv * params.wk[static_cast<std::size_t>(i) * d + j] +
                           dvv * params.wv[static_cast<std::size_t>(i) * d + j];
                }
                grads.tokens.at(b, n, i) += acc;
            }
        }
    }
    return grads;
}

struct GradCheckReport {
    double tokens = 0.0;
    double wq = 0.0, wk = 0.0, wv = 0.0, wo = 0.0;
    double gates = 0.0;

    double max_error() const {
        return std::max({tokens, wq, wk, wv, wo, gates});
    }
};

/// Seed tokens and parameters from a unit normal, compare analytic
/// gradients of a random linear loss against central finite differences
/// (step 1e-6), and report the worst relative error per parameter group.
inline GradCheckReport lta_grad_check(int n, int d, int h, std::uint64_t seed) {
    Rng rng(seed);
    TokenTensor tokens(n, d);
    for (double& v : tokens.values) v = rng.normal();
    LtaParams params(d, h);
    for (double& v : params.wq) v = rng.normal();
    for (double& v : params.wk) v = rng.normal();
    for (double& v : params.wv) v = rng.normal();
    for (double& v : params.wo) v = rng.normal();
    for (double& v : params.gates) v = rng.normal();
    TokenTensor upstream(n, d);
    for (double& v : upstream.values) v = rng.normal();

    const auto loss = [&upstream](const TokenTensor& out) {
        double acc = 0.0;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            acc += out.values[i] * upstream.values[i];
        }
        return acc;
    };

    const LtaGradients analytic = lta_backward(tokens, params, upstream);

    const double step = 1e-6;
    const auto rel_err = [](double a, double f) {
        return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-8});
    };
    const auto check_values = [&](double* base, std::size_t count, const double* analytic_vals) {
        double worst = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double keep = base[i];
            base[i] = keep + step;
            const double up = loss(lta_forward(tokens, params));
            base[i] = keep - step;
            const double down = loss(lta_forward(tokens, params));
            base[i] = keep;
            const double fd = (up - down) / (2.0 * step);
            worst = std::max(worst, rel_err(analytic_vals[i], fd));
        }
        return worst;
    };

    GradCheckReport report;
    report.tokens = check_values(tokens.values.data(), tokens.values.size(),
                                 analytic.tokens.values.data());
    report.wq = check_values(params.wq.data(), params.wq.size(), analytic.params.wq.data());
    report.wk = check_values(params.wk.data(), params.wk.size(), analytic.params.wk.data());
    report.wv = check_values(params.wv.data(), params.wv.size(), analytic.params.wv.data());
    report.wo = check_values(params.wo.data(), params.wo.size(), analytic.params.wo.data());
    report.gates = check_values(params.gates.data(), 3, analytic.params.gates.data());
    return report;
}

} // namespace layerkit
