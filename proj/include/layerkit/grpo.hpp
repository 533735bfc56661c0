#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "layerkit/errors.hpp"
#include "layerkit/policy.hpp"
#include "layerkit/rng.hpp"

namespace layerkit {

struct GrpoConfig {
    int group_size = 16;
    double learning_rate = 1e-4;
    int total_steps = 2000;
    int batch_size = 32;
    double clip_eps = 0.2;
    double kl_beta = 0.01;
    double temperature = 0.8; // rollout sampling only; ratios use temperature 1
    double adv_eps = 1e-8;
    int inner_epochs = 1;
    std::uint64_t seed = 0;
};

struct GroupSample {
    std::vector<int> choices;
    double logp_old = 0.0; // log-prob under the rollout policy snapshot
    double reward = 0.0;
    double advantage = 0.0;
};

struct PolicyGroup {
    std::size_t image_index = 0;
    std::vector<GroupSample> samples;
};

/// Group-normalized advantages: (r - mean) / (population std + eps).
inline std::vector<double> group_advantages(const std::vector<double>& rewards, double eps) {
    const double k = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= k;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sigma = std::sqrt(var / k);
    std::vector<double> adv(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        adv[i] = (rewards[i] - mean) / (sigma + eps);
    }
    return adv;
}

/// Per-sample clipped surrogate term, before negation:
/// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
inline double clipped_surrogate(double ratio, double advantage, double clip_eps) {
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(ratio * advantage, clipped * advantage);
}

namespace detail {

inline double kl_factor(const CategoricalFactor& p, const CategoricalFactor& q) {
    if (p.logits.size() != q.logits.size()) {
        throw StructureMismatch("policy factors have different category counts");
    }
    const std::vector<double> pp = softmax(p.logits);
    const double lse_p = log_sum_exp(p.logits);
    const double lse_q = log_sum_exp(q.logits);
    double kl = 0.0;
    for (std::size_t i = 0; i < pp.size(); ++i) {
        kl += pp[i] * ((p.logits[i] - lse_p) - (q.logits[i] - lse_q));
    }
    return kl;
}

} // namespace detail

/// Analytic KL(policy || reference), summed over all factors and images.
inline double kl_to_reference(const ToyPolicy& policy, const ToyPolicy& reference) {
    if (policy.images.size() != reference.images.size()) {
        throw StructureMismatch("policies cover different image sets");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < policy.images.size(); ++i) {
        const ImagePolicy& p = policy.images[i];
        const ImagePolicy& q = reference.images[i];
        if (p.factors.size() != q.factors.size()) {
            throw StructureMismatch("policies have different factor layouts");
        }
        for (std::size_t f = 0; f < p.factors.size(); ++f) {
            kl += detail::kl_factor(p.factors[f], q.factors[f]);
        }
    }
    return kl;
}

/// Draw K candidates from softmax(logits / temperature) per factor.
/// Rewards and advantages are left for the caller; logp_old records the
/// temperature-1 log-probability under the sampling policy.
inline PolicyGroup sample_group(const ImagePolicy& image, std::size_t image_index,
                                const GrpoConfig& cfg, Rng& rng) {
    PolicyGroup group;
    group.image_index = image_index;
    group.samples.resize(static_cast<std::size_t>(cfg.group_size));
    std::vector<std::vector<double>> sampling_probs;
    sampling_probs.reserve(image.factors.size());
    for (const CategoricalFactor& f : image.factors) {
        sampling_probs.push_back(detail::softmax(f.logits, cfg.temperature));
    }
    for (GroupSample& sample : group.samples) {
        sample.choices.resize(image.factors.size());
        for (std::size_t f = 0; f < image.factors.size(); ++f) {
            const int c = detail::sample_categorical(sampling_probs[f], rng);
            sample.choices[f] = c;
            sample.logp_old += detail::log_prob(image.factors[f], c);
        }
    }
    return group;
}

using RewardFn = std::function<double(std::size_t image_index, const std::vector<int>& choices)>;

struct StepStats {
    double mean_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
};

/// One optimization step: roll out a group per batch image, score and
/// normalize, then apply plain gradient descent on the negated clipped
/// surrogate plus beta * KL(policy || reference), averaged over the
/// batch. theta_old is the pre-step snapshot; with inner_epochs = 1
/// every ratio is exactly 1 and nothing clips.
inline StepStats grpo_step(ToyPolicy& policy, const ToyPolicy& reference,
                           const std::vector<std::size_t>& batch, const GrpoConfig& cfg,
                           const RewardFn& reward_fn, Rng& rng) {
    if (batch.empty()) throw EmptyCorpus("grpo step needs a nonempty batch");

    StepStats stats;
    std::vector<PolicyGroup> groups;
    groups.reserve(batch.size());
    for (std::size_t image_index : batch) {
        PolicyGroup group = sample_group(policy.images[image_index], image_index, cfg, rng);
        std::vector<double> rewards;
        rewards.reserve(group.samples.size());
        for (GroupSample& sample : group.samples) {
            sample.reward = reward_fn(image_index, sample.choices);
            rewards.push_back(sample.reward);
            stats.mean_reward += sample.reward;
        }
        const std::vector<double> adv = group_advantages(rewards, cfg.adv_eps);
        for (std::size_t k = 0; k < adv.size(); ++k) {
            group.samples[k].advantage = adv[k];
            stats.mean_abs_advantage += std::abs(adv[k]);
        }
        groups.push_back(std::move(group));
    }
    const double total_samples =
        static_cast<double>(batch.size()) * static_cast<double>(cfg.group_size);
    stats.mean_reward /= total_samples;
    stats.mean_abs_advantage /= total_samples;

    long clipped = 0, ratios = 0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (int epoch = 0; epoch < std::max(1, cfg.inner_epochs); ++epoch) {
        // gradient of the batch-mean loss w.r.t. every logit
        std::vector<std::vector<std::vector<double>>> grads(groups.size());
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const ImagePolicy& image = policy.images[groups[gi].image_index];
            grads[gi].resize(image.factors.size());
            for (std::size_t f = 0; f < image.factors.size(); ++f) {
                grads[gi][f].assign(image.factors[f].logits.size(), 0.0);
            }
        }

        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const PolicyGroup& group = groups[gi];
            ImagePolicy& image = policy.images[group.image_index];
            const ImagePolicy& ref = reference.images[group.image_index];

            std::vector<std::vector<double>> probs(image.factors.size());
            std::vector<double> lse(image.factors.size());
            for (std::size_t f = 0; f < image.factors.size(); ++f) {
                probs[f] = detail::softmax(image.factors[f].logits);
                lse[f] = detail::log_sum_exp(image.factors[f].logits);
            }

            for (const GroupSample& sample : group.samples) {
                double logp_new = 0.0;
                for (std::size_t f = 0; f < image.factors.size(); ++f) {
                    logp_new += image.factors[f].logits[static_cast<std::size_t>(sample.choices[f])] -
                                lse[f];
                }
                const double ratio = std::exp(logp_new - sample.logp_old);
                ++ratios;
                if (ratio < 1.0 - cfg.clip_eps || ratio > 1.0 + cfg.clip_eps) ++clipped;

                const double unclipped = ratio * sample.advantage;
                const double clipped_term =
                    std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * sample.advantage;
                // d/dtheta min(rho*A, clip(rho)*A): the clipped branch is
                // constant wherever it is the minimum, so gradient flows
                // only through rho*A when that side is active (ties give
                // the same derivative inside the clip band).
                if (unclipped <= clipped_term) {
                    const double coeff = sample.advantage * ratio; // * dlogp/dlogit
                    for (std::size_t f = 0; f < image.factors.size(); ++f) {
                        std::vector<double>& g = grads[gi][f];
                        const std::size_t c = static_cast<std::size_t>(sample.choices[f]);
                        for (std::size_t j = 0; j < g.size(); ++j) {
                            const double dlogp = (j == c ? 1.0 : 0.0) - probs[f][j];
                            g[j] -= coeff * dlogp; // negated surrogate
                        }
                    }
                }
            }

            // beta * KL(pi_theta || pi_ref) per image
            if (cfg.kl_beta != 0.0) {
                for (std::size_t f = 0; f < image.factors.size(); ++f) {
                    const std::vector<double>& p = probs[f];
                    double kl = 0.0;
                    const double lse_ref = detail::log_sum_exp(ref.factors[f].logits);
                    std::vector<double> delta(p.size());
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        delta[j] = (image.factors[f].logits[j] - lse[f]) -
                                   (ref.factors[f].logits[j] - lse_ref);
                        kl += p[j] * delta[j];
                    }
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        grads[gi][f][j] += cfg.kl_beta * p[j] * (delta[j] - kl);
                    }
                }
            }
        }

        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            ImagePolicy& image = policy.images[groups[gi].image_index];
            for (std::size_t f = 0; f < image.factors.size(); ++f) {
                for (std::size_t j = 0; j < grads[gi][f].size(); ++j) {
                    image.factors[f].logits[j] -= cfg.learning_rate * inv_batch * grads[gi][f][j];
                }
            }
        }
    }

    stats.kl = kl_to_reference(policy, reference);
    stats.clip_fraction = ratios > 0 ? static_cast<double>(clipped) / static_cast<double>(ratios) : 0.0;
    return stats;
}

struct TrainLogEntry {
    int step = 0;
    double mean_reward = 0.0;
    double kl = 0.0;
    double clip_frac = 0.0;
};

struct TrainResult {
    ToyPolicy policy;
    ToyPolicy reference;
    std::vector<TrainLogEntry> log;
};

/// Run total_steps of grpo_step over seeded mini-batches of size
/// min(batch_size, corpus size). Deterministic given cfg.seed; emits a
/// JSONL line per step when a stream is provided.
inline TrainResult train(const std::vector<ToyTask>& tasks, const GrpoConfig& cfg,
                         const RewardFn& reward_fn, std::ostream* jsonl = nullptr) {
    if (tasks.empty()) throw EmptyCorpus("training corpus is empty");

    TrainResult result;
    result.policy = uniform_policy_for(tasks);
    result.reference = result.policy;
    Rng rng(cfg.seed);

    const std::size_t n = tasks.size();
    const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;

    for (int step = 1; step <= cfg.total_steps; ++step) {
        std::vector<std::size_t> batch;
        if (batch_size == n) {
            batch = indices;
        } else {
            // partial Fisher-Yates: a fresh random prefix each step
            for (std::size_t i = 0; i < batch_size; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(
                                              0, static_cast<int>(n - i) - 1));
                std::swap(indices[i], indices[j]);
            }
            batch.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(batch_size));
        }

        const StepStats stats =
            grpo_step(result.policy, result.reference, batch, cfg, reward_fn, rng);
        result.log.push_back({step, stats.mean_reward, stats.kl, stats.clip_fraction});
        if (jsonl) {
            nlohmann::ordered_json line;
            line["step"] = step;
            line["mean_reward"] = stats.mean_reward;
            line["kl"] = stats.kl;
            line["clip_frac"] = stats.clip_fraction;
            *jsonl << line.dump() << "\n";
        }
    }
    return result;
}

} // namespace layerkit
