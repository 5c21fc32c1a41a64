#ifndef UASR_DISENTANGLE_TRAIN_HPP
#define UASR_DISENTANGLE_TRAIN_HPP

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/optimizer.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/disentangle/losses.hpp"
#include "uasr/disentangle/model.hpp"

namespace uasr {

// Per-epoch means: reconstruction per segment, speaker and critic terms per pair.
struct Stage1Epoch {
    std::size_t epoch = 0;
    double reconstruction = 0.0;
    double speaker = 0.0;
    double critic = 0.0;
    double combined = 0.0;
};

struct Stage1Result {
    Stage1Model model;
    std::vector<Stage1Epoch> history;
    std::vector<std::string> warnings;
};

inline void require_consistent_corpus(std::span<const AcousticSegment> corpus) {
    if (corpus.empty()) throw EmptyCorpusError("stage-1 corpus has no segments");
    const std::size_t dim = corpus.front().feature_dim();
    for (const auto& s : corpus) {
        if (s.length() == 0) throw ShapeError("segment '" + s.segment_id + "' has no frames");
        if (s.feature_dim() != dim) {
            throw ShapeError("segment '" + s.segment_id + "' has feature dim " + std::to_string(s.feature_dim()) +
                             ", expected " + std::to_string(dim));
        }
    }
}

// Alternates critic updates (maximise Ld with a gradient penalty) and encoder/decoder
// updates (minimise Lr + Ls + Ld), both with Adam.
inline Stage1Result train_stage1(std::span<const AcousticSegment> corpus, const Stage1Config& cfg,
                                 const std::function<void(const Stage1Epoch&)>& on_epoch = {}) {
    cfg.validate();
    require_consistent_corpus(corpus);

    Stage1Result result;
    Rng root(cfg.seed);
    Rng init_rng = root.split("stage1/init");
    Rng order_rng = root.split("stage1/order");
    Rng pair_rng = root.split("stage1/pairs");
    Rng mix_rng = root.split("stage1/mix");

    result.model = Stage1Model::create(cfg, corpus.front().feature_dim(), init_rng);
    Stage1Model& model = result.model;

    bool contrastive = cfg.disentangle;
    if (contrastive) {
        std::map<std::string, std::size_t> per_speaker;
        for (const auto& s : corpus) ++per_speaker[s.speaker_key()];
        std::size_t with_two = 0;
        for (const auto& [_, c] : per_speaker) with_two += c >= 2 ? 1 : 0;
        if (per_speaker.size() < 2 || with_two < 2) {
            result.warnings.push_back("corpus needs at least 2 speakers with 2+ segments each; "
                                      "speaker and adversarial terms dropped");
            contrastive = false;
        }
    }

    nn::ParamOptimizer gen_opt(OptimizerSettings::adam(cfg.learning_rate));
    nn::ParamOptimizer critic_opt(OptimizerSettings::adam(cfg.critic_learning_rate));
    Stage1Model grad = model.zeros_like();
    auto gen_params = model.generator_params();
    auto gen_grads = grad.generator_params();
    auto critic_params = model.critic_params();
    auto critic_grads = grad.critic_params();

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<AcousticSegment> batch;
    std::vector<std::string> speakers;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        Stage1Epoch rec;
        rec.epoch = epoch;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            speakers.clear();
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(corpus[order[k]]);
                speakers.push_back(corpus[order[k]].speaker_key());
            }
            const std::size_t n = batch.size();

            std::vector<SegmentPair> pairs;
            if (contrastive) pairs = sample_balanced_pairs(speakers, cfg.batch_size, pair_rng);
            const std::size_t per_kind = pairs.size() / 2;

            if (per_kind > 0) {
                std::vector<Vector> phonetic(n);
                for (std::size_t i = 0; i < n; ++i) phonetic[i] = model.phonetic_encoder.forward(batch[i].frames).final_hidden();
                const double cw = cfg.adversarial_weight / static_cast<double>(per_kind);
                const double pw = cfg.gradient_penalty / static_cast<double>(per_kind);
                Vector mix(per_kind);
                for (std::size_t step = 0; step < cfg.critic_steps; ++step) {
                    for (double& m : mix) m = mix_rng.uniform();
                    nn::zero_all(critic_grads);
                    critic_objective(model.critic, phonetic, pairs, mix, cw, pw, &grad.critic);
                    nn::clip_global_norm(critic_grads, cfg.grad_clip);
                    critic_opt.step(critic_params, critic_grads);
                }
            }

            GeneratorWeights w;
            w.reconstruction = cfg.reconstruction_weight / static_cast<double>(n);
            w.speaker = per_kind > 0 ? cfg.speaker_weight / static_cast<double>(per_kind) : 0.0;
            w.adversarial = per_kind > 0 ? cfg.adversarial_weight / static_cast<double>(per_kind) : 0.0;
            nn::zero_all(gen_grads);
            const GeneratorLoss loss = generator_objective(model, batch, pairs, w, &grad);
            if (!std::isfinite(loss.total)) {
                throw DivergenceError("stage-1 loss became non-finite in epoch " + std::to_string(epoch));
            }
            nn::clip_global_norm(gen_grads, cfg.grad_clip);
            gen_opt.step(gen_params, gen_grads);

            rec.reconstruction += loss.reconstruction / static_cast<double>(n);
            if (per_kind > 0) {
                rec.speaker += loss.speaker / static_cast<double>(per_kind);
                rec.critic += loss.critic / static_cast<double>(per_kind);
            }
            rec.combined += loss.total;
            ++batches;
        }
        const double nb = static_cast<double>(batches);
        rec.reconstruction /= nb;
        rec.speaker /= nb;
        rec.critic /= nb;
        rec.combined /= nb;
        if (!std::isfinite(rec.combined)) {
            throw DivergenceError("stage-1 loss became non-finite in epoch " + std::to_string(epoch));
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

inline std::vector<DisentangledCodes> encode_corpus(const Stage1Model& model, std::span<const AcousticSegment> corpus) {
    std::vector<DisentangledCodes> out;
    out.reserve(corpus.size());
    for (const auto& s : corpus) out.push_back(model.encode(s));
    return out;
}

} // namespace uasr

#endif
