#ifndef UASR_SEMANTIC_TRAIN_HPP
#define UASR_SEMANTIC_TRAIN_HPP

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/optimizer.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/data/corpus.hpp"
#include "uasr/disentangle/segment.hpp"
#include "uasr/semantic/config.hpp"
#include "uasr/semantic/encoders.hpp"
#include "uasr/semantic/pairs.hpp"
#include "uasr/semantic/table.hpp"

namespace uasr {

// One segment's semantic embedding v_w with its word label.
struct SegmentEmbedding {
    std::string segment_id;
    std::string label;
    Vector embedding;
};

// step_loss: mean loss per positive pair (with its negatives) for each update.
// epoch_loss: mean of step_loss over the epoch.
struct SemanticHistory {
    std::vector<double> step_loss;
    std::vector<std::size_t> step_epoch;  // epoch (1-based) of each step
    std::vector<double> epoch_loss;
};

struct SemanticResult {
    SemanticEncoderPair encoders;
    std::vector<SegmentEmbedding> embeddings;  // every segment whose word reaches the minimum count
    SemanticHistory history;
    std::vector<std::string> warnings;
};

// Builds one sequence per utterance from the manifest and the stage-1 codes
// (codes[k] belongs to manifest.segments[k]). Every segment needs a word label.
inline std::vector<SegmentSequence> build_sequences(const CorpusManifest& manifest,
                                                    std::span<const DisentangledCodes> codes) {
    if (codes.size() != manifest.segments.size()) {
        throw ShapeError("build_sequences: " + std::to_string(codes.size()) + " codes for " +
                         std::to_string(manifest.segments.size()) + " segments");
    }
    const auto index = manifest.segment_index();
    std::vector<SegmentSequence> out;
    out.reserve(manifest.utterances.size());
    for (const auto& u : manifest.utterances) {
        SegmentSequence seq{u.utterance_id, {}};
        for (const auto& id : u.segment_ids) {
            auto it = index.find(id);
            if (it == index.end()) throw DataError("utterance '" + u.utterance_id + "' lists unknown segment '" + id + "'");
            const auto& seg = manifest.segments[it->second];
            if (!seg.word) throw DataError("segment '" + id + "' has no word label; labels drive subsampling and averaging");
            seq.items.push_back({id, codes[it->second].phonetic, *seg.word});
        }
        out.push_back(std::move(seq));
    }
    return out;
}

namespace detail {

// Draws a negative for a positive whose context has word `avoid`; redraws while the
// drawn word equals it. Needs at least two word types.
inline std::size_t draw_negative_word(const NegativeSampler& sampler, std::size_t avoid, Rng& rng) {
    for (;;) {
        const std::size_t w = sampler.draw_word(rng);
        if (w != avoid) return w;
    }
}

inline void finish_epoch(SemanticHistory& h, std::size_t first_step, std::size_t epoch) {
    const std::size_t steps = h.step_loss.size() - first_step;
    double sum = 0.0;
    for (std::size_t s = first_step; s < h.step_loss.size(); ++s) sum += h.step_loss[s];
    const double mean = steps ? sum / static_cast<double>(steps) : 0.0;
    if (!std::isfinite(mean)) throw DivergenceError("semantic loss became non-finite in epoch " + std::to_string(epoch));
    h.epoch_loss.push_back(mean);
}

} // namespace detail

// Trains E_sem and E_con on the skip-gram loss with Adam. Subsampling is redrawn every epoch;
// each positive pair gets `negatives` negatives drawn over word types by count^0.75.
inline SemanticResult train_semantic(const std::vector<SegmentSequence>& sequences, const SemanticConfig& cfg,
                                     const std::function<void(std::size_t, double)>& on_epoch = {}) {
    cfg.validate();
    std::vector<Vector> inputs;
    std::vector<const SequenceItem*> items;
    for (const auto& s : sequences)
        for (const auto& it : s.items) {
            inputs.push_back(it.phonetic);
            items.push_back(&it);
        }
    if (inputs.empty()) throw EmptyCorpusError("semantic corpus has no segments");
    const std::size_t dim = inputs.front().size();
    for (const auto* it : items) {
        if (it->phonetic.size() != dim) throw ShapeError("segment '" + it->segment_id + "' has a phonetic vector of a different dimension");
        if (it->label.empty()) throw DataError("segment '" + it->segment_id + "' has an empty word label");
    }

    const auto labels = label_sequences(sequences);
    const Vocabulary vocab = build_vocabulary(labels, cfg.min_count);
    if (vocab.words.empty()) throw EmptyCorpusError("no word type reaches the minimum count of " + std::to_string(cfg.min_count));

    Rng root(cfg.seed);
    Rng init_rng = root.split("semantic/init");
    Rng pair_rng = root.split("semantic/subsample");
    Rng order_rng = root.split("semantic/order");
    Rng neg_rng = root.split("semantic/negatives");

    SemanticResult result;
    result.encoders = SemanticEncoderPair::create(dim, cfg.hidden, cfg.embedding_dim, init_rng);
    SemanticEncoderPair& enc = result.encoders;

    if (vocab.words.size() < 2) {
        result.warnings.push_back("only one word type reaches the minimum count; no valid negatives, training skipped");
    } else {
        const NegativeSampler sampler(vocab);
        SemanticEncoderPair grad = enc.zeros_like();
        auto params = enc.params();
        auto grads = grad.params();
        nn::ParamOptimizer opt(OptimizerSettings::adam(cfg.learning_rate));
        std::vector<IndexPair> batch_pos, batch_neg;
        bool warned_empty = false;

        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            PairSet ps = build_pairs(labels, vocab, cfg, pair_rng);
            if (ps.positives.empty() && !warned_empty) {
                result.warnings.push_back("an epoch produced no positive pairs after subsampling");
                warned_empty = true;
            }
            order_rng.shuffle(ps.positives);
            const std::size_t first_step = result.history.step_loss.size();
            for (std::size_t start = 0; start < ps.positives.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(ps.positives.size(), start + cfg.batch_size);
                batch_pos.assign(ps.positives.begin() + static_cast<std::ptrdiff_t>(start),
                                 ps.positives.begin() + static_cast<std::ptrdiff_t>(end));
                batch_neg.clear();
                for (const auto& [center, context] : batch_pos) {
                    const auto avoid = static_cast<std::size_t>(vocab.occurrence_word[context]);
                    for (std::size_t k = 0; k < cfg.negatives; ++k) {
                        const std::size_t w = detail::draw_negative_word(sampler, avoid, neg_rng);
                        batch_neg.emplace_back(center, sampler.draw_occurrence(neg_rng, w));
                    }
                }
                const double scale = 1.0 / static_cast<double>(batch_pos.size());
                nn::zero_all(grads);
                const double loss = loss_semantic(inputs, batch_pos, batch_neg, enc, &grad, scale) * scale;
                if (!std::isfinite(loss)) {
                    throw DivergenceError("semantic loss became non-finite in epoch " + std::to_string(epoch));
                }
                opt.step(params, grads);
                result.history.step_loss.push_back(loss);
                result.history.step_epoch.push_back(epoch);
            }
            detail::finish_epoch(result.history, first_step, epoch);
            if (on_epoch) on_epoch(epoch, result.history.epoch_loss.back());
        }
    }

    for (std::size_t f = 0; f < items.size(); ++f) {
        if (vocab.occurrence_word[f] < 0) continue;
        result.embeddings.push_back({items[f]->segment_id, items[f]->label, enc.embed(inputs[f])});
    }
    return result;
}

// Per-word mean of segment embeddings, rows ordered by descending count then token.
inline WordEmbeddingTable average_by_label(std::span<const SegmentEmbedding> embeddings) {
    if (embeddings.empty()) return WordEmbeddingTable(0);
    const std::size_t dim = embeddings.front().embedding.size();
    std::map<std::string, std::pair<Vector, std::size_t>> sums;
    for (const auto& e : embeddings) {
        if (e.embedding.size() != dim) throw ShapeError("segment '" + e.segment_id + "' embedding has a different dimension");
        auto& [sum, count] = sums.try_emplace(e.label, Vector(dim, 0.0), 0).first->second;
        axpy(1.0, e.embedding, sum);
        ++count;
    }
    WordEmbeddingTable table(dim);
    for (auto& [label, entry] : sums) {
        auto& [sum, count] = entry;
        for (double& v : sum) v /= static_cast<double>(count);
        table.add(label, sum, count);
    }
    return sorted_by_frequency(table);
}

} // namespace uasr

#endif
