#ifndef UASR_SEMANTIC_TEXT_SKIPGRAM_HPP
#define UASR_SEMANTIC_TEXT_SKIPGRAM_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/optimizer.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/nn/params.hpp"
#include "uasr/semantic/config.hpp"
#include "uasr/semantic/pairs.hpp"
#include "uasr/semantic/table.hpp"
#include "uasr/semantic/train.hpp"

namespace uasr {

struct TextSkipgramResult {
    WordEmbeddingTable table;  // input vectors, rows by descending count
    Matrix input_vectors;      // vocabulary order (descending count)
    Matrix context_vectors;
    std::vector<std::string> words;
    SemanticHistory history;
    std::vector<std::string> warnings;
};

// Skip-gram loss over word ids for the given tables; accumulates scale * gradient.
inline double loss_text_skipgram(const Matrix& input, const Matrix& context, std::span<const IndexPair> positives,
                                 std::span<const IndexPair> negatives, Matrix* d_input = nullptr,
                                 Matrix* d_context = nullptr, double scale = 1.0) {
    if (input.cols() != context.cols()) throw ShapeError("loss_text_skipgram: input and context tables differ in width");
    if ((d_input && (d_input->rows() != input.rows() || d_input->cols() != input.cols())) ||
        (d_context && (d_context->rows() != context.rows() || d_context->cols() != context.cols())))
        throw ShapeError("loss_text_skipgram: gradient tables do not match the parameter tables");
    double total = 0.0;
    auto term = [&](const IndexPair& p, double sign) {
        if (p.first >= input.rows() || p.second >= context.rows())
            throw ShapeError("loss_text_skipgram: pair index out of range");
        const auto w = input.row(p.first);
        const auto c = context.row(p.second);
        const double s = dot(w, c);
        total += nn::neg_log_sigmoid(sign * s);
        if (d_input && d_context) {
            const double g = -sign * nn::sigmoid(-sign * s) * scale;
            axpy(g, c, d_input->row(p.first));
            axpy(g, w, d_context->row(p.second));
        }
    };
    for (const auto& p : positives) term(p, 1.0);
    for (const auto& p : negatives) term(p, -1.0);
    return total;
}

// One-hot skip-gram with negative sampling: every word type owns a trainable input and
// context vector. Windowing, subsampling and negative sampling follow train_semantic.
inline TextSkipgramResult train_text_skipgram(const std::vector<std::vector<std::string>>& sequences,
                                              const SemanticConfig& cfg,
                                              const std::function<void(std::size_t, double)>& on_epoch = {}) {
    cfg.validate();
    std::size_t tokens = 0;
    for (const auto& s : sequences) tokens += s.size();
    if (tokens == 0) throw EmptyCorpusError("text corpus has no tokens");
    const Vocabulary vocab = build_vocabulary(sequences, cfg.min_count);
    if (vocab.words.empty()) throw EmptyCorpusError("no word type reaches the minimum count of " + std::to_string(cfg.min_count));

    Rng root(cfg.seed);
    Rng init_rng = root.split("text/init");
    Rng pair_rng = root.split("text/subsample");
    Rng order_rng = root.split("text/order");
    Rng neg_rng = root.split("text/negatives");

    const std::size_t V = vocab.words.size();
    const std::size_t d = cfg.embedding_dim;
    TextSkipgramResult result;
    result.words = vocab.words;
    result.input_vectors = Matrix(V, d);
    result.context_vectors = Matrix(V, d);
    nn::init_uniform(result.input_vectors, 0.5 / static_cast<double>(d), init_rng);

    if (V < 2) {
        result.warnings.push_back("vocabulary has a single word type; no valid negatives, training skipped");
    } else {
        const NegativeSampler sampler(vocab);
        Matrix d_in(V, d), d_ctx(V, d);
        OptimizerState opt_in(OptimizerSettings::adam(cfg.learning_rate), "text.input");
        OptimizerState opt_ctx(OptimizerSettings::adam(cfg.learning_rate), "text.context");
        std::vector<IndexPair> batch_pos, batch_neg;
        bool warned_empty = false;

        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            PairSet ps = build_pairs(sequences, vocab, cfg, pair_rng);
            if (ps.positives.empty() && !warned_empty) {
                result.warnings.push_back("an epoch produced no positive pairs after subsampling");
                warned_empty = true;
            }
            order_rng.shuffle(ps.positives);
            const std::size_t first_step = result.history.step_loss.size();
            for (std::size_t start = 0; start < ps.positives.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(ps.positives.size(), start + cfg.batch_size);
                batch_pos.clear();
                batch_neg.clear();
                for (std::size_t k = start; k < end; ++k) {
                    const auto center = static_cast<std::size_t>(vocab.occurrence_word[ps.positives[k].first]);
                    const auto context = static_cast<std::size_t>(vocab.occurrence_word[ps.positives[k].second]);
                    batch_pos.emplace_back(center, context);
                    for (std::size_t n = 0; n < cfg.negatives; ++n)
                        batch_neg.emplace_back(center, detail::draw_negative_word(sampler, context, neg_rng));
                }
                const double scale = 1.0 / static_cast<double>(batch_pos.size());
                d_in.fill(0.0);
                d_ctx.fill(0.0);
                const double loss = loss_text_skipgram(result.input_vectors, result.context_vectors, batch_pos, batch_neg,
                                                       &d_in, &d_ctx, scale) * scale;
                if (!std::isfinite(loss)) {
                    throw DivergenceError("text skip-gram loss became non-finite in epoch " + std::to_string(epoch));
                }
                opt_in.step(result.input_vectors.values(), d_in.values());
                opt_ctx.step(result.context_vectors.values(), d_ctx.values());
                result.history.step_loss.push_back(loss);
                result.history.step_epoch.push_back(epoch);
            }
            detail::finish_epoch(result.history, first_step, epoch);
            if (on_epoch) on_epoch(epoch, result.history.epoch_loss.back());
        }
    }

    result.table = WordEmbeddingTable(d);
    for (std::size_t w = 0; w < V; ++w) result.table.add(vocab.words[w], result.input_vectors.row(w), vocab.counts[w]);
    result.table = sorted_by_frequency(result.table);
    return result;
}

} // namespace uasr

#endif
