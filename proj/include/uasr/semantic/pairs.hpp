#ifndef UASR_SEMANTIC_PAIRS_HPP
#define UASR_SEMANTIC_PAIRS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/semantic/config.hpp"

namespace uasr {

struct SequenceItem {
    std::string segment_id;
    Vector phonetic;
    std::string label;  // oracle word label; used for counting and subsampling only
};

struct SegmentSequence {
    std::string utterance_id;
    std::vector<SequenceItem> items;
};

// Occurrences are numbered consecutively across all sequences ("flat" indices).
struct Vocabulary {
    std::vector<std::string> words;             // kept word types, descending count then name
    std::vector<std::size_t> counts;
    std::map<std::string, std::size_t> index;
    std::vector<std::ptrdiff_t> occurrence_word;  // flat occurrence -> word id, -1 if below min count
    std::vector<std::vector<std::size_t>> occurrences;  // word id -> flat occurrences
    std::size_t total = 0;                       // kept occurrences

    double frequency(std::size_t word) const { return static_cast<double>(counts[word]) / static_cast<double>(total); }
};

inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& label_sequences, std::size_t min_count) {
    std::map<std::string, std::size_t> raw;
    for (const auto& seq : label_sequences)
        for (const auto& l : seq) ++raw[l];
    Vocabulary v;
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [w, c] : raw)
        if (c >= min_count) kept.emplace_back(w, c);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [w, c] : kept) {
        v.index.emplace(w, v.words.size());
        v.words.push_back(w);
        v.counts.push_back(c);
        v.total += c;
    }
    v.occurrences.resize(v.words.size());
    for (const auto& seq : label_sequences) {
        for (const auto& l : seq) {
            auto it = v.index.find(l);
            const std::ptrdiff_t id = it == v.index.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
            if (id >= 0) v.occurrences[static_cast<std::size_t>(id)].push_back(v.occurrence_word.size());
            v.occurrence_word.push_back(id);
        }
    }
    return v;
}

// Probability of dropping one occurrence of a word with relative frequency f.
inline double discard_probability(double subsample, double frequency) {
    if (frequency <= 0.0) return 0.0;
    return std::max(0.0, 1.0 - std::sqrt(subsample / frequency));
}

// Draws negative occurrences: a word with probability proportional to count^0.75, then
// one of its occurrences uniformly.
class NegativeSampler {
public:
    NegativeSampler() = default;
    explicit NegativeSampler(const Vocabulary& vocab) : occurrences_(&vocab.occurrences) {
        Vector w(vocab.counts.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(static_cast<double>(vocab.counts[i]), 0.75);
        if (!w.empty()) words_ = DiscreteSampler(w);
    }

    std::size_t word_count() const { return words_.size(); }
    double word_probability(std::size_t word) const { return words_.probability(word); }

    std::size_t draw_word(Rng& rng) const { return words_(rng); }

    std::size_t draw_occurrence(Rng& rng, std::size_t word) const {
        const auto& occ = (*occurrences_)[word];
        return occ[rng.index(occ.size())];
    }

private:
    const std::vector<std::vector<std::size_t>>* occurrences_ = nullptr;
    DiscreteSampler words_;
};

struct PairSet {
    std::vector<std::pair<std::size_t, std::size_t>> positives;  // (center, context) flat occurrences
    std::size_t surviving = 0;  // occurrences left after min-count filtering and subsampling
};

// Positive pairs for one pass: drop words under min count, subsample occurrences, then
// pair every survivor with every other survivor at most `window` positions away in the
// same sequence (positions counted after dropping). Windows never cross sequences.
inline PairSet build_pairs(const std::vector<std::vector<std::string>>& label_sequences, const Vocabulary& vocab,
                           const SemanticConfig& cfg, Rng& rng) {
    if (vocab.words.empty()) throw EmptyCorpusError("no word type reaches the minimum count of " + std::to_string(cfg.min_count));
    Vector discard(vocab.words.size());
    for (std::size_t w = 0; w < discard.size(); ++w) discard[w] = discard_probability(cfg.subsample, vocab.frequency(w));

    PairSet out;
    std::size_t flat = 0;
    std::vector<std::size_t> kept;
    for (const auto& seq : label_sequences) {
        kept.clear();
        for (std::size_t p = 0; p < seq.size(); ++p, ++flat) {
            const std::ptrdiff_t w = vocab.occurrence_word[flat];
            if (w < 0) continue;
            const double d = discard[static_cast<std::size_t>(w)];
            if (d > 0.0 && rng.uniform() < d) continue;
            kept.push_back(flat);
        }
        out.surviving += kept.size();
        for (std::size_t a = 0; a < kept.size(); ++a) {
            const std::size_t lo = a > cfg.window ? a - cfg.window : 0;
            const std::size_t hi = std::min(kept.size() - 1, a + cfg.window);
            for (std::size_t b = lo; b <= hi; ++b)
                if (b != a) out.positives.emplace_back(kept[a], kept[b]);
        }
    }
    return out;
}

inline std::vector<std::vector<std::string>> label_sequences(const std::vector<SegmentSequence>& sequences) {
    std::vector<std::vector<std::string>> out;
    out.reserve(sequences.size());
    for (const auto& s : sequences) {
        std::vector<std::string> labels;
        labels.reserve(s.items.size());
        for (const auto& it : s.items) labels.push_back(it.label);
        out.push_back(std::move(labels));
    }
    return out;
}

} // namespace uasr

#endif
