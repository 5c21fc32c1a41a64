#ifndef UASR_DATA_SYNTHETIC_HPP
#define UASR_DATA_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/data/corpus.hpp"

namespace uasr {

// Synthetic read-speech corpus.
//
// Words sit at evenly spaced points on a ring. The next word is drawn from a bigram
// table whose entries decay with ring distance (width `context_width`), scaled by a
// Zipf popularity and a log-normal jitter, so nearby words share contexts. Each word
// type has a base duration and `keyframes` random prototype vectors; a realisation of
// T frames (base duration +- duration_jitter) linearly
// interpolates them, adds the speaker's fixed offset to every frame and adds
// i.i.d. Gaussian noise.
struct SyntheticSpec {
    std::size_t vocabulary = 20;
    std::size_t speakers = 4;
    std::size_t utterances = 200;
    // when non-zero, utterances are generated until exactly this many segments exist
    std::size_t segments = 0;
    std::size_t min_tokens = 5;
    std::size_t max_tokens = 15;
    std::size_t min_frames = 4;  // range of a word type's base duration
    std::size_t max_frames = 8;
    std::size_t duration_jitter = 1;  // realisations vary by up to this many frames
    std::size_t feature_dim = 39;
    std::size_t keyframes = 3;
    double noise = 0.1;           // per-value standard deviation
    double speaker_offset = 1.0;  // per-dimension standard deviation of a speaker's offset
    double context_width = 1.5;   // ring-distance scale of the bigram kernel
    double zipf_exponent = 0.5;
    double bigram_jitter = 0.3;
    std::uint64_t seed = 7;

    template <class V>
    void visit(V&& v) {
        v("vocabulary", vocabulary);
        v("speakers", speakers);
        v("utterances", utterances);
        v("segments", segments);
        v("min_tokens", min_tokens);
        v("max_tokens", max_tokens);
        v("min_frames", min_frames);
        v("max_frames", max_frames);
        v("duration_jitter", duration_jitter);
        v("feature_dim", feature_dim);
        v("keyframes", keyframes);
        v("noise", noise);
        v("speaker_offset", speaker_offset);
        v("context_width", context_width);
        v("zipf_exponent", zipf_exponent);
        v("bigram_jitter", bigram_jitter);
        v("seed", seed);
    }

    void validate() const {
        if (vocabulary == 0 || speakers == 0 || feature_dim == 0 || keyframes == 0)
            throw DataError("synthetic spec: counts must be at least 1");
        if (utterances == 0 && segments == 0) throw DataError("synthetic spec: no utterances requested");
        if (min_tokens == 0 || min_tokens > max_tokens) throw DataError("synthetic spec: bad token range");
        if (min_frames == 0 || min_frames > max_frames) throw DataError("synthetic spec: bad frame range");
        if (noise < 0.0 || speaker_offset < 0.0 || context_width <= 0.0) throw DataError("synthetic spec: bad scale");
    }
};

struct SyntheticCorpus {
    CorpusManifest manifest;
    std::vector<std::string> words;
    Matrix bigram;        // row-stochastic, vocabulary x vocabulary
    Vector stationary;    // stationary distribution of the bigram chain
    Matrix speaker_offsets;                 // speakers x feature_dim
    std::vector<std::vector<Vector>> prototypes;  // word -> keyframes
};

inline std::string synthetic_word(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%03zu", i);
    return buf;
}

inline Matrix synthetic_bigram(const SyntheticSpec& spec, Rng& rng) {
    const std::size_t v = spec.vocabulary;
    // popularity rank independent of ring position
    std::vector<std::size_t> rank(v);
    for (std::size_t i = 0; i < v; ++i) rank[i] = i;
    rng.shuffle(rank);
    Vector popularity(v);
    for (std::size_t i = 0; i < v; ++i) popularity[i] = 1.0 / std::pow(static_cast<double>(rank[i] + 1), spec.zipf_exponent);

    Matrix table(v, v);
    for (std::size_t i = 0; i < v; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < v; ++j) {
            const double raw = std::abs(static_cast<double>(i) - static_cast<double>(j));
            const double ring = std::min(raw, static_cast<double>(v) - raw);
            const double kernel = std::exp(-ring * ring / (2.0 * spec.context_width * spec.context_width));
            const double w = popularity[j] * kernel * std::exp(spec.bigram_jitter * rng.normal());
            table(i, j) = w;
            total += w;
        }
        for (std::size_t j = 0; j < v; ++j) table(i, j) /= total;
    }
    return table;
}

inline Vector stationary_distribution(const Matrix& table, int iterations = 10000, double tol = 1e-15) {
    const std::size_t v = table.rows();
    Vector pi(v, 1.0 / static_cast<double>(v)), next(v);
    for (int it = 0; it < iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < v; ++i) axpy(pi[i], table.row(i), next);
        double delta = 0.0;
        for (std::size_t i = 0; i < v; ++i) delta += std::abs(next[i] - pi[i]);
        pi.swap(next);
        if (delta < tol) break;
    }
    return pi;
}

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng root(spec.seed);
    Rng table_rng = root.split("synthetic/bigram");
    Rng proto_rng = root.split("synthetic/prototypes");
    Rng speaker_rng = root.split("synthetic/speakers");
    Rng text_rng = root.split("synthetic/text");
    Rng audio_rng = root.split("synthetic/audio");

    SyntheticCorpus out;
    for (std::size_t i = 0; i < spec.vocabulary; ++i) out.words.push_back(synthetic_word(i));
    out.bigram = synthetic_bigram(spec, table_rng);
    out.stationary = stationary_distribution(out.bigram);

    std::vector<std::size_t> base_frames(spec.vocabulary);
    for (auto& f : base_frames) f = proto_rng.range(spec.min_frames, spec.max_frames);
    out.prototypes.resize(spec.vocabulary);
    for (auto& p : out.prototypes) {
        p.resize(spec.keyframes);
        for (auto& k : p) {
            k.resize(spec.feature_dim);
            for (double& x : k) x = proto_rng.normal();
        }
    }
    out.speaker_offsets = Matrix(spec.speakers, spec.feature_dim);
    for (double& x : out.speaker_offsets.values()) x = spec.speaker_offset * speaker_rng.normal();

    const DiscreteSampler start(out.stationary);
    std::vector<DiscreteSampler> next;
    for (std::size_t i = 0; i < spec.vocabulary; ++i) next.emplace_back(out.bigram.row(i));

    std::vector<AcousticSegment> segments;
    std::size_t utt = 0;
    auto done = [&] {
        return spec.segments > 0 ? segments.size() >= spec.segments : utt >= spec.utterances;
    };
    while (!done()) {
        char utt_id[32];
        std::snprintf(utt_id, sizeof utt_id, "utt%05zu", utt + 1);
        const std::size_t speaker = text_rng.index(spec.speakers);
        char spk_id[32];
        std::snprintf(spk_id, sizeof spk_id, "spk%02zu", speaker + 1);
        std::size_t length = text_rng.range(spec.min_tokens, spec.max_tokens);
        if (spec.segments > 0) length = std::min(length, spec.segments - segments.size());

        std::size_t word = start(text_rng);
        for (std::size_t pos = 0; pos < length; ++pos) {
            if (pos > 0) word = next[word](text_rng);
            std::size_t frames = base_frames[word];
            if (spec.duration_jitter > 0) {
                const std::size_t lo = frames > spec.duration_jitter ? frames - spec.duration_jitter : 1;
                frames = audio_rng.range(lo, frames + spec.duration_jitter);
            }
            AcousticSegment seg;
            char pos_id[24];
            std::snprintf(pos_id, sizeof pos_id, "-%03zu", pos + 1);
            seg.segment_id = std::string(utt_id) + pos_id;
            seg.utterance_id = utt_id;
            seg.speaker_id = spk_id;
            seg.word = out.words[word];
            seg.frames = Matrix(frames, spec.feature_dim);
            const auto& proto = out.prototypes[word];
            for (std::size_t t = 0; t < frames; ++t) {
                // position along the keyframe path
                const double s = frames == 1 ? 0.0
                                             : static_cast<double>(t) / static_cast<double>(frames - 1) *
                                                   static_cast<double>(proto.size() - 1);
                const auto k0 = static_cast<std::size_t>(std::floor(s));
                const std::size_t k1 = std::min(k0 + 1, proto.size() - 1);
                const double f = s - static_cast<double>(k0);
                auto row = seg.frames.row(t);
                for (std::size_t d = 0; d < spec.feature_dim; ++d) {
                    row[d] = (1.0 - f) * proto[k0][d] + f * proto[k1][d] + out.speaker_offsets(speaker, d);
                    if (spec.noise > 0.0) row[d] += spec.noise * audio_rng.normal();
                }
            }
            segments.push_back(std::move(seg));
        }
        ++utt;
    }
    out.manifest = manifest_from_segments(std::move(segments));
    return out;
}

} // namespace uasr

#endif
