#ifndef UASR_SEMANTIC_CONFIG_HPP
#define UASR_SEMANTIC_CONFIG_HPP

#include <cstdint>

#include "uasr/core/errors.hpp"

namespace uasr {

// Skip-gram settings shared by the audio (continuous input) and text (one-hot) trainers.
// embedding_dim and hidden default to desk scale (full size: 128 and 256).
struct SemanticConfig {
    std::size_t window = 5;
    std::size_t negatives = 5;
    double subsample = 0.001;  // t in the discard rule 1 - sqrt(t / f); t >= 1 never discards
    std::size_t min_count = 5;
    std::size_t embedding_dim = 8;
    std::size_t hidden = 16;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;  // positive pairs per update
    double learning_rate = 1e-3;
    std::uint64_t seed = 2;

    template <class V>
    void visit(V&& v) {
        v("window", window);
        v("negatives", negatives);
        v("subsample", subsample);
        v("min_count", min_count);
        v("embedding_dim", embedding_dim);
        v("hidden", hidden);
        v("epochs", epochs);
        v("batch_size", batch_size);
        v("learning_rate", learning_rate);
        v("seed", seed);
    }

    void validate() const {
        if (window == 0) throw DataError("semantic.window must be at least 1");
        if (negatives == 0) throw DataError("semantic.negatives must be at least 1");
        if (!(subsample > 0.0)) throw DataError("semantic.subsample must be positive");
        if (embedding_dim == 0 || hidden == 0 || epochs == 0 || batch_size == 0)
            throw DataError("semantic sizes and counts must be at least 1");
    }
};

} // namespace uasr

#endif
