#ifndef UASR_DISENTANGLE_CONFIG_HPP
#define UASR_DISENTANGLE_CONFIG_HPP

#include <cstdint>
#include <string>

#include "uasr/core/errors.hpp"

namespace uasr {

// Defaults are desk-scale; the full-size network used 256/256/512 GRUs and a
// 256-unit critic, which these fields can be set back to.
struct Stage1Config {
    double margin = 0.01;              // lambda in the contrastive speaker loss
    std::size_t phonetic_dim = 16;
    std::size_t speaker_dim = 16;
    std::size_t decoder_hidden = 32;
    std::size_t critic_hidden = 16;
    std::size_t gru_layers = 2;
    std::size_t critic_steps = 5;      // critic updates per encoder/decoder update
    double gradient_penalty = 10.0;
    double reconstruction_weight = 1.0;
    double speaker_weight = 1.0;
    double adversarial_weight = 1.0;
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
    double learning_rate = 2e-3;
    double critic_learning_rate = 1e-3;
    double grad_clip = 10.0;
    // false trains a plain sequence autoencoder: no speaker encoder, loss or critic
    bool disentangle = true;
    std::uint64_t seed = 1;

    template <class V>
    void visit(V&& v) {
        v("margin", margin);
        v("phonetic_dim", phonetic_dim);
        v("speaker_dim", speaker_dim);
        v("decoder_hidden", decoder_hidden);
        v("critic_hidden", critic_hidden);
        v("gru_layers", gru_layers);
        v("critic_steps", critic_steps);
        v("gradient_penalty", gradient_penalty);
        v("reconstruction_weight", reconstruction_weight);
        v("speaker_weight", speaker_weight);
        v("adversarial_weight", adversarial_weight);
        v("batch_size", batch_size);
        v("epochs", epochs);
        v("learning_rate", learning_rate);
        v("critic_learning_rate", critic_learning_rate);
        v("grad_clip", grad_clip);
        v("disentangle", disentangle);
        v("seed", seed);
    }

    void validate() const {
        if (!(margin > 0.0)) throw DataError("stage1.margin must be positive");
        if (phonetic_dim == 0 || speaker_dim == 0 || decoder_hidden == 0 || critic_hidden == 0 || gru_layers == 0)
            throw DataError("stage1 layer sizes must be at least 1");
        if (critic_steps == 0 || batch_size == 0 || epochs == 0) throw DataError("stage1 counts must be at least 1");
        if (gradient_penalty < 0.0) throw DataError("stage1.gradient_penalty must be non-negative");
    }
};

} // namespace uasr

#endif
