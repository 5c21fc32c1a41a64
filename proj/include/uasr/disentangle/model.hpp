#ifndef UASR_DISENTANGLE_MODEL_HPP
#define UASR_DISENTANGLE_MODEL_HPP

#include <string>
#include <vector>

#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/disentangle/config.hpp"
#include "uasr/disentangle/segment.hpp"
#include "uasr/nn/gru.hpp"
#include "uasr/nn/linear.hpp"
#include "uasr/nn/mlp.hpp"

namespace uasr {

// Sequence decoder conditioned on the concatenated code [v_p; v_s]: the code is
// mapped linearly to every layer's initial state and also fed as the input at
// every step. Frames are read out linearly from the top layer.
struct SequenceDecoder {
    nn::GruStack gru;
    nn::Linear init;     // code -> layers * hidden
    nn::Linear readout;  // hidden -> feature dim

    std::size_t code_dim() const { return gru.input_dim(); }
    std::size_t feature_dim() const { return readout.out_dim(); }

    SequenceDecoder zeros_like() const { return {gru.zeros_like(), init.zeros_like(), readout.zeros_like()}; }

    nn::ParamList params(const std::string& prefix) {
        auto p = gru.params(prefix + ".gru");
        for (auto& x : init.params(prefix + ".init")) p.push_back(x);
        for (auto& x : readout.params(prefix + ".readout")) p.push_back(x);
        return p;
    }

    struct Trace {
        Vector code;
        nn::GruTrace gru;
        Matrix frames;
    };

    Trace forward(std::span<const double> code, std::size_t t_target) const {
        if (t_target == 0) throw ShapeError("decode: target length must be at least 1");
        if (code.size() != code_dim()) {
            throw ShapeError("decode: code of length " + std::to_string(code.size()) + ", decoder expects " +
                             std::to_string(code_dim()));
        }
        Trace t;
        t.code.assign(code.begin(), code.end());
        const Vector flat_init = init.forward(code);
        const std::size_t hidden = gru.hidden_dim();
        std::vector<Vector> initial(gru.depth());
        for (std::size_t l = 0; l < gru.depth(); ++l)
            initial[l].assign(flat_init.begin() + static_cast<std::ptrdiff_t>(l * hidden),
                              flat_init.begin() + static_cast<std::ptrdiff_t>((l + 1) * hidden));
        Matrix inputs(t_target, code.size());
        for (std::size_t s = 0; s < t_target; ++s) std::copy(code.begin(), code.end(), inputs.row(s).begin());
        t.gru = gru.forward(inputs, initial);
        t.frames = Matrix(t_target, feature_dim());
        const Matrix& h = t.gru.outputs();
        for (std::size_t s = 0; s < t_target; ++s) readout.forward(h.row(s), t.frames.row(s));
        return t;
    }

    // Returns d loss / d code and accumulates parameter gradients.
    Vector backward(const Trace& t, const Matrix& d_frames, SequenceDecoder& grad) const {
        const std::size_t steps = t.frames.rows();
        const Matrix& h = t.gru.outputs();
        Matrix d_h(steps, gru.hidden_dim());
        for (std::size_t s = 0; s < steps; ++s) readout.backward(h.row(s), d_frames.row(s), grad.readout, d_h.row(s));
        auto back = gru.backward(t.gru, d_h, {}, grad.gru);
        Vector d_code(code_dim(), 0.0);
        for (std::size_t s = 0; s < steps; ++s) axpy(1.0, back.d_frames.row(s), d_code);
        Vector d_init;
        d_init.reserve(init.out_dim());
        for (const auto& d : back.d_initial) d_init.insert(d_init.end(), d.begin(), d.end());
        init.backward(t.code, d_init, grad.init, d_code);
        return d_code;
    }
};

inline DisentangledCodes encode(const AcousticSegment& segment, const nn::GruStack& phonetic_encoder,
                                const nn::GruStack& speaker_encoder) {
    if (segment.length() == 0) throw ShapeError("encode: segment '" + segment.segment_id + "' has no frames");
    return {phonetic_encoder.forward(segment.frames).final_hidden(),
            speaker_encoder.forward(segment.frames).final_hidden()};
}

inline Vector concat(std::span<const double> a, std::span<const double> b) {
    Vector out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Matrix decode(const DisentangledCodes& codes, const SequenceDecoder& decoder, std::size_t t_target) {
    return decoder.forward(concat(codes.phonetic, codes.speaker), t_target).frames;
}

struct Stage1Model {
    Stage1Config config;
    std::size_t feature_dim = 0;
    nn::GruStack phonetic_encoder;
    nn::GruStack speaker_encoder;
    SequenceDecoder decoder;
    nn::Mlp critic;  // [v_p_i; v_p_j] -> scalar

    static Stage1Model create(const Stage1Config& cfg, std::size_t feature_dim, Rng& rng) {
        cfg.validate();
        Stage1Model m;
        m.config = cfg;
        m.feature_dim = feature_dim;
        const std::size_t code = cfg.phonetic_dim + cfg.speaker_dim;
        m.phonetic_encoder = nn::GruStack::create(feature_dim, cfg.phonetic_dim, cfg.gru_layers, rng);
        m.speaker_encoder = nn::GruStack::create(feature_dim, cfg.speaker_dim, cfg.gru_layers, rng);
        m.decoder.gru = nn::GruStack::create(code, cfg.decoder_hidden, cfg.gru_layers, rng);
        m.decoder.init = nn::Linear::xavier(code, cfg.gru_layers * cfg.decoder_hidden, rng);
        m.decoder.readout = nn::Linear::xavier(cfg.decoder_hidden, feature_dim, rng);
        m.critic = nn::Mlp::create({2 * cfg.phonetic_dim, cfg.critic_hidden, cfg.critic_hidden, 1}, rng);
        return m;
    }

    Stage1Model zeros_like() const {
        Stage1Model g;
        g.config = config;
        g.feature_dim = feature_dim;
        g.phonetic_encoder = phonetic_encoder.zeros_like();
        g.speaker_encoder = speaker_encoder.zeros_like();
        g.decoder = decoder.zeros_like();
        g.critic = critic.zeros_like();
        return g;
    }

    // Everything trained on the reconstruction side.
    nn::ParamList generator_params() {
        auto p = phonetic_encoder.params("phonetic_encoder");
        for (auto& x : speaker_encoder.params("speaker_encoder")) p.push_back(x);
        for (auto& x : decoder.params("decoder")) p.push_back(x);
        return p;
    }
    nn::ParamList critic_params() { return critic.params("critic"); }
    nn::ParamList all_params() {
        auto p = generator_params();
        for (auto& x : critic_params()) p.push_back(x);
        return p;
    }

    DisentangledCodes encode(const AcousticSegment& segment) const {
        if (segment.feature_dim() != feature_dim) {
            throw ShapeError("segment '" + segment.segment_id + "' has feature dim " +
                             std::to_string(segment.feature_dim()) + ", model expects " + std::to_string(feature_dim));
        }
        DisentangledCodes c = uasr::encode(segment, phonetic_encoder, speaker_encoder);
        if (!config.disentangle) std::fill(c.speaker.begin(), c.speaker.end(), 0.0);
        return c;
    }

    Matrix reconstruct(const AcousticSegment& segment) const {
        return decode(encode(segment), decoder, segment.length());
    }
};

} // namespace uasr

#endif
