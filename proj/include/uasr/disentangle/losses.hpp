#ifndef UASR_DISENTANGLE_LOSSES_HPP
#define UASR_DISENTANGLE_LOSSES_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/disentangle/model.hpp"
#include "uasr/disentangle/segment.hpp"
#include "uasr/nn/mlp.hpp"

namespace uasr {

// Two members of a batch, by index, and whether they share a speaker.
struct SegmentPair {
    std::size_t i;
    std::size_t j;
    bool same_speaker;
};

// Sum over frames and dimensions of the squared difference.
inline double reconstruction_error(const Matrix& target, const Matrix& reconstruction) {
    if (target.rows() != reconstruction.rows() || target.cols() != reconstruction.cols()) {
        throw ShapeError("reconstruction has " + std::to_string(reconstruction.rows()) + " frames, segment has " +
                         std::to_string(target.rows()));
    }
    return squared_distance(target.values(), reconstruction.values());
}

inline double loss_reconstruction(std::span<const AcousticSegment> segments, std::span<const Matrix> reconstructions) {
    if (segments.size() != reconstructions.size()) throw ShapeError("loss_reconstruction: batch sizes differ");
    double total = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) total += reconstruction_error(segments[i].frames, reconstructions[i]);
    return total;
}

// Contrastive speaker loss: same-speaker pairs pay their distance, other pairs pay
// max(margin - distance, 0). When grads is given, scale * d loss / d speaker_codes[k]
// is accumulated into (*grads)[k].
inline double loss_speaker(std::span<const Vector> speaker_codes, std::span<const SegmentPair> pairs, double margin,
                           std::vector<Vector>* grads = nullptr, double scale = 1.0) {
    if (!(margin > 0.0)) throw DataError("speaker margin must be positive");
    double total = 0.0;
    Vector diff;
    for (const auto& p : pairs) {
        const Vector& a = speaker_codes[p.i];
        const Vector& b = speaker_codes[p.j];
        diff.resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
        const double d = norm(diff);
        double coeff = 0.0;  // d term / d a = coeff * diff
        if (p.same_speaker) {
            total += d;
            if (d > 1e-12) coeff = 1.0 / d;
        } else if (d < margin) {
            total += margin - d;
            if (d > 1e-12) coeff = -1.0 / d;
        }
        if (grads && coeff != 0.0) {
            axpy(scale * coeff, diff, (*grads)[p.i]);
            axpy(-scale * coeff, diff, (*grads)[p.j]);
        }
    }
    return total;
}

// Sum of D over same-speaker pairs minus sum of D over different-speaker pairs.
inline double loss_critic(std::span<const Vector> phonetic_codes, std::span<const SegmentPair> pairs,
                          const nn::Mlp& critic) {
    double total = 0.0;
    for (const auto& p : pairs) {
        const double d = critic(concat(phonetic_codes[p.i], phonetic_codes[p.j]))[0];
        total += p.same_speaker ? d : -d;
    }
    return total;
}

// Accumulates scale * d loss_critic / d phonetic_codes into grads (critic held fixed).
inline void loss_critic_input_grad(std::span<const Vector> phonetic_codes, std::span<const SegmentPair> pairs,
                                   const nn::Mlp& critic, double scale, std::vector<Vector>& grads) {
    for (const auto& p : pairs) {
        const auto trace = critic.forward(concat(phonetic_codes[p.i], phonetic_codes[p.j]));
        const Vector g = critic.input_gradient(trace);
        const double s = p.same_speaker ? scale : -scale;
        const std::size_t dim = phonetic_codes[p.i].size();
        axpy(s, std::span<const double>(g).subspan(0, dim), grads[p.i]);
        axpy(s, std::span<const double>(g).subspan(dim, dim), grads[p.j]);
    }
}

// Accumulates scale * d loss_critic / d critic-parameters into grad.
inline void loss_critic_param_grad(std::span<const Vector> phonetic_codes, std::span<const SegmentPair> pairs,
                                   const nn::Mlp& critic, double scale, nn::Mlp& grad) {
    for (const auto& p : pairs) {
        const auto trace = critic.forward(concat(phonetic_codes[p.i], phonetic_codes[p.j]));
        const double s = p.same_speaker ? scale : -scale;
        critic.backward(trace, std::span<const double>(&s, 1), grad);
    }
}

// Enumerates every pair in a batch and keeps equally many same- and
// different-speaker pairs, at most `cap` of each.
inline std::vector<SegmentPair> sample_balanced_pairs(std::span<const std::string> speakers, std::size_t cap, Rng& rng) {
    std::vector<SegmentPair> same, diff;
    for (std::size_t i = 0; i < speakers.size(); ++i)
        for (std::size_t j = i + 1; j < speakers.size(); ++j)
            (speakers[i] == speakers[j] ? same : diff).push_back({i, j, speakers[i] == speakers[j]});
    const std::size_t m = std::min({same.size(), diff.size(), cap});
    rng.shuffle(same);
    rng.shuffle(diff);
    std::vector<SegmentPair> out;
    out.reserve(2 * m);
    for (std::size_t k = 0; k < m; ++k) {
        out.push_back(same[k]);
        out.push_back(diff[k]);
    }
    return out;
}

struct GeneratorWeights {
    double reconstruction = 1.0;
    double speaker = 1.0;
    double adversarial = 1.0;
};

struct GeneratorLoss {
    double reconstruction = 0.0;  // raw sums
    double speaker = 0.0;
    double critic = 0.0;
    double total = 0.0;  // weighted: wr*Lr + ws*Ls + wd*Ld
};

// Encoder/decoder objective wr*Lr + ws*Ls + wd*Ld on one batch: the critic maximises
// Ld, so the phonetic encoder descends it. With grad set, accumulates the gradient
// over the encoders and the decoder.
inline GeneratorLoss generator_objective(const Stage1Model& model, std::span<const AcousticSegment> batch,
                                         std::span<const SegmentPair> pairs, const GeneratorWeights& w,
                                         Stage1Model* grad = nullptr) {
    const bool use_speaker = model.config.disentangle;
    const std::size_t n = batch.size();
    std::vector<nn::GruTrace> p_traces, s_traces;
    std::vector<Vector> phonetic(n), speaker(n);
    p_traces.reserve(n);
    s_traces.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (batch[i].length() == 0) throw ShapeError("segment '" + batch[i].segment_id + "' has no frames");
        p_traces.push_back(model.phonetic_encoder.forward(batch[i].frames));
        phonetic[i] = p_traces.back().final_hidden();
        if (use_speaker) {
            s_traces.push_back(model.speaker_encoder.forward(batch[i].frames));
            speaker[i] = s_traces.back().final_hidden();
        } else {
            speaker[i].assign(model.config.speaker_dim, 0.0);
        }
    }

    GeneratorLoss out;
    std::vector<Vector> d_phonetic(n, Vector(model.config.phonetic_dim, 0.0));
    std::vector<Vector> d_speaker(n, Vector(model.config.speaker_dim, 0.0));

    for (std::size_t i = 0; i < n; ++i) {
        const auto trace = model.decoder.forward(concat(phonetic[i], speaker[i]), batch[i].length());
        out.reconstruction += reconstruction_error(batch[i].frames, trace.frames);
        if (grad) {
            Matrix d_frames = trace.frames;
            d_frames -= batch[i].frames;
            d_frames *= 2.0 * w.reconstruction;
            const Vector d_code = model.decoder.backward(trace, d_frames, grad->decoder);
            axpy(1.0, std::span<const double>(d_code).subspan(0, model.config.phonetic_dim), d_phonetic[i]);
            axpy(1.0, std::span<const double>(d_code).subspan(model.config.phonetic_dim), d_speaker[i]);
        }
    }
    if (use_speaker && !pairs.empty()) {
        out.speaker = loss_speaker(speaker, pairs, model.config.margin, grad ? &d_speaker : nullptr, w.speaker);
        out.critic = loss_critic(phonetic, pairs, model.critic);
        if (grad) loss_critic_input_grad(phonetic, pairs, model.critic, w.adversarial, d_phonetic);
    }
    out.total = w.reconstruction * out.reconstruction + w.speaker * out.speaker + w.adversarial * out.critic;

    if (grad) {
        for (std::size_t i = 0; i < n; ++i) {
            model.phonetic_encoder.backward(p_traces[i], {}, d_phonetic[i], grad->phonetic_encoder);
            if (use_speaker) model.speaker_encoder.backward(s_traces[i], {}, d_speaker[i], grad->speaker_encoder);
        }
    }
    return out;
}

struct CriticLoss {
    double critic = 0.0;   // Ld, raw sum
    double penalty = 0.0;  // summed gradient penalty
    double total = 0.0;    // -wd*Ld + wp*penalty  (minimised by the critic)
};

// Critic objective on fixed phonetic codes. Each same-speaker pair is matched with a
// different-speaker pair and the penalty is taken at the point mix[k] of the way
// from the different-speaker input to the same-speaker input.
inline CriticLoss critic_objective(const nn::Mlp& critic, std::span<const Vector> phonetic_codes,
                                   std::span<const SegmentPair> pairs, std::span<const double> mix,
                                   double critic_weight, double penalty_weight, nn::Mlp* grad = nullptr) {
    CriticLoss out;
    out.critic = loss_critic(phonetic_codes, pairs, critic);
    if (grad) loss_critic_param_grad(phonetic_codes, pairs, critic, -critic_weight, *grad);

    std::vector<const SegmentPair*> same, diff;
    for (const auto& p : pairs) (p.same_speaker ? same : diff).push_back(&p);
    const std::size_t m = std::min(same.size(), diff.size());
    if (mix.size() < m) throw ShapeError("critic_objective: not enough interpolation coefficients");
    nn::Mlp scratch;
    for (std::size_t k = 0; k < m; ++k) {
        const Vector x_same = concat(phonetic_codes[same[k]->i], phonetic_codes[same[k]->j]);
        const Vector x_diff = concat(phonetic_codes[diff[k]->i], phonetic_codes[diff[k]->j]);
        Vector x(x_same.size());
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = mix[k] * x_same[d] + (1.0 - mix[k]) * x_diff[d];
        if (grad) {
            out.penalty += critic.gradient_penalty(x, penalty_weight, *grad);
        } else {
            if (scratch.layers.empty()) scratch = critic.zeros_like();
            out.penalty += critic.gradient_penalty(x, 0.0, scratch);
        }
    }
    out.total = -critic_weight * out.critic + penalty_weight * out.penalty;
    return out;
}

} // namespace uasr

#endif
