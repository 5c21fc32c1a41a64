#ifndef UASR_SEMANTIC_ENCODERS_HPP
#define UASR_SEMANTIC_ENCODERS_HPP

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/nn/mlp.hpp"
#include "uasr/nn/params.hpp"

namespace uasr {

// Semantic encoder E_sem (v_p -> v_w) and context encoder E_con (v_p -> v_c), each with
// two tanh hidden layers and a linear output layer.
struct SemanticEncoderPair {
    nn::Mlp semantic;
    nn::Mlp context;

    static SemanticEncoderPair create(std::size_t input_dim, std::size_t hidden, std::size_t output_dim, Rng& rng) {
        if (input_dim == 0 || hidden == 0 || output_dim == 0) throw ShapeError("semantic encoder sizes must be positive");
        SemanticEncoderPair p;
        p.semantic = nn::Mlp::create({input_dim, hidden, hidden, output_dim}, rng);
        p.context = nn::Mlp::create({input_dim, hidden, hidden, output_dim}, rng);
        return p;
    }

    std::size_t input_dim() const { return semantic.in_dim(); }
    std::size_t output_dim() const { return semantic.out_dim(); }

    SemanticEncoderPair zeros_like() const { return {semantic.zeros_like(), context.zeros_like()}; }

    nn::ParamList params() {
        auto out = semantic.params("semantic");
        auto c = context.params("context");
        out.insert(out.end(), c.begin(), c.end());
        return out;
    }

    Vector embed(std::span<const double> phonetic) const { return semantic(phonetic); }
    Vector embed_context(std::span<const double> phonetic) const { return context(phonetic); }
};

// (center, other) indices into the list of phonetic vectors.
using IndexPair = std::pair<std::size_t, std::size_t>;

// Skip-gram loss with negative sampling over continuous inputs:
//   sum_pos -log s(E_sem(x_i) . E_con(x_j)) + sum_neg -log s(-E_sem(x_i) . E_con(x_k)).
// With grad set, accumulates scale * d loss / d parameters. Each distinct input is run
// through each encoder once per call.
inline double loss_semantic(std::span<const Vector> inputs, std::span<const IndexPair> positives,
                            std::span<const IndexPair> negatives, const SemanticEncoderPair& enc,
                            SemanticEncoderPair* grad = nullptr, double scale = 1.0) {
    std::map<std::size_t, nn::Mlp::Trace> sem, con;
    std::map<std::size_t, Vector> d_sem, d_con;
    auto check = [&](std::size_t i) {
        if (i >= inputs.size()) throw ShapeError("loss_semantic: pair index out of range");
        if (inputs[i].size() != enc.input_dim()) {
            throw ShapeError("loss_semantic: input has dim " + std::to_string(inputs[i].size()) + ", encoders expect " +
                             std::to_string(enc.input_dim()));
        }
    };
    auto sem_trace = [&](std::size_t i) -> const nn::Mlp::Trace& {
        auto it = sem.find(i);
        if (it == sem.end()) {
            check(i);
            it = sem.emplace(i, enc.semantic.forward(inputs[i])).first;
        }
        return it->second;
    };
    auto con_trace = [&](std::size_t i) -> const nn::Mlp::Trace& {
        auto it = con.find(i);
        if (it == con.end()) {
            check(i);
            it = con.emplace(i, enc.context.forward(inputs[i])).first;
        }
        return it->second;
    };
    auto accumulate = [&](std::map<std::size_t, Vector>& into, std::size_t i, double coeff, const Vector& v) {
        auto& g = into.try_emplace(i, Vector(v.size(), 0.0)).first->second;
        axpy(coeff, v, g);
    };

    double total = 0.0;
    auto term = [&](const IndexPair& p, double sign) {
        const Vector& w = sem_trace(p.first).output();
        const Vector& c = con_trace(p.second).output();
        const double s = dot(w, c);
        total += nn::neg_log_sigmoid(sign * s);
        if (grad) {
            // d/ds -log sigma(sign * s) = -sign * sigma(-sign * s)
            const double g = -sign * nn::sigmoid(-sign * s) * scale;
            accumulate(d_sem, p.first, g, c);
            accumulate(d_con, p.second, g, w);
        }
    };
    for (const auto& p : positives) term(p, 1.0);
    for (const auto& p : negatives) term(p, -1.0);

    if (grad) {
        for (const auto& [i, g] : d_sem) enc.semantic.backward(sem.at(i), g, grad->semantic);
        for (const auto& [i, g] : d_con) enc.context.backward(con.at(i), g, grad->context);
    }
    return total;
}

} // namespace uasr

#endif
