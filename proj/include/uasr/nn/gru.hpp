#ifndef UASR_NN_GRU_HPP
#define UASR_NN_GRU_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/nn/params.hpp"

namespace uasr::nn {

// Single GRU layer. Gate blocks are stacked in the order update (z), reset (r), candidate (n):
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   n  = tanh(Wn x + Un (r * h) + bn)
//   h' = (1 - z) * h + z * n
struct GruLayer {
    Matrix w;  // 3H x I
    Matrix u;  // 3H x H
    Matrix b;  // 3H x 1

    GruLayer() = default;
    GruLayer(std::size_t input, std::size_t hidden) : w(3 * hidden, input), u(3 * hidden, hidden), b(3 * hidden, 1) {}

    std::size_t input_dim() const { return w.cols(); }
    std::size_t hidden_dim() const { return u.cols(); }

    ParamList params(const std::string& prefix) {
        return {{prefix + ".w", &w}, {prefix + ".u", &u}, {prefix + ".b", &b}};
    }
};

// Per-layer activations of one sequence, kept for the backward pass. Row t of each
// matrix holds the value at time step t.
struct GruLayerTrace {
    Matrix input;   // T x I
    Matrix h_prev;  // T x H
    Matrix z, r, n, rh;
    Matrix h;       // T x H (outputs)
};

struct GruTrace {
    std::vector<GruLayerTrace> layers;

    const Matrix& outputs() const { return layers.back().h; }
    Vector final_hidden() const { return outputs().row_vector(outputs().rows() - 1); }
    std::size_t steps() const { return outputs().rows(); }
};

struct GruStack {
    std::vector<GruLayer> layers;

    GruStack() = default;

    // Uniform(-1/sqrt(H), 1/sqrt(H)) initialisation on all weights, zero biases.
    static GruStack create(std::size_t input, std::size_t hidden, std::size_t n_layers, Rng& rng) {
        if (n_layers == 0 || hidden == 0 || input == 0) throw ShapeError("GruStack: sizes must be positive");
        GruStack s;
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (std::size_t l = 0; l < n_layers; ++l) {
            GruLayer layer(l == 0 ? input : hidden, hidden);
            init_uniform(layer.w, bound, rng);
            init_uniform(layer.u, bound, rng);
            s.layers.push_back(std::move(layer));
        }
        return s;
    }

    static GruStack zeros(std::size_t input, std::size_t hidden, std::size_t n_layers) {
        GruStack s;
        for (std::size_t l = 0; l < n_layers; ++l) s.layers.emplace_back(l == 0 ? input : hidden, hidden);
        return s;
    }

    std::size_t input_dim() const { return layers.front().input_dim(); }
    std::size_t hidden_dim() const { return layers.back().hidden_dim(); }
    std::size_t depth() const { return layers.size(); }

    GruStack zeros_like() const {
        GruStack s;
        for (const auto& l : layers) s.layers.emplace_back(l.input_dim(), l.hidden_dim());
        return s;
    }

    ParamList params(const std::string& prefix) {
        ParamList out;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            auto p = layers[i].params(prefix + ".layer" + std::to_string(i));
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }

    // frames: T x I. initial: one H-vector per layer, or empty for zeros.
    GruTrace forward(const Matrix& frames, const std::vector<Vector>& initial = {}) const {
        if (frames.rows() == 0) throw ShapeError("GRU forward: empty frame sequence");
        if (frames.cols() != input_dim()) {
            throw ShapeError("GRU forward: frame dimension " + std::to_string(frames.cols()) + ", stack expects " +
                             std::to_string(input_dim()));
        }
        if (!initial.empty() && initial.size() != layers.size()) throw ShapeError("GRU forward: initial state count");
        const std::size_t steps = frames.rows();
        GruTrace trace;
        trace.layers.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const GruLayer& layer = layers[l];
            const std::size_t hd = layer.hidden_dim();
            GruLayerTrace& lt = trace.layers[l];
            lt.input = l == 0 ? frames : trace.layers[l - 1].h;
            lt.h_prev = Matrix(steps, hd);
            lt.z = Matrix(steps, hd);
            lt.r = Matrix(steps, hd);
            lt.n = Matrix(steps, hd);
            lt.rh = Matrix(steps, hd);
            lt.h = Matrix(steps, hd);

            Vector h = initial.empty() ? Vector(hd, 0.0) : initial[l];
            if (h.size() != hd) throw ShapeError("GRU forward: initial state size");
            Vector ax(3 * hd), uh(hd);
            for (std::size_t t = 0; t < steps; ++t) {
                auto x = lt.input.row(t);
                gemv(layer.w, x, ax);
                axpy(1.0, layer.b.values(), ax);
                std::copy(h.begin(), h.end(), lt.h_prev.row(t).begin());
                for (std::size_t k = 0; k < hd; ++k) {
                    const double z = sigmoid(ax[k] + dot(layer.u.row(k), h));
                    const double r = sigmoid(ax[hd + k] + dot(layer.u.row(hd + k), h));
                    lt.z(t, k) = z;
                    lt.r(t, k) = r;
                    lt.rh(t, k) = r * h[k];
                }
                auto rh = lt.rh.row(t);
                for (std::size_t k = 0; k < hd; ++k) {
                    const double n = std::tanh(ax[2 * hd + k] + dot(layer.u.row(2 * hd + k), rh));
                    lt.n(t, k) = n;
                }
                for (std::size_t k = 0; k < hd; ++k) {
                    const double z = lt.z(t, k);
                    h[k] = (1.0 - z) * h[k] + z * lt.n(t, k);
                    lt.h(t, k) = h[k];
                }
            }
        }
        return trace;
    }

    struct Backward {
        Matrix d_frames;               // T x I
        std::vector<Vector> d_initial;  // one per layer
    };

    // d_outputs: T x H gradient on every top-layer output (may be empty = zeros).
    // d_final: extra gradient on the last top-layer state (may be empty).
    Backward backward(const GruTrace& trace, const Matrix& d_outputs, std::span<const double> d_final,
                      GruStack& grad) const {
        const std::size_t steps = trace.steps();
        Backward out;
        out.d_initial.resize(layers.size());
        // gradient flowing into the outputs of the current layer, T x H
        Matrix d_out = d_outputs.empty() ? Matrix(steps, hidden_dim()) : d_outputs;
        if (!d_final.empty()) axpy(1.0, d_final, d_out.row(steps - 1));

        for (std::size_t l = layers.size(); l-- > 0;) {
            const GruLayer& layer = layers[l];
            GruLayer& g = grad.layers[l];
            const GruLayerTrace& lt = trace.layers[l];
            const std::size_t hd = layer.hidden_dim();
            Matrix d_in(steps, layer.input_dim());
            Vector dh(hd, 0.0), da(3 * hd), drh(hd), dh_prev(hd);

            for (std::size_t t = steps; t-- > 0;) {
                axpy(1.0, d_out.row(t), dh);
                auto hp = lt.h_prev.row(t);
                for (std::size_t k = 0; k < hd; ++k) {
                    const double z = lt.z(t, k);
                    const double n = lt.n(t, k);
                    const double dz = dh[k] * (n - hp[k]);
                    const double dn = dh[k] * z;
                    dh_prev[k] = dh[k] * (1.0 - z);
                    da[k] = dz * z * (1.0 - z);
                    da[2 * hd + k] = dn * (1.0 - n * n);
                }
                // candidate path through r * h
                std::fill(drh.begin(), drh.end(), 0.0);
                for (std::size_t k = 0; k < hd; ++k) axpy(da[2 * hd + k], layer.u.row(2 * hd + k), drh);
                for (std::size_t k = 0; k < hd; ++k) {
                    const double r = lt.r(t, k);
                    const double dr = drh[k] * hp[k];
                    dh_prev[k] += drh[k] * r;
                    da[hd + k] = dr * r * (1.0 - r);
                }
                // recurrent weights
                for (std::size_t k = 0; k < hd; ++k) {
                    axpy(da[k], hp, g.u.row(k));
                    axpy(da[hd + k], hp, g.u.row(hd + k));
                    axpy(da[2 * hd + k], lt.rh.row(t), g.u.row(2 * hd + k));
                    axpy(da[k], layer.u.row(k), dh_prev);
                    axpy(da[hd + k], layer.u.row(hd + k), dh_prev);
                }
                // input weights
                add_outer(g.w, da, lt.input.row(t));
                axpy(1.0, da, g.b.values());
                gemv_t_add(layer.w, da, d_in.row(t));
                dh = dh_prev;
            }
            out.d_initial[l] = dh;
            d_out = std::move(d_in);
        }
        out.d_frames = std::move(d_out);
        return out;
    }
};

struct GruOutput {
    Matrix hidden_states;  // T x H, top layer
    Vector final_hidden;
};

inline GruOutput gru_forward(const GruStack& stack, const Matrix& frames) {
    GruTrace t = stack.forward(frames);
    return {t.outputs(), t.final_hidden()};
}

} // namespace uasr::nn

#endif
