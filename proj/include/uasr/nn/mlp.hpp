#ifndef UASR_NN_MLP_HPP
#define UASR_NN_MLP_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/nn/linear.hpp"
#include "uasr/nn/params.hpp"

namespace uasr::nn {

// Feedforward network: tanh on every hidden layer, linear output layer.
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;

    // sizes = {in, hidden..., out}
    static Mlp create(const std::vector<std::size_t>& sizes, Rng& rng) {
        if (sizes.size() < 2) throw ShapeError("Mlp needs at least an input and an output size");
        Mlp m;
        for (std::size_t i = 0; i + 1 < sizes.size(); ++i) m.layers.push_back(Linear::xavier(sizes[i], sizes[i + 1], rng));
        return m;
    }

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }

    Mlp zeros_like() const {
        Mlp m;
        for (const auto& l : layers) m.layers.push_back(l.zeros_like());
        return m;
    }

    ParamList params(const std::string& prefix) {
        ParamList out;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            auto p = layers[i].params(prefix + ".layer" + std::to_string(i));
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }

    // activations[0] = input, activations[l] = output of layer l (tanh for hidden, linear for last).
    struct Trace {
        std::vector<Vector> activations;
        const Vector& output() const { return activations.back(); }
    };

    Trace forward(std::span<const double> x) const {
        Trace t;
        t.activations.reserve(layers.size() + 1);
        t.activations.emplace_back(x.begin(), x.end());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            Vector y = layers[l].forward(t.activations.back());
            if (l + 1 < layers.size())
                for (double& v : y) v = std::tanh(v);
            t.activations.push_back(std::move(y));
        }
        return t;
    }

    Vector operator()(std::span<const double> x) const { return forward(x).output(); }

    // Backpropagates dy (gradient w.r.t. the output); accumulates into grad and returns d input.
    Vector backward(const Trace& t, std::span<const double> dy, Mlp& grad) const {
        Vector delta(dy.begin(), dy.end());
        for (std::size_t l = layers.size(); l-- > 0;) {
            if (l + 1 < layers.size()) {
                const Vector& h = t.activations[l + 1];
                for (std::size_t k = 0; k < delta.size(); ++k) delta[k] *= 1.0 - h[k] * h[k];
            }
            Vector dx(layers[l].in_dim(), 0.0);
            layers[l].backward(t.activations[l], delta, grad.layers[l], dx);
            delta = std::move(dx);
        }
        return delta;
    }

    // Gradient of a scalar-output network with respect to its input.
    Vector input_gradient(const Trace& t) const {
        if (out_dim() != 1) throw ShapeError("input_gradient requires a scalar-output network");
        Mlp scratch = zeros_like();
        const double one = 1.0;
        return backward(t, std::span<const double>(&one, 1), scratch);
    }

    // Gradient penalty (||dD/dx|| - 1)^2 at x for a scalar-output network.
    // Accumulates scale * d penalty / d parameters into grad and returns the penalty.
    double gradient_penalty(std::span<const double> x, double scale, Mlp& grad) const {
        if (out_dim() != 1) throw ShapeError("gradient_penalty requires a scalar-output network");
        const std::size_t n_layers = layers.size();
        const Trace t = forward(x);

        // Input-gradient pass. dh[l] = dD/dh_l, da[l] = dD/da_l for hidden layers l = 1..L-1
        // (index l refers to activations[l]); dh[0] is the input gradient.
        std::vector<Vector> dh(n_layers), da(n_layers);
        dh[n_layers - 1] = layers[n_layers - 1].weight.row_vector(0);
        for (std::size_t l = n_layers - 1; l >= 1; --l) {
            const Vector& h = t.activations[l];
            da[l].resize(h.size());
            for (std::size_t k = 0; k < h.size(); ++k) da[l][k] = dh[l][k] * (1.0 - h[k] * h[k]);
            dh[l - 1].assign(layers[l - 1].in_dim(), 0.0);
            gemv_t_add(layers[l - 1].weight, da[l], dh[l - 1]);
        }
        const Vector& g = dh[0];
        const double gnorm = norm(g);
        const double penalty = (gnorm - 1.0) * (gnorm - 1.0);
        if (scale == 0.0) return penalty;

        // Reverse over the input-gradient pass.
        Vector dh_bar(g.size());
        const double coeff = gnorm > 0.0 ? 2.0 * (gnorm - 1.0) / gnorm * scale : 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) dh_bar[k] = coeff * g[k];

        std::vector<Vector> h_bar(n_layers);
        for (std::size_t l = 1; l < n_layers; ++l) {
            // dh[l-1] = W_{l-1}^T da[l]   (layer index l-1 maps activations[l-1] -> activations[l])
            add_outer(grad.layers[l - 1].weight, da[l], dh_bar);
            Vector da_bar(da[l].size(), 0.0);
            gemv_add(layers[l - 1].weight, dh_bar, da_bar);
            // da[l] = dh[l] * s_l with s_l = 1 - h_l^2
            const Vector& h = t.activations[l];
            Vector next_dh_bar(h.size());
            h_bar[l].assign(h.size(), 0.0);
            for (std::size_t k = 0; k < h.size(); ++k) {
                next_dh_bar[k] = da_bar[k] * (1.0 - h[k] * h[k]);
                const double s_bar = da_bar[k] * dh[l][k];
                h_bar[l][k] = -2.0 * h[k] * s_bar;
            }
            dh_bar = std::move(next_dh_bar);
        }
        // dh[L-1] = W_last row 0
        axpy(1.0, dh_bar, grad.layers[n_layers - 1].weight.row(0));

        // Reverse over the forward pass for the activations the penalty touched.
        for (std::size_t l = n_layers - 1; l >= 1; --l) {
            const Vector& h = t.activations[l];
            Vector a_bar(h.size());
            for (std::size_t k = 0; k < h.size(); ++k) a_bar[k] = h_bar[l][k] * (1.0 - h[k] * h[k]);
            add_outer(grad.layers[l - 1].weight, a_bar, t.activations[l - 1]);
            axpy(1.0, a_bar, grad.layers[l - 1].bias.values());
            if (l >= 2) gemv_t_add(layers[l - 1].weight, a_bar, h_bar[l - 1]);
        }
        return penalty;
    }
};

} // namespace uasr::nn

#endif
