#ifndef UASR_NN_LINEAR_HPP
#define UASR_NN_LINEAR_HPP

#include <cmath>
#include <span>
#include <string>

#include "uasr/core/matrix.hpp"
#include "uasr/core/rng.hpp"
#include "uasr/nn/params.hpp"

namespace uasr::nn {

// y = W x + b
struct Linear {
    Matrix weight;  // out x in
    Matrix bias;    // out x 1

    Linear() = default;
    Linear(std::size_t in, std::size_t out) : weight(out, in), bias(out, 1) {}

    static Linear xavier(std::size_t in, std::size_t out, Rng& rng) {
        Linear l(in, out);
        init_uniform(l.weight, std::sqrt(6.0 / static_cast<double>(in + out)), rng);
        return l;
    }

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }

    Linear zeros_like() const { return Linear(in_dim(), out_dim()); }

    ParamList params(const std::string& prefix) {
        return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
    }

    void forward(std::span<const double> x, std::span<double> y) const {
        if (x.size() != in_dim()) {
            throw ShapeError("linear layer expects input of length " + std::to_string(in_dim()) + ", got " +
                             std::to_string(x.size()));
        }
        for (std::size_t r = 0; r < out_dim(); ++r) y[r] = dot(weight.row(r), x) + bias(r, 0);
    }

    Vector forward(std::span<const double> x) const {
        Vector y(out_dim());
        forward(x, y);
        return y;
    }

    // Accumulates parameter gradients into `grad`; adds W^T dy into dx when non-empty.
    void backward(std::span<const double> x, std::span<const double> dy, Linear& grad, std::span<double> dx) const {
        add_outer(grad.weight, dy, x);
        axpy(1.0, dy, grad.bias.values());
        if (!dx.empty()) gemv_t_add(weight, dy, dx);
    }
};

} // namespace uasr::nn

#endif
