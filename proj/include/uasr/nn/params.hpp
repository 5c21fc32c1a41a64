#ifndef UASR_NN_PARAMS_HPP
#define UASR_NN_PARAMS_HPP

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"
#include "uasr/core/optimizer.hpp"
#include "uasr/core/rng.hpp"

namespace uasr::nn {

// Non-owning handle on one named weight block of a model.
struct ParamRef {
    std::string name;
    Matrix* value;
};

using ParamList = std::vector<ParamRef>;

inline void init_uniform(Matrix& m, double bound, Rng& rng) {
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

inline void zero_all(const ParamList& params) {
    for (const auto& p : params) p.value->fill(0.0);
}

inline void scale_all(const ParamList& params, double s) {
    for (const auto& p : params) *p.value *= s;
}

inline double squared_norm(const ParamList& params) {
    double s = 0.0;
    for (const auto& p : params)
        for (double v : p.value->values()) s += v * v;
    return s;
}

// Rescales gradients so that their joint L2 norm is at most max_norm.
inline void clip_global_norm(const ParamList& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    const double n = std::sqrt(squared_norm(grads));
    if (n > max_norm) scale_all(grads, max_norm / n);
}

// One OptimizerState per named block, created on first use.
class ParamOptimizer {
public:
    ParamOptimizer() = default;
    explicit ParamOptimizer(OptimizerSettings settings) : settings_(settings) {}

    void step(const ParamList& params, const ParamList& grads) {
        if (params.size() != grads.size()) throw ShapeError("ParamOptimizer: parameter/gradient lists differ");
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& state = states_.try_emplace(params[i].name, settings_, params[i].name).first->second;
            state.step(params[i].value->values(), grads[i].value->values());
        }
    }

    const OptimizerSettings& settings() const { return settings_; }

private:
    OptimizerSettings settings_;
    std::map<std::string, OptimizerState> states_;
};

inline double sigmoid(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// -log(sigmoid(x)) without overflow.
inline double neg_log_sigmoid(double x) {
    if (x >= 0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

} // namespace uasr::nn

#endif
