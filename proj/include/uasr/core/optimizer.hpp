#ifndef UASR_CORE_OPTIMIZER_HPP
#define UASR_CORE_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uasr/core/errors.hpp"
#include "uasr/core/matrix.hpp"

namespace uasr {

enum class OptimizerKind { adam, sgd_with_decay };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // sgd-with-decay: lr is multiplied by decay_rate once every decay_interval steps
    std::uint64_t decay_interval = 40;
    double decay_rate = 0.90;

    static OptimizerSettings adam(double lr) {
        OptimizerSettings s;
        s.kind = OptimizerKind::adam;
        s.learning_rate = lr;
        return s;
    }
    static OptimizerSettings sgd(double lr, std::uint64_t interval, double rate) {
        OptimizerSettings s;
        s.kind = OptimizerKind::sgd_with_decay;
        s.learning_rate = lr;
        s.decay_interval = interval;
        s.decay_rate = rate;
        return s;
    }
};

// Update rule for one parameter block. Moment buffers are sized on the first step.
class OptimizerState {
public:
    OptimizerState() = default;
    OptimizerState(OptimizerSettings settings, std::string block)
        : settings_(settings), block_(std::move(block)) {}

    const OptimizerSettings& settings() const { return settings_; }
    const std::string& block() const { return block_; }
    std::uint64_t steps() const { return steps_; }
    std::span<const double> first_moment() const { return m_; }
    std::span<const double> second_moment() const { return v_; }

    // Learning rate the next step will use.
    double current_learning_rate() const {
        if (settings_.kind == OptimizerKind::adam || settings_.decay_interval == 0) return settings_.learning_rate;
        const auto decays = static_cast<double>(steps_ / settings_.decay_interval);
        return settings_.learning_rate * std::pow(settings_.decay_rate, decays);
    }

    void step(std::span<double> params, std::span<const double> grads) {
        if (params.size() != grads.size()) {
            throw ShapeError("optimizer block '" + block_ + "': " + std::to_string(params.size()) +
                             " parameters but " + std::to_string(grads.size()) + " gradients");
        }
        for (double g : grads) {
            if (!std::isfinite(g)) throw DivergenceError("non-finite gradient in parameter block '" + block_ + "'");
        }
        const double lr = current_learning_rate();
        if (settings_.kind == OptimizerKind::sgd_with_decay) {
            axpy(-lr, grads, params);
        } else {
            if (m_.empty()) {
                m_.assign(params.size(), 0.0);
                v_.assign(params.size(), 0.0);
            } else if (m_.size() != params.size()) {
                throw ShapeError("optimizer block '" + block_ + "' changed size");
            }
            const double b1 = settings_.beta1;
            const double b2 = settings_.beta2;
            const double t = static_cast<double>(steps_ + 1);
            const double c1 = 1.0 - std::pow(b1, t);
            const double c2 = 1.0 - std::pow(b2, t);
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double g = grads[i];
                m_[i] = b1 * m_[i] + (1.0 - b1) * g;
                v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
                const double mhat = m_[i] / c1;
                const double vhat = v_[i] / c2;
                params[i] -= lr * mhat / (std::sqrt(vhat) + settings_.epsilon);
            }
        }
        ++steps_;
    }

private:
    OptimizerSettings settings_;
    std::string block_;
    std::uint64_t steps_ = 0;
    Vector m_;
    Vector v_;
};

inline void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> grads) {
    state.step(params, grads);
}

} // namespace uasr

#endif
