#include "aesad/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aesad {

AdamState::AdamState(const Network& net, AdamConfig config) : config_(config) {
    for (const auto& layer : net.layers()) {
        moments_.push_back({Tensor(layer.weights.rows(), layer.weights.cols()),
                            Tensor(layer.weights.rows(), layer.weights.cols())});
        moments_.push_back({Tensor(layer.bias.rows(), 1), Tensor(layer.bias.rows(), 1)});
    }
}

void adam_update(Tensor& param, const Tensor& grad, AdamMoments& moments, std::uint64_t t,
                 const AdamConfig& config) {
    if (!param.same_shape(grad) || !param.same_shape(moments.first) || !param.same_shape(moments.second)) {
        throw std::invalid_argument("adam_update: shape mismatch");
    }
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
    auto p = param.values();
    auto g = grad.values();
    auto m = moments.first.values();
    auto v = moments.second.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
    auto layers = net.layers();
    auto& moments = state.moments();
    if (grads.weights.size() != layers.size() || grads.bias.size() != layers.size() ||
        moments.size() != 2 * layers.size()) {
        throw std::invalid_argument("adam_step: parameter layout mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].weights.same_shape(grads.weights[i]) || !layers[i].bias.same_shape(grads.bias[i])) {
            throw std::invalid_argument("adam_step: gradient shape mismatch in layer " + std::to_string(i));
        }
    }
    state.advance();
    const auto t = state.step();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        adam_update(layers[i].weights, grads.weights[i], moments[2 * i], t, state.config());
        adam_update(layers[i].bias, grads.bias[i], moments[2 * i + 1], t, state.config());
    }
}

}  // namespace aesad
