#pragma once

#include <cstdint>
#include <vector>

#include "aesad/network.hpp"
#include "aesad/tensor.hpp"

namespace aesad {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamMoments {
    Tensor first;
    Tensor second;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(const Network& net, AdamConfig config);

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t step() const noexcept { return step_; }

    // One entry per parameter tensor: layer 0 weights, layer 0 bias, layer 1 weights, ...
    std::vector<AdamMoments>& moments() noexcept { return moments_; }
    const std::vector<AdamMoments>& moments() const noexcept { return moments_; }

    void advance() noexcept { ++step_; }

private:
    AdamConfig config_;
    std::vector<AdamMoments> moments_;
    std::uint64_t step_ = 0;
};

// Bias-corrected Adam update of one tensor at step t (1-based).
void adam_update(Tensor& param, const Tensor& grad, AdamMoments& moments, std::uint64_t t,
                 const AdamConfig& config);

// Applies adam_update to every parameter of the network and advances the step counter.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

}  // namespace aesad
