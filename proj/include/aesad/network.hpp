#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesad/tensor.hpp"

namespace aesad {

enum class Activation { relu, sigmoid, identity };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct DenseLayer {
    Tensor weights;  // out x in
    Tensor bias;     // out x 1
    Activation activation = Activation::identity;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }
};

// Width list of a symmetric autoencoder, e.g. {784, 392, 32, 392, 784}.
struct NetworkSpec {
    std::vector<std::size_t> widths;
    Activation hidden = Activation::relu;
    Activation output = Activation::sigmoid;
};

// Default layout for d-dimensional inputs: two encoder layers into the
// latent space, mirrored decoder. Latent width is 32 unless d < 32, where
// it shrinks to max(2, round(d/2)).
NetworkSpec default_spec(std::size_t input_dim);

// Throws std::invalid_argument unless widths mirror around a narrowest
// middle layer and every width is positive.
void validate_spec(const NetworkSpec& spec);

class Network {
public:
    Network() = default;

    // Low-level constructor used by init_network, deserialization and tests.
    // Checks dimensional consistency and the autoencoder in == out shape only;
    // activations are taken as given.
    static Network from_layers(std::vector<DenseLayer> layers, std::uint64_t seed = 0);

    std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim(); }
    std::size_t latent_dim() const noexcept { return latent_dim_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::vector<std::size_t> widths() const;

    std::span<DenseLayer> layers() noexcept { return layers_; }
    std::span<const DenseLayer> layers() const noexcept { return layers_; }

    std::size_t parameter_count() const noexcept;

    friend bool operator==(const Network& a, const Network& b);

private:
    std::vector<DenseLayer> layers_;
    std::size_t latent_dim_ = 0;
    std::uint64_t seed_ = 0;
};

// Glorot-uniform weights, limit sqrt(6 / (fan_in + fan_out)), drawn layer by
// layer in row-major order from SplitMix64(seed). Biases start at zero.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

Tensor forward(const Network& net, const Tensor& batch);

// Gradients mirror the network's parameter layout.
struct Gradients {
    std::vector<Tensor> weights;
    std::vector<Tensor> bias;

    static Gradients zeros_like(const Network& net);
    double max_abs() const noexcept;
};

// sum_r row_weights[r] * ||targets_r - forward(net, batch)_r||^2
double weighted_loss(const Network& net, const Tensor& batch, const Tensor& targets,
                     std::span<const double> row_weights);

// Analytic gradient of weighted_loss with respect to every parameter.
Gradients backward(const Network& net, const Tensor& batch, const Tensor& targets,
                   std::span<const double> row_weights);

// Same as backward, also returning the loss computed on the way.
Gradients backward(const Network& net, const Tensor& batch, const Tensor& targets,
                   std::span<const double> row_weights, double& loss);

// Central differences (L(theta + h) - L(theta - h)) / 2h for every scalar
// parameter. Test oracle for backward.
Gradients numeric_gradient(const Network& net, const Tensor& batch, const Tensor& targets,
                           std::span<const double> row_weights, double h = 1e-5);

// Max over parameters of |a - b| / max(|a|, |b|, floor).
double max_relative_error(const Gradients& a, const Gradients& b, double floor = 1e-8);

// Text container: version tag, seed, widths, activations, then every
// parameter in shortest round-trip decimal form. Loading reproduces values
// exactly.
void save_network(std::ostream& out, const Network& net);
Network load_network(std::istream& in);
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace aesad
