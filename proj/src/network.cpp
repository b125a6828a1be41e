#include "aesad/network.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aesad/rng.hpp"

namespace aesad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) { return {t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())}; }
MutMap as_matrix(Tensor& t) { return {t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())}; }

double activate(Activation a, double z) noexcept {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid:
            // Split form keeps exp from overflowing for large |z|.
            if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
            else {
                const double e = std::exp(z);
                return e / (1.0 + e);
            }
        case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the activation output.
double activation_slope(Activation a, double out) noexcept {
    switch (a) {
        case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return out * (1.0 - out);
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

Tensor affine_activate(const DenseLayer& layer, const Tensor& input) {
    Tensor out(input.rows(), layer.out_dim());
    auto z = as_matrix(out);
    z.noalias() = as_matrix(input) * as_matrix(layer.weights).transpose();
    const auto b = as_matrix(layer.bias);
    for (Eigen::Index r = 0; r < z.rows(); ++r) z.row(r) += b.col(0).transpose();
    for (double& v : out.values()) v = activate(layer.activation, v);
    return out;
}

void check_batch(const Network& net, const Tensor& batch) {
    if (net.layers().empty()) throw std::invalid_argument("network has no layers");
    if (batch.cols() != net.input_dim()) {
        throw std::invalid_argument("batch has " + std::to_string(batch.cols()) +
                                    " columns, network expects " + std::to_string(net.input_dim()));
    }
}

void check_targets(const Tensor& batch, const Tensor& targets, std::span<const double> w) {
    if (!batch.same_shape(targets)) throw std::invalid_argument("targets shape differs from batch");
    if (w.size() != batch.rows()) throw std::invalid_argument("row weight count differs from batch rows");
}

// Layer outputs; index 0 is the input batch itself.
std::vector<Tensor> forward_trace(const Network& net, const Tensor& batch) {
    std::vector<Tensor> acts;
    acts.reserve(net.layers().size() + 1);
    acts.push_back(batch);
    for (const auto& layer : net.layers()) acts.push_back(affine_activate(layer, acts.back()));
    return acts;
}

double loss_from_output(const Tensor& output, const Tensor& targets, std::span<const double> w) {
    double total = 0.0;
    for (std::size_t r = 0; r < output.rows(); ++r) {
        if (w[r] == 0.0) continue;
        const auto o = output.row(r);
        const auto t = targets.row(r);
        double sq = 0.0;
        for (std::size_t c = 0; c < o.size(); ++c) {
            const double diff = t[c] - o[c];
            sq += diff * diff;
        }
        total += w[r] * sq;
    }
    return total;
}

template <class Fn>
void for_each_tensor(Gradients& g, Fn&& fn) {
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
        fn(g.weights[i]);
        fn(g.bias[i]);
    }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

NetworkSpec default_spec(std::size_t input_dim) {
    if (input_dim == 0) throw std::invalid_argument("default_spec: zero input dimension");
    const std::size_t half = (input_dim + 1) / 2;
    const std::size_t hidden = std::max<std::size_t>(64, half);
    const std::size_t latent = input_dim < 32 ? std::max<std::size_t>(2, half) : 32;
    return NetworkSpec{{input_dim, hidden, latent, hidden, input_dim}};
}

void validate_spec(const NetworkSpec& spec) {
    const auto& w = spec.widths;
    if (w.size() < 3 || w.size() % 2 == 0) {
        throw std::invalid_argument("autoencoder width list needs an odd length >= 3");
    }
    if (std::any_of(w.begin(), w.end(), [](std::size_t x) { return x == 0; })) {
        throw std::invalid_argument("zero-width layer in width list");
    }
    for (std::size_t i = 0; i < w.size() / 2; ++i) {
        if (w[i] != w[w.size() - 1 - i]) {
            throw std::invalid_argument("decoder widths do not mirror the encoder");
        }
    }
    const std::size_t latent = w[w.size() / 2];
    if (*std::min_element(w.begin(), w.end()) != latent) {
        throw std::invalid_argument("middle layer must be the narrowest (latent) layer");
    }
}

Network Network::from_layers(std::vector<DenseLayer> layers, std::uint64_t seed) {
    if (layers.empty()) throw std::invalid_argument("network needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.in_dim() == 0 || l.out_dim() == 0) throw std::invalid_argument("zero-width layer");
        if (l.bias.rows() != l.out_dim() || l.bias.cols() != 1) {
            throw std::invalid_argument("bias shape inconsistent with weights in layer " + std::to_string(i));
        }
        if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
            throw std::invalid_argument("layer " + std::to_string(i) + " input width mismatch");
        }
    }
    if (layers.front().in_dim() != layers.back().out_dim()) {
        throw std::invalid_argument("autoencoder output width must equal input width");
    }
    Network net;
    net.layers_ = std::move(layers);
    net.seed_ = seed;
    net.latent_dim_ = net.layers_.front().in_dim();
    for (const auto& l : net.layers_) net.latent_dim_ = std::min(net.latent_dim_, l.out_dim());
    return net;
}

std::vector<std::size_t> Network::widths() const {
    std::vector<std::size_t> w;
    if (layers_.empty()) return w;
    w.push_back(layers_.front().in_dim());
    for (const auto& l : layers_) w.push_back(l.out_dim());
    return w;
}

std::size_t Network::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

bool operator==(const Network& a, const Network& b) {
    if (a.seed_ != b.seed_ || a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        const auto& x = a.layers_[i];
        const auto& y = b.layers_[i];
        if (x.activation != y.activation || !(x.weights == y.weights) || !(x.bias == y.bias)) return false;
    }
    return true;
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    SplitMix64 rng(seed);
    std::vector<DenseLayer> layers;
    const auto& w = spec.widths;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        DenseLayer layer;
        layer.weights = Tensor(w[i + 1], w[i]);
        layer.bias = Tensor(w[i + 1], 1);
        layer.activation = (i + 2 == w.size()) ? spec.output : spec.hidden;
        const double limit = std::sqrt(6.0 / static_cast<double>(w[i] + w[i + 1]));
        for (double& v : layer.weights.values()) v = rng.uniform(-limit, limit);
        layers.push_back(std::move(layer));
    }
    return Network::from_layers(std::move(layers), seed);
}

Tensor forward(const Network& net, const Tensor& batch) {
    check_batch(net, batch);
    Tensor current = affine_activate(net.layers().front(), batch);
    for (std::size_t i = 1; i < net.layers().size(); ++i) current = affine_activate(net.layers()[i], current);
    return current;
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
        g.weights.emplace_back(l.weights.rows(), l.weights.cols());
        g.bias.emplace_back(l.bias.rows(), 1);
    }
    return g;
}

double Gradients::max_abs() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (double v : weights[i].values()) m = std::max(m, std::abs(v));
        for (double v : bias[i].values()) m = std::max(m, std::abs(v));
    }
    return m;
}

double weighted_loss(const Network& net, const Tensor& batch, const Tensor& targets,
                     std::span<const double> row_weights) {
    check_batch(net, batch);
    check_targets(batch, targets, row_weights);
    return loss_from_output(forward(net, batch), targets, row_weights);
}

Gradients backward(const Network& net, const Tensor& batch, const Tensor& targets,
                   std::span<const double> row_weights) {
    double unused = 0.0;
    return backward(net, batch, targets, row_weights, unused);
}

Gradients backward(const Network& net, const Tensor& batch, const Tensor& targets,
                   std::span<const double> row_weights, double& loss) {
    check_batch(net, batch);
    check_targets(batch, targets, row_weights);

    const auto acts = forward_trace(net, batch);
    const Tensor& output = acts.back();
    loss = loss_from_output(output, targets, row_weights);
    if (!std::isfinite(loss)) throw std::runtime_error("backward: non-finite loss");

    const auto layers = net.layers();
    const std::size_t n_layers = layers.size();

    // delta = dLoss/dz for the current layer, rows = batch rows.
    Tensor delta(output.rows(), output.cols());
    for (std::size_t r = 0; r < output.rows(); ++r) {
        const double w = row_weights[r];
        for (std::size_t c = 0; c < output.cols(); ++c) {
            const double out = output(r, c);
            delta(r, c) = -2.0 * w * (targets(r, c) - out) * activation_slope(layers.back().activation, out);
        }
    }

    Gradients grads = Gradients::zeros_like(net);
    for (std::size_t li = n_layers; li-- > 0;) {
        const Tensor& input = acts[li];
        const auto d = as_matrix(delta);
        as_matrix(grads.weights[li]).noalias() = d.transpose() * as_matrix(input);
        as_matrix(grads.bias[li]).noalias() = d.colwise().sum().transpose();
        if (li == 0) break;
        Tensor next(delta.rows(), layers[li].in_dim());
        as_matrix(next).noalias() = d * as_matrix(layers[li].weights);
        const Activation prev_act = layers[li - 1].activation;
        auto nv = next.values();
        const auto iv = input.values();
        for (std::size_t k = 0; k < nv.size(); ++k) nv[k] *= activation_slope(prev_act, iv[k]);
        delta = std::move(next);
    }
    for (std::size_t i = 0; i < n_layers; ++i) {
        if (!grads.weights[i].all_finite() || !grads.bias[i].all_finite()) {
            throw std::runtime_error("backward: non-finite gradient in layer " + std::to_string(i));
        }
    }
    return grads;
}

Gradients numeric_gradient(const Network& net, const Tensor& batch, const Tensor& targets,
                           std::span<const double> row_weights, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("numeric_gradient: step h must be positive");
    check_batch(net, batch);
    check_targets(batch, targets, row_weights);

    Network probe = net;
    Gradients grads = Gradients::zeros_like(net);
    auto estimate = [&](double& param) {
        const double saved = param;
        param = saved + h;
        const double up = weighted_loss(probe, batch, targets, row_weights);
        param = saved - h;
        const double down = weighted_loss(probe, batch, targets, row_weights);
        param = saved;
        return (up - down) / (2.0 * h);
    };
    for (std::size_t li = 0; li < probe.layers().size(); ++li) {
        auto& layer = probe.layers()[li];
        auto wv = layer.weights.values();
        for (std::size_t k = 0; k < wv.size(); ++k) grads.weights[li].values()[k] = estimate(wv[k]);
        auto bv = layer.bias.values();
        for (std::size_t k = 0; k < bv.size(); ++k) grads.bias[li].values()[k] = estimate(bv[k]);
    }
    return grads;
}

double max_relative_error(const Gradients& a, const Gradients& b, double floor) {
    if (a.weights.size() != b.weights.size()) throw std::invalid_argument("gradient layouts differ");
    double worst = 0.0;
    auto compare = [&](const Tensor& x, const Tensor& y) {
        if (!x.same_shape(y)) throw std::invalid_argument("gradient shapes differ");
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double u = x.values()[k];
            const double v = y.values()[k];
            const double scale = std::max({std::abs(u), std::abs(v), floor});
            worst = std::max(worst, std::abs(u - v) / scale);
        }
    };
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        compare(a.weights[i], b.weights[i]);
        compare(a.bias[i], b.bias[i]);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::string_view kNetworkTag = "aesad-network";
constexpr int kNetworkVersion = 1;

void write_values(std::ostream& out, std::span<const double> values) {
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
        if (ec != std::errc{}) throw std::runtime_error("save_network: cannot format value");
        if (i) out.put(' ');
        out.write(buf, end - buf);
    }
    out.put('\n');
}

void read_values(std::istream& in, std::span<double> values) {
    std::string token;
    for (double& v : values) {
        if (!(in >> token)) throw std::runtime_error("load_network: truncated parameter block");
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size()) {
            throw std::runtime_error("load_network: bad number '" + token + "'");
        }
    }
}

void expect(std::istream& in, std::string_view word) {
    std::string got;
    if (!(in >> got) || got != word) {
        throw std::runtime_error("load_network: expected '" + std::string(word) + "', got '" + got + "'");
    }
}

}  // namespace

void save_network(std::ostream& out, const Network& net) {
    out << kNetworkTag << ' ' << kNetworkVersion << '\n';
    out << "seed " << net.seed() << '\n';
    out << "layers " << net.layers().size() << '\n';
    for (const auto& l : net.layers()) {
        out << "layer " << l.out_dim() << ' ' << l.in_dim() << ' ' << to_string(l.activation) << '\n';
        out << "w ";
        write_values(out, l.weights.values());
        out << "b ";
        write_values(out, l.bias.values());
    }
    out << "end\n";
}

Network load_network(std::istream& in) {
    expect(in, kNetworkTag);
    int version = 0;
    if (!(in >> version) || version != kNetworkVersion) {
        throw std::runtime_error("load_network: unsupported version " + std::to_string(version));
    }
    std::uint64_t seed = 0;
    std::size_t n_layers = 0;
    expect(in, "seed");
    in >> seed;
    expect(in, "layers");
    in >> n_layers;
    if (!in || n_layers == 0) throw std::runtime_error("load_network: bad header");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i < n_layers; ++i) {
        std::size_t out_dim = 0, in_dim = 0;
        std::string act;
        expect(in, "layer");
        if (!(in >> out_dim >> in_dim >> act)) throw std::runtime_error("load_network: bad layer header");
        DenseLayer layer;
        layer.activation = parse_activation(act);
        layer.weights = Tensor(out_dim, in_dim);
        layer.bias = Tensor(out_dim, 1);
        expect(in, "w");
        read_values(in, layer.weights.values());
        expect(in, "b");
        read_values(in, layer.bias.values());
        layers.push_back(std::move(layer));
    }
    expect(in, "end");
    return Network::from_layers(std::move(layers), seed);
}

void save_network(const std::string& path, const Network& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_network(out, net);
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    return load_network(in);
}

}  // namespace aesad
