#include "aesad/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "aesad/eval.hpp"
#include "aesad/rng.hpp"

namespace aesad {

namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::size_t kScoreChunk = 1024;

struct Objective {
    Tensor inputs;
    Tensor targets;
    std::vector<double> weights;
};

Tensor gather(const Tensor& src, std::span<const std::size_t> rows) { return src.select_rows(rows); }

class EpochRunner {
public:
    EpochRunner(Network& net, const TrainConfig& cfg, const Dataset* test, TrainReport& report)
        : net_(net), cfg_(cfg), test_(test), report_(report), adam_(net, cfg.adam),
          rng_(derive_seed(cfg.seed, kShuffleStream)) {}

    // Descent on mean_r w_r ||t_r - xhat_r||^2.
    void descend(const Objective& obj, std::size_t epochs) {
        const std::size_t n = obj.inputs.rows();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t e = 0; e < epochs; ++e) {
            shuffle(std::span<std::size_t>(order), rng_);
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
                const std::size_t stop = std::min(n, start + cfg_.batch_size);
                const std::span<const std::size_t> idx(order.data() + start, stop - start);
                const Tensor batch = gather(obj.inputs, idx);
                const Tensor targets = gather(obj.targets, idx);
                const double inv = 1.0 / static_cast<double>(idx.size());
                std::vector<double> w(idx.size());
                for (std::size_t i = 0; i < idx.size(); ++i) w[i] = obj.weights[idx[i]] * inv;
                double batch_loss = 0.0;
                const Gradients g = backward(net_, batch, targets, w, batch_loss);
                adam_step(net_, g, adam_);
                epoch_loss += batch_loss * static_cast<double>(idx.size());
            }
            finish_epoch(epoch_loss / static_cast<double>(n));
        }
    }

    // Ascent on mean_r min(||x_r - xhat_r||^2, d); a row stops contributing once it hits d.
    void ascend(const Tensor& inputs, std::size_t epochs) {
        const std::size_t n = inputs.rows();
        const double cap = static_cast<double>(inputs.cols());
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t e = 0; e < epochs; ++e) {
            shuffle(std::span<std::size_t>(order), rng_);
            double epoch_objective = 0.0;
            for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
                const std::size_t stop = std::min(n, start + cfg_.batch_size);
                const std::span<const std::size_t> idx(order.data() + start, stop - start);
                const Tensor batch = gather(inputs, idx);
                const Tensor recon = forward(net_, batch);
                const double inv = 1.0 / static_cast<double>(idx.size());
                std::vector<double> w(idx.size());
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    const double err = reconstruction_error(batch.row(i), recon.row(i));
                    epoch_objective -= std::min(err, cap);
                    w[i] = err < cap ? -inv : 0.0;
                }
                const Gradients g = backward(net_, batch, batch, w);
                adam_step(net_, g, adam_);
            }
            finish_epoch(epoch_objective / static_cast<double>(n));
        }
    }

private:
    void finish_epoch(double loss) {
        report_.loss.push_back(loss);
        const std::size_t epoch = report_.loss.size();
        report_.final_epoch = epoch;
        if (test_ && cfg_.eval_every > 0 && epoch % cfg_.eval_every == 0) {
            report_.auc_epochs.push_back(epoch);
            report_.auc.push_back(auc(score(net_, test_->features), test_->labels));
        }
    }

    Network& net_;
    const TrainConfig& cfg_;
    const Dataset* test_;
    TrainReport& report_;
    AdamState adam_;
    SplitMix64 rng_;
};

void check_train_inputs(const Network& net, const Dataset& train_set, const Dataset* test_set) {
    train_set.validate_unit_range();
    if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
    if (train_set.dim() != net.input_dim()) {
        throw std::invalid_argument("train: data has " + std::to_string(train_set.dim()) +
                                    " features, network expects " + std::to_string(net.input_dim()));
    }
    if (test_set) {
        test_set->validate_unit_range();
        if (test_set->dim() != net.input_dim()) throw std::invalid_argument("train: test set dimension mismatch");
    }
}

std::vector<std::size_t> rows_with_label(const Dataset& data, int label) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (data.labels[r] == label) rows.push_back(r);
    }
    return rows;
}

Objective reconstruction_objective(const Dataset& data, std::span<const std::size_t> rows) {
    Objective obj;
    obj.inputs = data.features.select_rows(rows);
    obj.targets = obj.inputs;
    obj.weights.assign(rows.size(), 1.0);
    return obj;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

TrainReport train_aesad(Network& net, const Dataset& train_set, const TrainConfig& cfg, const Dataset* test_set) {
    const auto start = Clock::now();
    TrainReport report;
    report.lambda = resolve_lambda(cfg, train_set.count_label(0), train_set.count_label(1));

    Objective obj;
    obj.inputs = train_set.features;
    obj.targets = Tensor(train_set.size(), train_set.dim());
    obj.weights.resize(train_set.size());
    for (std::size_t r = 0; r < train_set.size(); ++r) {
        auto t = target_for(train_set.features.row(r), train_set.labels[r], cfg.f_kind, report.lambda);
        std::copy(t.target.begin(), t.target.end(), obj.targets.row(r).begin());
        obj.weights[r] = t.weight;
    }
    EpochRunner runner(net, cfg, test_set, report);
    runner.descend(obj, cfg.epochs);
    report.wall_seconds = seconds_since(start);
    return report;
}

}  // namespace

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::aesad: return "aesad";
        case Method::standard_ae: return "standard_ae";
        case Method::neg_ae: return "neg_ae";
    }
    return "aesad";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::aesad, Method::standard_ae, Method::neg_ae}) {
        if (name == to_string(m)) return m;
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected aesad|standard_ae|neg_ae)");
}

void TrainConfig::validate() const {
    if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (lambda && alpha) throw std::invalid_argument("lambda and alpha are mutually exclusive");
    if (lambda && !(*lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (alpha && !(*alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(neg_phase_fraction > 0.0)) throw std::invalid_argument("neg_phase_fraction must be positive");
}

double resolve_lambda(const TrainConfig& cfg, std::size_t n_normal, std::size_t n_anomalies) {
    if (cfg.lambda) return *cfg.lambda;
    if (cfg.alpha) {
        if (n_anomalies == 0) throw std::invalid_argument("alpha given but the training set has no labeled anomalies");
        return lambda_schedule(*cfg.alpha, n_normal, n_anomalies);
    }
    // Default alpha; with no anomalies lambda never enters the loss.
    if (n_anomalies == 0 || n_normal == 0) return 1.0;
    return lambda_schedule(kDefaultAlpha, n_normal, n_anomalies);
}

void TrainReport::write_csv(std::ostream& out) const {
    out << "epoch,loss,auc\n";
    std::size_t k = 0;
    for (std::size_t e = 0; e < loss.size(); ++e) {
        out << (e + 1) << ',' << format_real(loss[e]) << ',';
        if (k < auc_epochs.size() && auc_epochs[k] == e + 1) out << format_real(auc[k++]);
        out << '\n';
    }
}

TrainReport train(Network& net, const Dataset& train_set, const TrainConfig& cfg, const Dataset* test_set) {
    cfg.validate();
    switch (cfg.method) {
        case Method::standard_ae: return train_standard(net, train_set, cfg, test_set);
        case Method::neg_ae: return train_neg(net, train_set, cfg, test_set);
        case Method::aesad: break;
    }
    check_train_inputs(net, train_set, test_set);
    return train_aesad(net, train_set, cfg, test_set);
}

TrainReport train_standard(Network& net, const Dataset& train_set, const TrainConfig& cfg, const Dataset* test_set) {
    cfg.validate();
    check_train_inputs(net, train_set, test_set);
    const auto normal_rows = rows_with_label(train_set, 0);
    if (normal_rows.empty()) throw std::invalid_argument("train_standard: no label-0 rows");
    const auto start = Clock::now();
    TrainReport report;
    EpochRunner runner(net, cfg, test_set, report);
    runner.descend(reconstruction_objective(train_set, normal_rows), cfg.epochs);
    report.wall_seconds = seconds_since(start);
    return report;
}

TrainReport train_neg(Network& net, const Dataset& train_set, const TrainConfig& cfg, const Dataset* test_set) {
    cfg.validate();
    check_train_inputs(net, train_set, test_set);
    const auto normal_rows = rows_with_label(train_set, 0);
    const auto anomaly_rows = rows_with_label(train_set, 1);
    if (normal_rows.empty()) throw std::invalid_argument("train_neg: no label-0 rows");
    if (anomaly_rows.empty()) throw std::invalid_argument("train_neg: no label-1 rows for the negative phase");

    const auto start = Clock::now();
    TrainReport report;
    EpochRunner runner(net, cfg, test_set, report);
    runner.descend(reconstruction_objective(train_set, normal_rows), cfg.epochs);
    const auto neg_epochs = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.neg_phase_fraction * static_cast<double>(cfg.epochs))));
    runner.ascend(train_set.features.select_rows(anomaly_rows), neg_epochs);
    report.wall_seconds = seconds_since(start);
    return report;
}

std::vector<double> score(const Network& net, const Tensor& rows) {
    if (rows.cols() != net.input_dim()) {
        throw std::invalid_argument("score: rows have " + std::to_string(rows.cols()) + " features, network expects " +
                                    std::to_string(net.input_dim()));
    }
    std::vector<double> out;
    out.reserve(rows.rows());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < rows.rows(); start += kScoreChunk) {
        const std::size_t stop = std::min(rows.rows(), start + kScoreChunk);
        idx.resize(stop - start);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor chunk = rows.select_rows(idx);
        const Tensor recon = forward(net, chunk);
        for (std::size_t i = 0; i < chunk.rows(); ++i) out.push_back(reconstruction_error(chunk.row(i), recon.row(i)));
    }
    return out;
}

}  // namespace aesad
