#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "aesad/adam.hpp"
#include "aesad/data.hpp"
#include "aesad/loss.hpp"
#include "aesad/network.hpp"

namespace aesad {

enum class Method { aesad, standard_ae, neg_ae };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);

struct TrainConfig {
    Method method = Method::aesad;
    FKind f_kind = FKind::f0;
    // At most one of lambda / alpha; neither means alpha = 0.1.
    std::optional<double> lambda;
    std::optional<double> alpha;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    AdamConfig adam;
    std::uint64_t seed = 0;
    // Evaluate test AUC every this many epochs when a test set is given; 0 disables.
    std::size_t eval_every = 1;
    // Neg-AE: ascent phase length as a fraction of epochs (at least one epoch).
    double neg_phase_fraction = 0.2;

    void validate() const;
};

inline constexpr double kDefaultAlpha = 0.1;

// lambda for a training set with n label-0 rows and s label-1 rows.
double resolve_lambda(const TrainConfig& cfg, std::size_t n_normal, std::size_t n_anomalies);

struct TrainReport {
    std::vector<double> loss;          // one entry per epoch
    std::vector<std::size_t> auc_epochs;  // 1-based epochs where test AUC was measured
    std::vector<double> auc;
    double lambda = 1.0;
    double wall_seconds = 0.0;
    std::size_t final_epoch = 0;

    // epoch,loss,auc ; auc blank on epochs without evaluation. Wall time is
    // deliberately left out so reruns produce identical files.
    void write_csv(std::ostream& out) const;
};

// Dispatches on cfg.method. For aesad each epoch shuffles the rows with a
// seeded generator, then runs minibatches of the weighted regression
// mean_r w_r ||t_r - xhat_r||^2 where (t_r, w_r) = target_for(x_r, y_r).
TrainReport train(Network& net, const Dataset& train_set, const TrainConfig& cfg,
                  const Dataset* test_set = nullptr);

// Plain reconstruction loss on label-0 rows only; labeled anomalies are dropped.
TrainReport train_standard(Network& net, const Dataset& train_set, const TrainConfig& cfg,
                           const Dataset* test_set = nullptr);

// Phase 1: train_standard for cfg.epochs. Phase 2: gradient ascent of the
// reconstruction error on label-1 rows; rows whose error has reached d (the
// largest possible value) stop contributing.
TrainReport train_neg(Network& net, const Dataset& train_set, const TrainConfig& cfg,
                      const Dataset* test_set = nullptr);

// Anomaly score per row: reconstruction_error(row, forward(net, row)).
std::vector<double> score(const Network& net, const Tensor& rows);

}  // namespace aesad
