#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace aesad {

// Transform applied to labeled anomalies to build their reconstruction target.
//   f0: 1 - x (negative image)
//   f1: 1 if x <= 1/2 else 0
//   f2: x + 1/2 if x <= 1/2 else x - 1/2
// x = 1/2 falls in the lower branch for f1 and f2.
enum class FKind { f0, f1, f2 };

std::string_view to_string(FKind kind) noexcept;
FKind parse_f_kind(std::string_view name);

struct LossConfig {
    double lambda = 1.0;
    FKind f_kind = FKind::f0;
};

// Throws std::invalid_argument if any component lies outside [0, 1].
std::vector<double> apply_f(FKind kind, std::span<const double> x);
void apply_f(FKind kind, std::span<const double> x, std::span<double> out);

// Squared Euclidean distance; doubles as the anomaly score.
double reconstruction_error(std::span<const double> x, std::span<const double> xhat);

// (1 - y) ||x - xhat||^2 + lambda * y * ||F(x) - xhat||^2
double aesad_loss(std::span<const double> x, std::span<const double> xhat, int label,
                  const LossConfig& cfg);

// The loss above as a weighted regression: aesad_loss == weight * ||target - xhat||^2.
struct RegressionTarget {
    std::vector<double> target;
    double weight = 1.0;
};

RegressionTarget target_for(std::span<const double> x, int label, FKind kind, double lambda);

// lambda(alpha) = 1 + alpha * (n / s - 1): 1 at alpha = 0, n / s at alpha = 1.
double lambda_schedule(double alpha, std::size_t n_normal, std::size_t n_anomalies);

// k values lo * (hi / lo)^(i / (k - 1)); endpoints are exactly lo and hi.
std::vector<double> alpha_grid(double lo, double hi, std::size_t k);

}  // namespace aesad
