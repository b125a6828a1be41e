#include "aesad/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aesad {

namespace {

double f_component(FKind kind, double v) noexcept {
    switch (kind) {
        case FKind::f0: return 1.0 - v;
        case FKind::f1: return v <= 0.5 ? 1.0 : 0.0;
        case FKind::f2: return v <= 0.5 ? v + 0.5 : v - 0.5;
    }
    return v;
}

void check_label(int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1, got " + std::to_string(label));
}

}  // namespace

std::string_view to_string(FKind kind) noexcept {
    switch (kind) {
        case FKind::f0: return "f0";
        case FKind::f1: return "f1";
        case FKind::f2: return "f2";
    }
    return "f0";
}

FKind parse_f_kind(std::string_view name) {
    if (name == "f0" || name == "F0") return FKind::f0;
    if (name == "f1" || name == "F1") return FKind::f1;
    if (name == "f2" || name == "F2") return FKind::f2;
    throw std::invalid_argument("unknown f_kind '" + std::string(name) + "' (expected f0|f1|f2)");
}

void apply_f(FKind kind, std::span<const double> x, std::span<double> out) {
    if (out.size() != x.size()) throw std::invalid_argument("apply_f: output length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("apply_f: component " + std::to_string(i) + " outside [0,1]");
        }
        out[i] = f_component(kind, v);
    }
}

std::vector<double> apply_f(FKind kind, std::span<const double> x) {
    std::vector<double> out(x.size());
    apply_f(kind, x, out);
    return out;
}

double reconstruction_error(std::span<const double> x, std::span<const double> xhat) {
    if (x.size() != xhat.size()) throw std::invalid_argument("reconstruction_error: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - xhat[i];
        sum += d * d;
    }
    return sum;
}

double aesad_loss(std::span<const double> x, std::span<const double> xhat, int label,
                  const LossConfig& cfg) {
    check_label(label);
    if (label == 0) return reconstruction_error(x, xhat);
    return cfg.lambda * reconstruction_error(apply_f(cfg.f_kind, x), xhat);
}

RegressionTarget target_for(std::span<const double> x, int label, FKind kind, double lambda) {
    check_label(label);
    if (label == 0) return {std::vector<double>(x.begin(), x.end()), 1.0};
    return {apply_f(kind, x), lambda};
}

double lambda_schedule(double alpha, std::size_t n_normal, std::size_t n_anomalies) {
    if (n_anomalies == 0) throw std::invalid_argument("lambda_schedule: no labeled anomalies (s = 0)");
    if (n_normal == 0) throw std::invalid_argument("lambda_schedule: no normal rows (n = 0)");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("lambda_schedule: alpha must be >= 0");
    const double ratio = static_cast<double>(n_normal) / static_cast<double>(n_anomalies);
    // (1 - alpha) * 1 + alpha * ratio, exact at both endpoints.
    return std::fma(alpha, ratio, 1.0 - alpha);
}

std::vector<double> alpha_grid(double lo, double hi, std::size_t k) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("alpha_grid: need 0 < lo < hi");
    }
    if (k < 2) throw std::invalid_argument("alpha_grid: need at least 2 values");
    std::vector<double> grid(k);
    const double ratio = hi / lo;
    for (std::size_t i = 0; i < k; ++i) {
        grid[i] = lo * std::pow(ratio, static_cast<double>(i) / static_cast<double>(k - 1));
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

}  // namespace aesad
