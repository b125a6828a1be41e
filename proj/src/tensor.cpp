#include "aesad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aesad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw std::invalid_argument("Tensor: " + std::to_string(values_.size()) +
                                    " values for shape " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    }
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("Tensor: ragged initializer");
        values_.insert(values_.end(), r.begin(), r.end());
    }
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) noexcept { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::select_rows(std::span<const std::size_t> indices) const {
    Tensor out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw std::out_of_range("Tensor::select_rows: index out of range");
        std::copy_n(values_.data() + indices[i] * cols_, cols_, out.values_.data() + i * cols_);
    }
    return out;
}

void Tensor::append_rows(const Tensor& other) {
    if (other.rows_ == 0) return;
    if (rows_ == 0 && values_.empty()) {
        *this = other;
        return;
    }
    if (other.cols_ != cols_) throw std::invalid_argument("Tensor::append_rows: column mismatch");
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
    rows_ += other.rows_;
}

}  // namespace aesad
