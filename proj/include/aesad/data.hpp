#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesad/tensor.hpp"

namespace aesad {

// Label convention: 0 = normal, 1 = anomaly.
struct Dataset {
    Tensor features;              // n x d
    std::vector<int> labels;      // n
    std::vector<int> class_ids;   // n, or empty when the source has no classes
    std::string name;

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }
    bool has_class_ids() const noexcept { return !class_ids.empty(); }
    std::size_t count_label(int label) const noexcept;

    // Throws std::invalid_argument on length mismatches or labels outside {0,1}.
    void validate() const;
    // Additionally requires every feature value to lie in [0, 1].
    void validate_unit_range() const;

    Dataset subset(std::span<const std::size_t> rows) const;
    void append(const Dataset& other);
};

Dataset load_csv(const std::string& path, std::string_view label_column,
                 std::optional<std::string_view> class_column = std::nullopt);
Dataset parse_csv(std::istream& in, std::string_view label_column,
                  std::optional<std::string_view> class_column = std::nullopt,
                  std::string name = "csv");

// Writes features, label and (when present) class columns with a header row.
void write_csv(std::ostream& out, const Dataset& data);

// IDX image/label pair (MNIST layout). Pixels scale to p / 255; class_ids
// come from the label file and labels start out all 0.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
Dataset parse_idx(std::istream& images, std::istream& labels, std::string name = "idx");

// Per-feature min/max fitted on training rows.
struct MinMaxScaler {
    std::vector<double> min;
    std::vector<double> max;

    // (v - min) / (max - min), clamped to [0, 1]; constant features map to 0.5.
    Tensor transform(const Tensor& x) const;
    Dataset transform(const Dataset& data) const;
};

MinMaxScaler fit_minmax(const Tensor& x, std::span<const std::size_t> fit_rows);

struct NormalizeResult {
    Dataset data;
    MinMaxScaler scaler;
};

NormalizeResult normalize_minmax(const Dataset& data, std::span<const std::size_t> fit_rows);

enum class Protocol { one_vs_one, one_vs_many, one_vs_all, many_vs_many, odds };

std::string_view to_string(Protocol p) noexcept;
Protocol parse_protocol(std::string_view name);

struct SplitSpec {
    Protocol protocol = Protocol::one_vs_one;
    std::vector<int> normal_classes;
    std::vector<int> seen_anomaly_classes;
    std::size_t s = 8;
    // When set, exactly this many labeled anomalies are drawn from each
    // seen class and s is ignored.
    std::optional<std::size_t> per_class_quota;
    std::uint64_t seed = 0;
};

// Checks class-set shapes against the protocol. For one-vs-all an empty
// seen set is filled with every non-normal class present in `classes`.
SplitSpec resolve_split_spec(SplitSpec spec, std::span<const int> classes);

struct Split {
    Dataset train;
    Dataset test;
    // Row indices into the source pools, in the order the rows appear.
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    // Seen-class training rows that were not picked as labeled anomalies.
    std::vector<std::size_t> unused_anomaly_rows;
};

// Train: every normal-class row of train_pool (label 0) followed by the
// seeded selection of seen-class rows (label 1). Test: every row of
// test_pool relabeled 0 for normal classes and 1 otherwise.
Split build_split(const Dataset& train_pool, const Dataset& test_pool, const SplitSpec& spec);

// ODDS-style split of a labeled dataset: a seeded 60% of normals go to
// train, plus floor(0.05 / 0.95 * n_train_normals) anomalies (capped at the
// number available) so anomalies form at most 5% of train. Everything else
// is test.
Split build_odds_split(const Dataset& data, std::uint64_t seed);

struct PollutionSpec {
    double rate = 0.0;  // mislabeled rows as a fraction of train inliers
    std::uint64_t seed = 0;
    // When set, this many rows per pool class are injected instead of using rate.
    std::optional<std::size_t> per_class_count;
};

struct PollutionResult {
    Dataset train;
    std::vector<std::size_t> injected_rows;  // indices into the pool
};

// Appends pool rows labeled 0. Count = round(rate * n_inliers) where
// n_inliers counts label-0 rows of `train`.
PollutionResult inject_pollution(const Dataset& train, const Dataset& anomaly_pool, const PollutionSpec& spec);

// Text manifest: one line per split with its sorted row indices.
std::string split_manifest(const Split& split, const std::vector<std::size_t>& polluted_rows = {});

// FNV-1a 64 of a string, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace aesad
