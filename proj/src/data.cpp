#include "aesad/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aesad/rng.hpp"

namespace aesad {

// ---------------------------------------------------------------------------
// Dataset

std::size_t Dataset::count_label(int label) const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void Dataset::validate() const {
    if (labels.size() != features.rows()) {
        throw std::invalid_argument("dataset '" + name + "': label count differs from row count");
    }
    if (!class_ids.empty() && class_ids.size() != features.rows()) {
        throw std::invalid_argument("dataset '" + name + "': class id count differs from row count");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("dataset '" + name + "': label outside {0,1}");
    }
}

void Dataset::validate_unit_range() const {
    validate();
    for (double v : features.values()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("dataset '" + name + "': feature value outside [0,1]");
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.name = name;
    out.features = features.select_rows(rows);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(labels.at(r));
    if (has_class_ids()) {
        out.class_ids.reserve(rows.size());
        for (std::size_t r : rows) out.class_ids.push_back(class_ids.at(r));
    }
    return out;
}

void Dataset::append(const Dataset& other) {
    if (other.size() == 0) return;
    if (size() > 0 && has_class_ids() != other.has_class_ids()) {
        throw std::invalid_argument("Dataset::append: class id presence differs");
    }
    const bool was_empty = size() == 0;
    features.append_rows(other.features);
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    if (was_empty || has_class_ids()) class_ids.insert(class_ids.end(), other.class_ids.begin(), other.class_ids.end());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_number(std::string_view cell, std::size_t line_no, std::string_view column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column '" + std::string(column) +
                                 "': non-numeric value '" + std::string(cell) + "'");
    }
    return v;
}

}  // namespace

Dataset parse_csv(std::istream& in, std::string_view label_column, std::optional<std::string_view> class_column,
                  std::string name) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw std::runtime_error("CSV '" + name + "' is empty");
    const std::string header_line = line;
    const auto header = split_fields(header_line);

    auto find_column = [&](std::string_view col) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), col);
        if (it == header.end()) throw std::runtime_error("CSV '" + name + "': missing column '" + std::string(col) + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t label_idx = find_column(label_column);
    const std::optional<std::size_t> class_idx =
        class_column ? std::optional<std::size_t>(find_column(*class_column)) : std::nullopt;

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_idx && (!class_idx || c != *class_idx)) feature_cols.push_back(c);
    }

    Dataset data;
    data.name = std::move(name);
    std::vector<double> values;
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t c : feature_cols) values.push_back(parse_number(fields[c], line_no, header[c]));
        const double y = parse_number(fields[label_idx], line_no, label_column);
        if (y != 0.0 && y != 1.0) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": label '" + std::string(fields[label_idx]) +
                                     "' is not 0 or 1");
        }
        data.labels.push_back(static_cast<int>(y));
        if (class_idx) {
            const double c = parse_number(fields[*class_idx], line_no, *class_column);
            if (c != std::floor(c)) throw std::runtime_error("line " + std::to_string(line_no) + ": class id must be an integer");
            data.class_ids.push_back(static_cast<int>(c));
        }
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("CSV '" + data.name + "' has no data rows");
    data.features = Tensor(rows, feature_cols.size(), std::move(values));
    return data;
}

Dataset load_csv(const std::string& path, std::string_view label_column, std::optional<std::string_view> class_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file '" + path + "'");
    return parse_csv(in, label_column, class_column, path);
}

void write_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t c = 0; c < data.dim(); ++c) out << 'x' << c << ',';
    out << "label";
    if (data.has_class_ids()) out << ",class";
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (double v : data.features.row(r)) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out.write(buf, end - buf);
            out.put(',');
        }
        out << data.labels[r];
        if (data.has_class_ids()) out << ',' << data.class_ids[r];
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw std::runtime_error(std::string("IDX ") + what + ": truncated header");
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

Dataset parse_idx(std::istream& images, std::istream& labels, std::string name) {
    if (read_be32(images, "images") != kIdxImagesMagic) throw std::runtime_error("IDX images: bad magic number");
    if (read_be32(labels, "labels") != kIdxLabelsMagic) throw std::runtime_error("IDX labels: bad magic number");
    const std::size_t n_images = read_be32(images, "images");
    const std::size_t height = read_be32(images, "images");
    const std::size_t width = read_be32(images, "images");
    const std::size_t n_labels = read_be32(labels, "labels");
    if (n_images != n_labels) {
        throw std::runtime_error("IDX: " + std::to_string(n_images) + " images but " + std::to_string(n_labels) + " labels");
    }
    const std::size_t d = height * width;
    if (d == 0) throw std::runtime_error("IDX images: zero-sized images");

    std::vector<unsigned char> pixels(n_images * d);
    if (!images.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
        throw std::runtime_error("IDX images: truncated pixel data");
    }
    std::vector<unsigned char> raw_labels(n_labels);
    if (!labels.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()))) {
        throw std::runtime_error("IDX labels: truncated label data");
    }

    Dataset data;
    data.name = std::move(name);
    data.features = Tensor(n_images, d);
    auto values = data.features.values();
    for (std::size_t i = 0; i < pixels.size(); ++i) values[i] = static_cast<double>(pixels[i]) / 255.0;
    data.labels.assign(n_images, 0);
    data.class_ids.assign(raw_labels.begin(), raw_labels.end());
    return data;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw std::runtime_error("cannot open IDX images '" + images_path + "'");
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw std::runtime_error("cannot open IDX labels '" + labels_path + "'");
    return parse_idx(images, labels, images_path);
}

// ---------------------------------------------------------------------------
// Normalization

MinMaxScaler fit_minmax(const Tensor& x, std::span<const std::size_t> fit_rows) {
    if (fit_rows.empty()) throw std::invalid_argument("fit_minmax: no rows to fit on");
    MinMaxScaler s;
    s.min.assign(x.cols(), 0.0);
    s.max.assign(x.cols(), 0.0);
    const auto first = x.row(fit_rows.front());
    std::copy(first.begin(), first.end(), s.min.begin());
    std::copy(first.begin(), first.end(), s.max.begin());
    for (std::size_t r : fit_rows) {
        if (r >= x.rows()) throw std::out_of_range("fit_minmax: row index out of range");
        const auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            s.min[c] = std::min(s.min[c], row[c]);
            s.max[c] = std::max(s.max[c], row[c]);
        }
    }
    return s;
}

Tensor MinMaxScaler::transform(const Tensor& x) const {
    if (x.cols() != min.size()) throw std::invalid_argument("MinMaxScaler: dimension mismatch");
    Tensor out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double range = max[c] - min[c];
            double v = range > 0.0 ? (x(r, c) - min[c]) / range : 0.5;
            out(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

Dataset MinMaxScaler::transform(const Dataset& data) const {
    Dataset out = data;
    out.features = transform(data.features);
    return out;
}

NormalizeResult normalize_minmax(const Dataset& data, std::span<const std::size_t> fit_rows) {
    MinMaxScaler scaler = fit_minmax(data.features, fit_rows);
    Dataset out = scaler.transform(data);
    return {std::move(out), std::move(scaler)};
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(Protocol p) noexcept {
    switch (p) {
        case Protocol::one_vs_one: return "one-vs-one";
        case Protocol::one_vs_many: return "one-vs-many";
        case Protocol::one_vs_all: return "one-vs-all";
        case Protocol::many_vs_many: return "many-vs-many";
        case Protocol::odds: return "odds";
    }
    return "one-vs-one";
}

Protocol parse_protocol(std::string_view name) {
    for (Protocol p : {Protocol::one_vs_one, Protocol::one_vs_many, Protocol::one_vs_all, Protocol::many_vs_many,
                       Protocol::odds}) {
        if (name == to_string(p)) return p;
    }
    throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
}

SplitSpec resolve_split_spec(SplitSpec spec, std::span<const int> classes) {
    const std::set<int> present(classes.begin(), classes.end());
    const std::set<int> normal(spec.normal_classes.begin(), spec.normal_classes.end());
    if (normal.empty()) throw std::invalid_argument("split: no normal classes given");

    if (spec.protocol == Protocol::one_vs_all && spec.seen_anomaly_classes.empty()) {
        for (int c : present) {
            if (!normal.count(c)) spec.seen_anomaly_classes.push_back(c);
        }
    }
    const std::set<int> seen(spec.seen_anomaly_classes.begin(), spec.seen_anomaly_classes.end());
    for (int c : seen) {
        if (normal.count(c)) throw std::invalid_argument("split: class " + std::to_string(c) + " is both normal and anomalous");
    }
    for (int c : normal) {
        if (!present.count(c)) throw std::invalid_argument("split: normal class " + std::to_string(c) + " not present");
    }
    for (int c : seen) {
        if (!present.count(c)) throw std::invalid_argument("split: anomaly class " + std::to_string(c) + " not present");
    }

    switch (spec.protocol) {
        case Protocol::one_vs_one:
            if (normal.size() != 1 || seen.size() != 1) throw std::invalid_argument("one-vs-one needs one normal and one anomaly class");
            break;
        case Protocol::one_vs_many:
            if (normal.size() != 1 || seen.size() < 2) throw std::invalid_argument("one-vs-many needs one normal and >= 2 anomaly classes");
            break;
        case Protocol::one_vs_all:
            if (normal.size() != 1 || seen.size() + 1 != present.size()) {
                throw std::invalid_argument("one-vs-all needs one normal class and every other class as anomalous");
            }
            break;
        case Protocol::many_vs_many:
            if (normal.size() < 2 || seen.empty()) throw std::invalid_argument("many-vs-many needs >= 2 normal and >= 1 anomaly classes");
            break;
        case Protocol::odds:
            throw std::invalid_argument("odds protocol uses build_odds_split, not class sets");
    }
    return spec;
}

Split build_split(const Dataset& train_pool, const Dataset& test_pool, const SplitSpec& raw_spec) {
    if (!train_pool.has_class_ids() || !test_pool.has_class_ids()) {
        throw std::invalid_argument("build_split: class-based protocols need class ids");
    }
    if (train_pool.dim() != test_pool.dim()) throw std::invalid_argument("build_split: train/test dimension mismatch");
    const SplitSpec spec = resolve_split_spec(raw_spec, train_pool.class_ids);
    const std::set<int> normal(spec.normal_classes.begin(), spec.normal_classes.end());

    Split split;
    std::map<int, std::vector<std::size_t>> seen_rows;
    for (int c : spec.seen_anomaly_classes) seen_rows[c];
    for (std::size_t r = 0; r < train_pool.size(); ++r) {
        const int c = train_pool.class_ids[r];
        if (normal.count(c)) split.train_rows.push_back(r);
        else if (auto it = seen_rows.find(c); it != seen_rows.end()) it->second.push_back(r);
    }
    const std::size_t n_normal = split.train_rows.size();

    SplitMix64 rng(spec.seed);
    std::vector<std::size_t> picked;
    if (spec.per_class_quota) {
        for (int c : spec.seen_anomaly_classes) {
            const auto& rows = seen_rows.at(c);
            if (*spec.per_class_quota > rows.size()) {
                throw std::invalid_argument("build_split: quota " + std::to_string(*spec.per_class_quota) +
                                            " exceeds the " + std::to_string(rows.size()) + " rows of class " + std::to_string(c));
            }
            for (std::size_t i : sample_without_replacement(rows.size(), *spec.per_class_quota, rng)) picked.push_back(rows[i]);
        }
    } else {
        std::vector<std::size_t> pooled;
        for (const auto& [c, rows] : seen_rows) pooled.insert(pooled.end(), rows.begin(), rows.end());
        std::sort(pooled.begin(), pooled.end());
        if (spec.s > pooled.size()) {
            throw std::invalid_argument("build_split: s = " + std::to_string(spec.s) + " exceeds the " +
                                        std::to_string(pooled.size()) + " available anomaly rows");
        }
        for (std::size_t i : sample_without_replacement(pooled.size(), spec.s, rng)) picked.push_back(pooled[i]);
    }
    std::sort(picked.begin(), picked.end());
    split.train_rows.insert(split.train_rows.end(), picked.begin(), picked.end());

    const std::set<std::size_t> picked_set(picked.begin(), picked.end());
    for (const auto& [c, rows] : seen_rows) {
        for (std::size_t r : rows) {
            if (!picked_set.count(r)) split.unused_anomaly_rows.push_back(r);
        }
    }
    std::sort(split.unused_anomaly_rows.begin(), split.unused_anomaly_rows.end());

    split.train = train_pool.subset(split.train_rows);
    for (std::size_t i = 0; i < split.train.size(); ++i) split.train.labels[i] = i < n_normal ? 0 : 1;

    split.test_rows.resize(test_pool.size());
    for (std::size_t r = 0; r < test_pool.size(); ++r) split.test_rows[r] = r;
    split.test = test_pool;
    for (std::size_t r = 0; r < split.test.size(); ++r) split.test.labels[r] = normal.count(split.test.class_ids[r]) ? 0 : 1;
    return split;
}

Split build_odds_split(const Dataset& data, std::uint64_t seed) {
    data.validate();
    std::vector<std::size_t> normals;
    std::vector<std::size_t> anomalies;
    for (std::size_t r = 0; r < data.size(); ++r) (data.labels[r] == 0 ? normals : anomalies).push_back(r);
    if (anomalies.empty()) throw std::invalid_argument("build_odds_split: dataset has no anomalies");
    if (normals.empty()) throw std::invalid_argument("build_odds_split: dataset has no normal rows");

    const std::size_t n_train_normals = (6 * normals.size() + 5) / 10;  // round-half-up of 60%
    const std::size_t n_train_anomalies = std::min(n_train_normals / 19, anomalies.size());

    SplitMix64 rng(seed);
    shuffle(std::span<std::size_t>(normals), rng);
    shuffle(std::span<std::size_t>(anomalies), rng);

    std::vector<std::size_t> train_normals(normals.begin(), normals.begin() + n_train_normals);
    std::vector<std::size_t> train_anomalies(anomalies.begin(), anomalies.begin() + n_train_anomalies);
    std::sort(train_normals.begin(), train_normals.end());
    std::sort(train_anomalies.begin(), train_anomalies.end());

    Split split;
    split.train_rows = train_normals;
    split.train_rows.insert(split.train_rows.end(), train_anomalies.begin(), train_anomalies.end());
    const std::set<std::size_t> in_train(split.train_rows.begin(), split.train_rows.end());
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (!in_train.count(r)) split.test_rows.push_back(r);
    }
    split.train = data.subset(split.train_rows);
    split.test = data.subset(split.test_rows);
    return split;
}

// ---------------------------------------------------------------------------
// Pollution

PollutionResult inject_pollution(const Dataset& train, const Dataset& anomaly_pool, const PollutionSpec& spec) {
    if (!(spec.rate >= 0.0) || !std::isfinite(spec.rate)) throw std::invalid_argument("pollution rate must be >= 0");
    if (anomaly_pool.size() > 0 && anomaly_pool.dim() != train.dim()) {
        throw std::invalid_argument("inject_pollution: pool dimension mismatch");
    }
    SplitMix64 rng(spec.seed);
    PollutionResult result;
    if (spec.per_class_count) {
        if (!anomaly_pool.has_class_ids()) throw std::invalid_argument("inject_pollution: per-class mode needs class ids");
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t r = 0; r < anomaly_pool.size(); ++r) by_class[anomaly_pool.class_ids[r]].push_back(r);
        for (const auto& [c, rows] : by_class) {
            if (*spec.per_class_count > rows.size()) {
                throw std::invalid_argument("inject_pollution: pool exhausted for class " + std::to_string(c));
            }
            for (std::size_t i : sample_without_replacement(rows.size(), *spec.per_class_count, rng)) {
                result.injected_rows.push_back(rows[i]);
            }
        }
    } else {
        const auto n_inliers = static_cast<double>(train.count_label(0));
        const auto count = static_cast<std::size_t>(std::llround(spec.rate * n_inliers));
        if (count > anomaly_pool.size()) {
            throw std::invalid_argument("inject_pollution: pool exhausted (" + std::to_string(count) + " rows requested, " +
                                        std::to_string(anomaly_pool.size()) + " available)");
        }
        result.injected_rows = sample_without_replacement(anomaly_pool.size(), count, rng);
    }
    std::sort(result.injected_rows.begin(), result.injected_rows.end());

    result.train = train;
    if (!result.injected_rows.empty()) {
        Dataset added = anomaly_pool.subset(result.injected_rows);
        std::fill(added.labels.begin(), added.labels.end(), 0);
        if (!train.has_class_ids()) added.class_ids.clear();
        result.train.append(added);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Manifests

std::string split_manifest(const Split& split, const std::vector<std::size_t>& polluted_rows) {
    std::ostringstream out;
    auto line = [&](std::string_view key, std::vector<std::size_t> rows) {
        std::sort(rows.begin(), rows.end());
        out << key << ' ' << rows.size() << ':';
        for (std::size_t r : rows) out << ' ' << r;
        out << '\n';
    };
    std::vector<std::size_t> normal_rows;
    std::vector<std::size_t> anomaly_rows;
    for (std::size_t i = 0; i < split.train_rows.size(); ++i) {
        (split.train.labels.at(i) == 0 ? normal_rows : anomaly_rows).push_back(split.train_rows[i]);
    }
    out << "# aesad split manifest v1\n";
    line("train_normal", normal_rows);
    line("train_anomaly", anomaly_rows);
    line("polluted", polluted_rows);
    line("test", split.test_rows);
    return out.str();
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace aesad
