#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aesad/data.hpp"
#include "aesad/eval.hpp"
#include "aesad/network.hpp"
#include "aesad/trainer.hpp"

namespace aesad {

// Thrown for malformed configs; the message names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataSource {
    enum class Format { csv, idx };
    Format format = Format::csv;
    // csv: train/test are CSV paths. idx: train/test are image files,
    // train_labels/test_labels the matching label files.
    std::filesystem::path train;
    std::filesystem::path test;
    std::filesystem::path train_labels;
    std::filesystem::path test_labels;
    std::string label_column = "label";
    std::optional<std::string> class_column;
    // Min-max scaling fitted on the training split. Off by default for idx,
    // whose pixels are already in [0, 1].
    bool normalize = true;
};

struct CompareSetting {
    std::string name;
    SplitSpec split;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DataSource data;
    SplitSpec split;
    std::optional<PollutionSpec> pollution;
    TrainConfig train;
    std::optional<std::vector<std::size_t>> widths;
    std::size_t runs = 10;
    std::vector<std::size_t> grid_s;
    std::vector<double> grid_alpha;
    std::vector<Method> methods;
    std::vector<CompareSetting> settings;
};

// Reads the JSON config; relative paths resolve against the config's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);

// Checks ranges and that referenced files exist.
void validate_config(const ExperimentConfig& cfg);

// Source pools, loaded once per command.
struct DataPools {
    Dataset train;
    Dataset test;  // empty for the odds protocol
};

DataPools load_pools(const DataSource& source);

struct PreparedRun {
    Dataset train;
    Dataset test;
    std::optional<MinMaxScaler> scaler;
    std::string manifest;
    std::string manifest_hash;
};

// Seed streams derived from one run seed.
struct RunSeeds {
    std::uint64_t split;
    std::uint64_t pollution;
    std::uint64_t init;
    std::uint64_t train;
    static RunSeeds from(std::uint64_t run_seed);
};

PreparedRun prepare_run(const DataPools& pools, const DataSource& source, const SplitSpec& split,
                        const std::optional<PollutionSpec>& pollution, std::uint64_t run_seed);

NetworkSpec network_spec_for(const ExperimentConfig& cfg, std::size_t input_dim);

// Network plus the scaler it was trained behind.
struct Model {
    Network net;
    std::optional<MinMaxScaler> scaler;
};

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

struct CommandOptions {
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

// Writes model.txt, metrics.csv, manifest.json and split.txt.
void cmd_train(const ExperimentConfig& cfg, const CommandOptions& opts);

struct EvaluateOptions {
    std::filesystem::path model;
    std::filesystem::path data;
    std::string label_column = "label";
    std::optional<std::string> class_column;
    // When non-empty, labels are derived from class ids.
    std::vector<int> normal_classes;
    std::filesystem::path out_dir = "out";
};

// Writes scores.csv (row,score,label,class), report.txt and, with class ids, per_class.csv.
EvalReport cmd_evaluate(const EvaluateOptions& opts);

// Writes grid_long.csv (s,alpha,seed,auc) and grid_pivot.csv; completed cells
// are kept under cells/ and reused on rerun.
void cmd_grid(const ExperimentConfig& cfg, const CommandOptions& opts);

// Writes compare_runs.csv, win_matrix.csv and auc_table.csv.
void cmd_compare(const ExperimentConfig& cfg, const CommandOptions& opts);

// Runs fn(0..n-1) on up to `workers` threads. Exceptions propagate after
// all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace aesad
