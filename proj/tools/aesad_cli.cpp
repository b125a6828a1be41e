// aesad: command-line front end for training and evaluating AE-SAD models.
//
//   aesad train    --config exp.json --out runs/a
//   aesad evaluate --model runs/a/model.txt --data test.csv --out runs/a/eval
//   aesad evaluate --model runs/a/model.txt --config exp.json --out runs/a/eval
//   aesad grid     --config grid.json --out runs/grid --workers 4
//   aesad compare  --config cmp.json --out runs/cmp

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aesad/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "override the base seed");
    cmd->add_option("--workers", args.workers, "parallel runs")->check(CLI::PositiveNumber);
}

aesad::CommandOptions to_options(const CommonArgs& args) {
    aesad::CommandOptions opts;
    opts.out_dir = args.out;
    opts.seed = args.seed;
    opts.workers = args.workers;
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised anomaly detection with AE-SAD autoencoders"};
    app.require_subcommand(1);

    CommonArgs train_args, grid_args, compare_args;
    auto* train = app.add_subcommand("train", "train one model and write model, metrics and manifest");
    add_common(train, train_args);

    auto* grid = app.add_subcommand("grid", "sweep s x alpha x seeds");
    add_common(grid, grid_args);

    auto* compare = app.add_subcommand("compare", "train several methods on identical splits");
    add_common(compare, compare_args);

    aesad::EvaluateOptions eval_opts;
    std::string eval_model, eval_data, eval_out = "out", eval_class;
    auto* evaluate = app.add_subcommand("evaluate", "score a CSV with a trained model");
    evaluate->add_option("--model", eval_model, "model file written by train")->required()->check(CLI::ExistingFile);
    std::string eval_config;
    evaluate->add_option("--config", eval_config, "take data, columns and normal classes from a train config")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--data", eval_data, "CSV with a header row")->check(CLI::ExistingFile);
    evaluate->add_option("--label-column", eval_opts.label_column, "label column name");
    evaluate->add_option("--class-column", eval_class, "optional class column name");
    evaluate->add_option("--normal-classes", eval_opts.normal_classes, "derive labels: these classes are normal");
    evaluate->add_option("--out", eval_out, "output directory");
    // Accepted for a uniform interface; evaluation is single-threaded and seedless.
    std::optional<std::uint64_t> unused_seed;
    std::size_t unused_workers = 1;
    evaluate->add_option("--seed", unused_seed, "ignored");
    evaluate->add_option("--workers", unused_workers, "ignored");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            aesad::cmd_train(aesad::load_config(train_args.config), to_options(train_args));
        } else if (*grid) {
            aesad::cmd_grid(aesad::load_config(grid_args.config), to_options(grid_args));
        } else if (*compare) {
            aesad::cmd_compare(aesad::load_config(compare_args.config), to_options(compare_args));
        } else if (*evaluate) {
            eval_opts.model = eval_model;
            if (!eval_config.empty()) {
                const auto cfg = aesad::load_config(eval_config);
                if (cfg.data.format != aesad::DataSource::Format::csv) {
                    throw aesad::ConfigError("data.format: evaluate reads csv only");
                }
                eval_opts.data = cfg.data.test;
                eval_opts.label_column = cfg.data.label_column;
                if (cfg.data.class_column) {
                    eval_opts.class_column = *cfg.data.class_column;
                    if (eval_opts.normal_classes.empty()) eval_opts.normal_classes = cfg.split.normal_classes;
                }
            }
            if (!eval_data.empty()) eval_opts.data = eval_data;
            if (eval_opts.data.empty()) throw std::invalid_argument("evaluate: give --data or --config");
            eval_opts.out_dir = eval_out;
            if (!eval_class.empty()) eval_opts.class_column = eval_class;
            const auto report = aesad::cmd_evaluate(eval_opts);
            std::cout << "auc " << aesad::format_real(report.overall_auc) << '\n';
        }
    } catch (const aesad::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
