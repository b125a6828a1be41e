#include "aesad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aesad/rng.hpp"

namespace aesad {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> known) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError((where.empty() ? key : where + "." + key) + ": unknown key");
        }
    }
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError((where.empty() ? key : where + "." + key) + ": " + e.what());
    }
}

template <class T>
void read_opt(const json& obj, const std::string& key, const std::string& where, T& out) {
    if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

SplitSpec parse_split(const json& j, const std::string& where, SplitSpec spec) {
    reject_unknown(j, where, {"name", "protocol", "normal_classes", "seen_anomaly_classes", "s", "per_class_quota"});
    if (j.contains("protocol")) {
        try {
            spec.protocol = parse_protocol(get_as<std::string>(j, "protocol", where));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + ".protocol: " + e.what());
        }
    }
    read_opt(j, "normal_classes", where, spec.normal_classes);
    read_opt(j, "seen_anomaly_classes", where, spec.seen_anomaly_classes);
    read_opt(j, "s", where, spec.s);
    if (j.contains("per_class_quota")) spec.per_class_quota = get_as<std::size_t>(j, "per_class_quota", where);
    return spec;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root, "", {"name", "data", "split", "pollution", "train", "runs", "grid", "compare"});

    ExperimentConfig cfg;
    read_opt(root, "name", "", cfg.name);
    read_opt(root, "runs", "", cfg.runs);

    if (!root.contains("data")) throw ConfigError("data: missing section");
    const json& d = root.at("data");
    reject_unknown(d, "data", {"format", "train", "test", "train_labels", "test_labels", "label_column", "class_column",
                               "normalize"});
    const std::string format = d.value("format", std::string("csv"));
    if (format == "csv") cfg.data.format = DataSource::Format::csv;
    else if (format == "idx") cfg.data.format = DataSource::Format::idx;
    else throw ConfigError("data.format: expected csv|idx, got '" + format + "'");
    cfg.data.normalize = cfg.data.format == DataSource::Format::csv;
    if (!d.contains("train")) throw ConfigError("data.train: missing path");
    cfg.data.train = resolve(base_dir, get_as<std::string>(d, "train", "data"));
    if (d.contains("test")) cfg.data.test = resolve(base_dir, get_as<std::string>(d, "test", "data"));
    if (d.contains("train_labels")) cfg.data.train_labels = resolve(base_dir, get_as<std::string>(d, "train_labels", "data"));
    if (d.contains("test_labels")) cfg.data.test_labels = resolve(base_dir, get_as<std::string>(d, "test_labels", "data"));
    read_opt(d, "label_column", "data", cfg.data.label_column);
    if (d.contains("class_column")) cfg.data.class_column = get_as<std::string>(d, "class_column", "data");
    read_opt(d, "normalize", "data", cfg.data.normalize);

    if (root.contains("split")) cfg.split = parse_split(root.at("split"), "split", cfg.split);

    if (root.contains("pollution")) {
        const json& p = root.at("pollution");
        reject_unknown(p, "pollution", {"rate", "per_class_count"});
        PollutionSpec ps;
        read_opt(p, "rate", "pollution", ps.rate);
        if (p.contains("per_class_count")) ps.per_class_count = get_as<std::size_t>(p, "per_class_count", "pollution");
        cfg.pollution = ps;
    }

    if (root.contains("train")) {
        const json& t = root.at("train");
        reject_unknown(t, "train", {"method", "f_kind", "lambda", "alpha", "epochs", "batch_size", "learning_rate",
                                    "beta1", "beta2", "epsilon", "seed", "eval_every", "neg_phase_fraction", "widths"});
        try {
            if (t.contains("method")) cfg.train.method = parse_method(get_as<std::string>(t, "method", "train"));
            if (t.contains("f_kind")) cfg.train.f_kind = parse_f_kind(get_as<std::string>(t, "f_kind", "train"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("train: ") + e.what());
        }
        if (t.contains("lambda")) cfg.train.lambda = get_as<double>(t, "lambda", "train");
        if (t.contains("alpha")) cfg.train.alpha = get_as<double>(t, "alpha", "train");
        if (cfg.train.lambda && cfg.train.alpha) throw ConfigError("train.lambda/train.alpha: mutually exclusive");
        read_opt(t, "epochs", "train", cfg.train.epochs);
        read_opt(t, "batch_size", "train", cfg.train.batch_size);
        read_opt(t, "learning_rate", "train", cfg.train.adam.learning_rate);
        read_opt(t, "beta1", "train", cfg.train.adam.beta1);
        read_opt(t, "beta2", "train", cfg.train.adam.beta2);
        read_opt(t, "epsilon", "train", cfg.train.adam.epsilon);
        read_opt(t, "seed", "train", cfg.train.seed);
        read_opt(t, "eval_every", "train", cfg.train.eval_every);
        read_opt(t, "neg_phase_fraction", "train", cfg.train.neg_phase_fraction);
        if (t.contains("widths")) cfg.widths = get_as<std::vector<std::size_t>>(t, "widths", "train");
    }

    if (root.contains("grid")) {
        const json& g = root.at("grid");
        reject_unknown(g, "grid", {"s", "alpha"});
        read_opt(g, "s", "grid", cfg.grid_s);
        read_opt(g, "alpha", "grid", cfg.grid_alpha);
    }

    if (root.contains("compare")) {
        const json& c = root.at("compare");
        reject_unknown(c, "compare", {"methods", "settings"});
        for (const auto& m : get_as<std::vector<std::string>>(c, "methods", "compare")) {
            try {
                cfg.methods.push_back(parse_method(m));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("compare.methods: ") + e.what());
            }
        }
        if (c.contains("settings")) {
            const json& settings = c.at("settings");
            if (!settings.is_array()) throw ConfigError("compare.settings: expected an array");
            for (std::size_t i = 0; i < settings.size(); ++i) {
                const std::string where = "compare.settings[" + std::to_string(i) + "]";
                CompareSetting s;
                s.split = parse_split(settings[i], where, cfg.split);
                s.name = settings[i].value("name", "setting" + std::to_string(i));
                cfg.settings.push_back(std::move(s));
            }
        }
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentConfig cfg = parse_config(buf.str(), path.parent_path());
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    auto require_file = [](const fs::path& p, const std::string& key) {
        if (p.empty()) throw ConfigError(key + ": missing path");
        if (!fs::exists(p)) throw ConfigError(key + ": file '" + p.string() + "' does not exist");
    };
    require_file(cfg.data.train, "data.train");
    const bool odds = cfg.split.protocol == Protocol::odds;
    if (!odds) require_file(cfg.data.test, "data.test");
    if (cfg.data.format == DataSource::Format::idx) {
        if (odds) throw ConfigError("split.protocol: odds needs a labeled CSV, not IDX data");
        require_file(cfg.data.train_labels, "data.train_labels");
        require_file(cfg.data.test_labels, "data.test_labels");
    } else if (!odds && !cfg.data.class_column) {
        throw ConfigError("data.class_column: class-based protocols need a class column");
    }
    if (cfg.runs == 0) throw ConfigError("runs: must be >= 1");
    if (odds && cfg.pollution) throw ConfigError("pollution: not supported with the odds protocol");
    try {
        cfg.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("train: ") + e.what());
    }
    if (cfg.widths) {
        try {
            validate_spec(NetworkSpec{*cfg.widths});
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("train.widths: ") + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Runs

DataPools load_pools(const DataSource& source) {
    DataPools pools;
    if (source.format == DataSource::Format::idx) {
        pools.train = load_idx(source.train.string(), source.train_labels.string());
        pools.test = load_idx(source.test.string(), source.test_labels.string());
        return pools;
    }
    std::optional<std::string_view> cls;
    if (source.class_column) cls = *source.class_column;
    pools.train = load_csv(source.train.string(), source.label_column, cls);
    if (!source.test.empty()) pools.test = load_csv(source.test.string(), source.label_column, cls);
    return pools;
}

RunSeeds RunSeeds::from(std::uint64_t run_seed) {
    return {derive_seed(run_seed, 11), derive_seed(run_seed, 12), derive_seed(run_seed, 13), derive_seed(run_seed, 14)};
}

PreparedRun prepare_run(const DataPools& pools, const DataSource& source, const SplitSpec& split_spec,
                        const std::optional<PollutionSpec>& pollution, std::uint64_t run_seed) {
    const RunSeeds seeds = RunSeeds::from(run_seed);
    Split split;
    std::vector<std::size_t> polluted;
    if (split_spec.protocol == Protocol::odds) {
        split = build_odds_split(pools.train, seeds.split);
    } else {
        SplitSpec spec = split_spec;
        spec.seed = seeds.split;
        split = build_split(pools.train, pools.test, spec);
        if (pollution) {
            PollutionSpec ps = *pollution;
            ps.seed = seeds.pollution;
            const Dataset pool = pools.train.subset(split.unused_anomaly_rows);
            PollutionResult res = inject_pollution(split.train, pool, ps);
            for (std::size_t i : res.injected_rows) polluted.push_back(split.unused_anomaly_rows[i]);
            split.train = std::move(res.train);
        }
    }

    PreparedRun run;
    run.manifest = split_manifest(split, polluted);
    run.manifest_hash = fnv1a_hex(run.manifest);
    if (source.normalize) {
        std::vector<std::size_t> all(split.train.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        MinMaxScaler scaler = fit_minmax(split.train.features, all);
        run.train = scaler.transform(split.train);
        run.test = scaler.transform(split.test);
        run.scaler = std::move(scaler);
    } else {
        run.train = std::move(split.train);
        run.test = std::move(split.test);
    }
    run.train.validate_unit_range();
    run.test.validate_unit_range();
    return run;
}

NetworkSpec network_spec_for(const ExperimentConfig& cfg, std::size_t input_dim) {
    if (!cfg.widths) return default_spec(input_dim);
    NetworkSpec spec{*cfg.widths};
    validate_spec(spec);
    if (spec.widths.front() != input_dim) {
        throw ConfigError("train.widths: first width " + std::to_string(spec.widths.front()) +
                          " differs from data dimension " + std::to_string(input_dim));
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Model files

namespace {

constexpr std::string_view kModelTag = "aesad-model";

void write_row(std::ostream& out, std::string_view key, const std::vector<double>& values) {
    out << key;
    for (double v : values) out << ' ' << format_real(v);
    out << '\n';
}

std::vector<double> read_row(std::istream& in, std::string_view key, std::size_t n) {
    std::string word;
    if (!(in >> word) || word != key) throw std::runtime_error("model file: expected '" + std::string(key) + "'");
    std::vector<double> values(n);
    for (double& v : values) {
        std::string token;
        if (!(in >> token)) throw std::runtime_error("model file: truncated scaler");
        v = std::stod(token);
    }
    return values;
}

}  // namespace

void save_model(const fs::path& path, const Model& model) {
    std::ostringstream out;
    out << kModelTag << " 1\n";
    save_network(out, model.net);
    if (model.scaler) {
        out << "scaler " << model.scaler->min.size() << '\n';
        write_row(out, "min", model.scaler->min);
        write_row(out, "max", model.scaler->max);
    } else {
        out << "scaler none\n";
    }
    write_file_atomic(path, out.str());
}

Model load_model(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != kModelTag || version != 1) {
        throw std::runtime_error("'" + path.string() + "' is not an aesad model file");
    }
    Model model;
    model.net = load_network(in);
    std::string word, count;
    if (!(in >> word >> count) || word != "scaler") throw std::runtime_error("model file: missing scaler block");
    if (count != "none") {
        const std::size_t d = std::stoul(count);
        MinMaxScaler s;
        s.min = read_row(in, "min", d);
        s.max = read_row(in, "max", d);
        model.scaler = std::move(s);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Utilities

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::uint64_t base_seed(const ExperimentConfig& cfg, const CommandOptions& opts) {
    return opts.seed.value_or(cfg.train.seed);
}

json split_json(const SplitSpec& s) {
    json j;
    j["protocol"] = std::string(to_string(s.protocol));
    j["normal_classes"] = s.normal_classes;
    j["seen_anomaly_classes"] = s.seen_anomaly_classes;
    j["s"] = s.s;
    if (s.per_class_quota) j["per_class_quota"] = *s.per_class_quota;
    return j;
}

json train_json(const TrainConfig& t) {
    json j;
    j["method"] = std::string(to_string(t.method));
    j["f_kind"] = std::string(to_string(t.f_kind));
    if (t.lambda) j["lambda"] = *t.lambda;
    j["alpha"] = t.alpha ? json(*t.alpha) : (t.lambda ? json() : json(kDefaultAlpha));
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["learning_rate"] = t.adam.learning_rate;
    j["beta1"] = t.adam.beta1;
    j["beta2"] = t.adam.beta2;
    j["epsilon"] = t.adam.epsilon;
    j["seed"] = t.seed;
    j["eval_every"] = t.eval_every;
    if (t.method == Method::neg_ae) j["neg_phase_fraction"] = t.neg_phase_fraction;
    return j;
}

struct RunOutcome {
    Network net;
    TrainReport report;
    double test_auc = 0.0;
};

RunOutcome run_method(const ExperimentConfig& cfg, const PreparedRun& run, TrainConfig tcfg, std::uint64_t run_seed) {
    const RunSeeds seeds = RunSeeds::from(run_seed);
    tcfg.seed = seeds.train;
    RunOutcome out;
    out.net = init_network(network_spec_for(cfg, run.train.dim()), seeds.init);
    const bool eval_epochs = tcfg.eval_every > 0;
    out.report = train(out.net, run.train, tcfg, eval_epochs ? &run.test : nullptr);
    out.test_auc = auc(score(out.net, run.test.features), run.test.labels);
    return out;
}

std::string cell_name(std::size_t s, double alpha, std::uint64_t seed) {
    return "s" + std::to_string(s) + "_alpha" + format_real(alpha) + "_seed" + std::to_string(seed) + ".done";
}

}  // namespace

void cmd_train(const ExperimentConfig& cfg, const CommandOptions& opts) {
    const std::uint64_t seed = base_seed(cfg, opts);
    const DataPools pools = load_pools(cfg.data);
    const PreparedRun run = prepare_run(pools, cfg.data, cfg.split, cfg.pollution, seed);
    const RunOutcome outcome = run_method(cfg, run, cfg.train, seed);

    fs::create_directories(opts.out_dir);
    save_model(opts.out_dir / "model.txt", Model{outcome.net, run.scaler});

    std::ostringstream metrics;
    outcome.report.write_csv(metrics);
    write_file_atomic(opts.out_dir / "metrics.csv", metrics.str());
    write_file_atomic(opts.out_dir / "split.txt", run.manifest);

    json manifest;
    manifest["name"] = cfg.name;
    manifest["seed"] = seed;
    manifest["split"] = split_json(cfg.split);
    manifest["split_hash"] = run.manifest_hash;
    if (cfg.pollution) {
        manifest["pollution"] = {{"rate", cfg.pollution->rate}};
        if (cfg.pollution->per_class_count) manifest["pollution"]["per_class_count"] = *cfg.pollution->per_class_count;
    }
    manifest["train"] = train_json(cfg.train);
    manifest["resolved_lambda"] = outcome.report.lambda;
    manifest["widths"] = outcome.net.widths();
    manifest["n_train"] = run.train.size();
    manifest["n_train_normal"] = run.train.count_label(0);
    manifest["n_train_anomalies"] = run.train.count_label(1);
    manifest["n_test"] = run.test.size();
    manifest["test_auc"] = outcome.test_auc;
    manifest["normalized"] = cfg.data.normalize;
    write_file_atomic(opts.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

EvalReport cmd_evaluate(const EvaluateOptions& opts) {
    const Model model = load_model(opts.model);
    std::optional<std::string_view> cls;
    if (opts.class_column) cls = *opts.class_column;
    Dataset data = load_csv(opts.data.string(), opts.label_column, cls);
    if (data.dim() != model.net.input_dim()) {
        throw std::invalid_argument("model expects " + std::to_string(model.net.input_dim()) + " features, data '" +
                                    opts.data.string() + "' has " + std::to_string(data.dim()));
    }
    if (!opts.normal_classes.empty()) {
        if (!data.has_class_ids()) throw std::invalid_argument("--normal-classes needs a class column");
        const std::set<int> normal(opts.normal_classes.begin(), opts.normal_classes.end());
        for (std::size_t r = 0; r < data.size(); ++r) data.labels[r] = normal.count(data.class_ids[r]) ? 0 : 1;
    }
    if (model.scaler) data = model.scaler->transform(data);
    data.validate_unit_range();

    const auto scores = score(model.net, data.features);
    EvalReport report;
    report.method = "model";
    report.overall_auc = auc(scores, data.labels);
    report.config["model"] = opts.model.string();
    report.config["data"] = opts.data.string();
    report.config["rows"] = std::to_string(data.size());

    std::ostringstream csv;
    csv << "row,score,label,class\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        csv << r << ',' << format_real(scores[r]) << ',' << data.labels[r] << ',';
        if (data.has_class_ids()) csv << data.class_ids[r];
        csv << '\n';
    }
    write_file_atomic(opts.out_dir / "scores.csv", csv.str());

    if (data.has_class_ids()) {
        std::vector<int> normal = opts.normal_classes;
        if (normal.empty()) {
            std::set<int> n;
            for (std::size_t r = 0; r < data.size(); ++r) {
                if (data.labels[r] == 0) n.insert(data.class_ids[r]);
            }
            normal.assign(n.begin(), n.end());
        }
        report.per_class = per_class_auc(scores, data.class_ids, normal);
        std::ostringstream pc;
        write_per_class_csv(pc, {report});
        write_file_atomic(opts.out_dir / "per_class.csv", pc.str());
    }
    std::ostringstream txt;
    write_report(txt, report);
    write_file_atomic(opts.out_dir / "report.txt", txt.str());
    return report;
}

void cmd_grid(const ExperimentConfig& cfg, const CommandOptions& opts) {
    const std::vector<std::size_t> s_values = cfg.grid_s.empty() ? std::vector<std::size_t>{cfg.split.s} : cfg.grid_s;
    std::vector<double> alphas = cfg.grid_alpha;
    if (alphas.empty()) alphas.push_back(cfg.train.alpha.value_or(kDefaultAlpha));
    if (cfg.split.protocol == Protocol::odds) throw ConfigError("grid: the s axis needs a class-based protocol");

    const std::uint64_t seed0 = base_seed(cfg, opts);
    const DataPools pools = load_pools(cfg.data);
    // Feasibility check up front so a bad s fails before any training.
    for (std::size_t s : s_values) {
        SplitSpec spec = cfg.split;
        spec.s = s;
        spec.per_class_quota.reset();
        build_split(pools.train, pools.test, spec);
    }

    struct Cell {
        std::size_t s;
        double alpha;
        std::uint64_t seed;
        double auc = 0.0;
    };
    std::vector<Cell> cells;
    for (std::size_t s : s_values)
        for (double a : alphas)
            for (std::size_t r = 0; r < cfg.runs; ++r) cells.push_back({s, a, seed0 + r});

    const fs::path cell_dir = opts.out_dir / "cells";
    fs::create_directories(cell_dir);
    parallel_for(cells.size(), opts.workers, [&](std::size_t i) {
        Cell& cell = cells[i];
        const fs::path marker = cell_dir / cell_name(cell.s, cell.alpha, cell.seed);
        if (fs::exists(marker)) {
            std::ifstream in(marker);
            std::string token;
            in >> token;
            cell.auc = std::stod(token);
            return;
        }
        SplitSpec spec = cfg.split;
        spec.s = cell.s;
        spec.per_class_quota.reset();
        const PreparedRun run = prepare_run(pools, cfg.data, spec, cfg.pollution, cell.seed);
        TrainConfig tcfg = cfg.train;
        tcfg.lambda.reset();
        tcfg.alpha = cell.alpha;
        tcfg.eval_every = 0;
        cell.auc = run_method(cfg, run, tcfg, cell.seed).test_auc;
        write_file_atomic(marker, format_real(cell.auc) + "\n");
    });

    std::ostringstream longcsv;
    longcsv << "s,alpha,seed,auc\n";
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> by_cell;
    for (const auto& c : cells) {
        longcsv << c.s << ',' << format_real(c.alpha) << ',' << c.seed << ',' << format_real(c.auc) << '\n';
        const auto ai = static_cast<std::size_t>(std::find(alphas.begin(), alphas.end(), c.alpha) - alphas.begin());
        by_cell[{c.s, ai}].push_back(c.auc);
    }
    write_file_atomic(opts.out_dir / "grid_long.csv", longcsv.str());

    std::ostringstream pivot;
    pivot << "s";
    for (double a : alphas) pivot << ",alpha=" << format_real(a);
    pivot << '\n';
    for (std::size_t s : s_values) {
        pivot << s;
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) pivot << ',' << format_real(aggregate_runs(by_cell[{s, ai}]).mean);
        pivot << '\n';
    }
    write_file_atomic(opts.out_dir / "grid_pivot.csv", pivot.str());
}

void cmd_compare(const ExperimentConfig& cfg, const CommandOptions& opts) {
    if (cfg.methods.size() < 2) throw ConfigError("compare.methods: list at least two methods");
    std::vector<CompareSetting> settings = cfg.settings;
    if (settings.empty()) settings.push_back({"default", cfg.split});

    const std::uint64_t seed0 = base_seed(cfg, opts);
    const DataPools pools = load_pools(cfg.data);

    struct Job {
        std::size_t setting;
        std::uint64_t seed;
        std::string split_hash;
        std::vector<double> aucs;
        std::vector<std::string> method_hashes;
    };
    std::vector<Job> jobs;
    for (std::size_t si = 0; si < settings.size(); ++si)
        for (std::size_t r = 0; r < cfg.runs; ++r) jobs.push_back({si, seed0 + r, {}, {}, {}});

    parallel_for(jobs.size(), opts.workers, [&](std::size_t i) {
        Job& job = jobs[i];
        // Each method rebuilds its split from the same seed; the manifest
        // hashes must agree.
        for (Method m : cfg.methods) {
            const PreparedRun run = prepare_run(pools, cfg.data, settings[job.setting].split, cfg.pollution, job.seed);
            if (job.split_hash.empty()) job.split_hash = run.manifest_hash;
            TrainConfig tcfg = cfg.train;
            tcfg.method = m;
            tcfg.eval_every = 0;
            job.aucs.push_back(run_method(cfg, run, tcfg, job.seed).test_auc);
            job.method_hashes.push_back(run.manifest_hash);
        }
        for (const auto& h : job.method_hashes) {
            if (h != job.split_hash) throw std::logic_error("compare: methods saw different splits");
        }
    });

    std::vector<std::string> names;
    for (Method m : cfg.methods) names.emplace_back(to_string(m));

    std::ostringstream runs_csv;
    runs_csv << "setting,seed,method,auc,split_hash\n";
    std::vector<std::vector<double>> paired(cfg.methods.size());
    for (const auto& job : jobs) {
        for (std::size_t m = 0; m < names.size(); ++m) {
            runs_csv << settings[job.setting].name << ',' << job.seed << ',' << names[m] << ',' << format_real(job.aucs[m])
                     << ',' << job.split_hash << '\n';
            paired[m].push_back(job.aucs[m]);
        }
    }
    write_file_atomic(opts.out_dir / "compare_runs.csv", runs_csv.str());

    std::ostringstream wm;
    write_win_matrix_csv(wm, win_matrix(names, paired));
    write_file_atomic(opts.out_dir / "win_matrix.csv", wm.str());

    std::ostringstream table;
    table << "setting";
    for (const auto& n : names) table << ',' << n << "_mean," << n << "_std";
    table << '\n';
    for (std::size_t si = 0; si < settings.size(); ++si) {
        table << settings[si].name;
        for (std::size_t m = 0; m < names.size(); ++m) {
            std::vector<double> v;
            for (const auto& job : jobs) {
                if (job.setting == si) v.push_back(job.aucs[m]);
            }
            const RunStats st = aggregate_runs(v);
            table << ',' << format_real(st.mean) << ',' << format_real(st.std);
        }
        table << '\n';
    }
    write_file_atomic(opts.out_dir / "auc_table.csv", table.str());
}

}  // namespace aesad
