#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"

#include "aesad/experiment.hpp"

using namespace aesad;
namespace fs = std::filesystem;

namespace {

const fs::path kToy = AESAD_TOY_DIR;
const std::string kCli = AESAD_CLI_PATH;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("aesad_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

std::string toy_config(const std::string& extra = "", const std::string& train_path = "") {
    const std::string train = train_path.empty() ? (kToy / "train.csv").string() : train_path;
    return R"({
  "name": "toy",
  "data": {"train": ")" + train + R"(", "test": ")" + (kToy / "test.csv").string() + R"(", "class_column": "class"},
  "split": {"protocol": "one-vs-one", "normal_classes": [0], "seen_anomaly_classes": [1], "s": 6},
  "train": {"epochs": 8, "seed": 2, "widths": [6, 8, 3, 8, 6]},
  "runs": 3)" + extra + "\n}\n";
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_config reads every section and resolves paths") {
    const auto cfg = parse_config(toy_config(R"(, "grid": {"s": [2, 4], "alpha": [0.5]},
  "compare": {"methods": ["aesad", "neg_ae"]}, "pollution": {"rate": 0.1})"),
                                  "/tmp");
    CHECK(cfg.name == "toy");
    CHECK(cfg.data.class_column == std::optional<std::string>("class"));
    CHECK(cfg.split.s == 6);
    CHECK(cfg.train.epochs == 8);
    CHECK(cfg.widths == std::optional<std::vector<std::size_t>>({6, 8, 3, 8, 6}));
    CHECK(cfg.grid_s == std::vector<std::size_t>{2, 4});
    CHECK(cfg.methods == std::vector<Method>{Method::aesad, Method::neg_ae});
    REQUIRE(cfg.pollution);
    CHECK(cfg.pollution->rate == 0.1);

    const auto rel = parse_config(R"({"data": {"train": "a.csv"}})", "/base/dir");
    CHECK(rel.data.train == fs::path("/base/dir/a.csv"));
}

TEST_CASE("config errors name the offending key") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"data": {"train": "a.csv"}, "trian": {}})", "/"),
                         doctest::Contains("trian"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"data": {"train": "a.csv"}, "train": {"epochs": "many"}})", "/"),
                         doctest::Contains("train.epochs"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"train": {}})", "/"), doctest::Contains("data"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("{not json", "/"), doctest::Contains("JSON"), ConfigError);

    const auto missing = parse_config(toy_config("", "/nonexistent/train.csv"), "/");
    CHECK_THROWS_WITH_AS(validate_config(missing), doctest::Contains("data.train"), ConfigError);
}

TEST_CASE("model files round-trip with their scaler") {
    TempDir tmp("model");
    Model m{init_network(NetworkSpec{{3, 2, 3}}, 4), MinMaxScaler{{0.0, -1.0, 2.0}, {1.0, 1.0, 2.0}}};
    save_model(tmp.path / "m.txt", m);
    const Model back = load_model(tmp.path / "m.txt");
    CHECK(back.net == m.net);
    REQUIRE(back.scaler);
    CHECK(back.scaler->min == m.scaler->min);
    CHECK(back.scaler->max == m.scaler->max);
}

TEST_CASE("parallel_for covers every index and forwards exceptions") {
    std::vector<int> hit(100, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("cli train writes artifacts and reruns byte-identically") {
    TempDir tmp("train");
    spit(tmp.path / "exp.json", toy_config());
    const auto cfg_path = (tmp.path / "exp.json").string();
    REQUIRE(run_cli("train --config \"" + cfg_path + "\" --out \"" + (tmp.path / "a").string() + "\"",
                    tmp.path / "log") == 0);
    REQUIRE(run_cli("train --config \"" + cfg_path + "\" --out \"" + (tmp.path / "b").string() + "\"",
                    tmp.path / "log") == 0);
    for (const char* f : {"model.txt", "metrics.csv", "manifest.json", "split.txt"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(tmp.path / "a" / f));
        CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
    }
    CHECK(count_lines(slurp(tmp.path / "a" / "metrics.csv")) == 9);
    const std::string manifest = slurp(tmp.path / "a" / "manifest.json");
    CHECK(manifest.find("\"resolved_lambda\"") != std::string::npos);
    CHECK(manifest.find("\"n_train_anomalies\": 6") != std::string::npos);

    REQUIRE(run_cli("train --config \"" + cfg_path + "\" --seed 3 --out \"" + (tmp.path / "c").string() + "\"",
                    tmp.path / "log") == 0);
    CHECK(slurp(tmp.path / "a" / "model.txt") != slurp(tmp.path / "c" / "model.txt"));
}

TEST_CASE("cli reports missing files by config key") {
    TempDir tmp("missing");
    spit(tmp.path / "exp.json", toy_config("", (tmp.path / "nope.csv").string()));
    CHECK(run_cli("train --config \"" + (tmp.path / "exp.json").string() + "\" --out \"" +
                      (tmp.path / "o").string() + "\"",
                  tmp.path / "log") == 2);
    CHECK(slurp(tmp.path / "log").find("data.train") != std::string::npos);
    CHECK(run_cli("frobnicate", tmp.path / "log") != 0);
}

TEST_CASE("cli evaluate matches the train manifest and checks dimensions") {
    TempDir tmp("eval");
    spit(tmp.path / "exp.json", toy_config());
    const std::string cfg = (tmp.path / "exp.json").string();
    REQUIRE(run_cli("train --config \"" + cfg + "\" --out \"" + (tmp.path / "t").string() + "\"", tmp.path / "log") == 0);
    const std::string model = (tmp.path / "t" / "model.txt").string();

    REQUIRE(run_cli("evaluate --model \"" + model + "\" --config \"" + cfg + "\" --out \"" +
                        (tmp.path / "e").string() + "\"",
                    tmp.path / "log") == 0);
    const std::string scores = slurp(tmp.path / "e" / "scores.csv");
    CHECK(count_lines(scores) == 121);  // header + every test row

    // The test AUC in the train manifest is computed on the same rows and labels.
    const std::string manifest = slurp(tmp.path / "t" / "manifest.json");
    const std::string log = slurp(tmp.path / "log");
    const auto pos = manifest.find("\"test_auc\": ");
    REQUIRE(pos != std::string::npos);
    const double train_auc = std::stod(manifest.substr(pos + 12));
    REQUIRE(log.rfind("auc ", 0) == 0);
    CHECK(std::stod(log.substr(4)) == train_auc);
    CHECK(fs::exists(tmp.path / "e" / "per_class.csv"));

    spit(tmp.path / "narrow.csv", "a,b,label\n0.1,0.2,0\n0.3,0.4,1\n");
    CHECK(run_cli("evaluate --model \"" + model + "\" --data \"" + (tmp.path / "narrow.csv").string() + "\" --out \"" +
                      (tmp.path / "n").string() + "\"",
                  tmp.path / "log") == 1);
    CHECK(slurp(tmp.path / "log").find("features") != std::string::npos);
}

TEST_CASE("cli grid writes one row per cell and resumes") {
    TempDir tmp("grid");
    spit(tmp.path / "exp.json", toy_config(R"(, "grid": {"s": [2, 4], "alpha": [0.1, 1.0]})"));
    const std::string args = "grid --config \"" + (tmp.path / "exp.json").string() + "\" --workers 2 --out \"" +
                             (tmp.path / "g").string() + "\"";
    REQUIRE(run_cli(args, tmp.path / "log") == 0);
    const std::string first = slurp(tmp.path / "g" / "grid_long.csv");
    CHECK(count_lines(first) == 13);
    CHECK(count_lines(slurp(tmp.path / "g" / "grid_pivot.csv")) == 3);

    // Drop one cell marker: the rerun recomputes it and reproduces the table.
    auto it = fs::directory_iterator(tmp.path / "g" / "cells");
    std::size_t markers = 0;
    for (const auto& e : fs::directory_iterator(tmp.path / "g" / "cells")) markers += e.is_regular_file();
    CHECK(markers == 12);
    fs::remove(it->path());
    REQUIRE(run_cli(args, tmp.path / "log") == 0);
    CHECK(slurp(tmp.path / "g" / "grid_long.csv") == first);

    spit(tmp.path / "bad.json", toy_config(R"(, "grid": {"s": [500]})"));
    CHECK(run_cli("grid --config \"" + (tmp.path / "bad.json").string() + "\" --out \"" + (tmp.path / "b").string() +
                      "\"",
                  tmp.path / "log") != 0);
}

TEST_CASE("cli compare writes a square win matrix") {
    TempDir tmp("compare");
    spit(tmp.path / "exp.json", toy_config(R"(, "compare": {"methods": ["aesad", "standard_ae"]})"));
    REQUIRE(run_cli("compare --config \"" + (tmp.path / "exp.json").string() + "\" --out \"" +
                        (tmp.path / "c").string() + "\"",
                    tmp.path / "log") == 0);
    const std::string wm = slurp(tmp.path / "c" / "win_matrix.csv");
    CHECK(count_lines(wm) == 3);
    CHECK(wm.rfind("method,aesad,standard_ae\n", 0) == 0);
    CHECK(count_lines(slurp(tmp.path / "c" / "compare_runs.csv")) == 7);
    CHECK(slurp(tmp.path / "c" / "auc_table.csv").rfind("setting,aesad_mean,aesad_std,standard_ae_mean,standard_ae_std\n",
                                                        0) == 0);

    spit(tmp.path / "one.json", toy_config(R"(, "compare": {"methods": ["aesad"]})"));
    CHECK(run_cli("compare --config \"" + (tmp.path / "one.json").string() + "\" --out \"" +
                      (tmp.path / "x").string() + "\"",
                  tmp.path / "log") == 2);
}
