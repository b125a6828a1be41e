#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "aesad/eval.hpp"
#include "aesad/experiment.hpp"
#include "aesad/loss.hpp"
#include "aesad/network.hpp"
#include "aesad/trainer.hpp"

namespace py = pybind11;
using namespace aesad;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    if (a.ndim() == 1) {
        return Tensor(1, static_cast<std::size_t>(a.shape(0)), std::vector<double>(a.data(), a.data() + a.size()));
    }
    if (a.ndim() != 2) throw py::value_error("expected a 1-d or 2-d array");
    return Tensor(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array out({t.rows(), t.cols()});
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

std::vector<int> to_ints(const IntArray& a) { return {a.data(), a.data() + a.size()}; }

Dataset make_dataset(const Array& x, const IntArray& y) {
    Dataset d;
    d.features = to_tensor(x);
    d.labels = to_ints(y);
    d.validate();
    return d;
}

CommandOptions options(const std::string& out, std::optional<std::uint64_t> seed, std::size_t workers) {
    CommandOptions o;
    o.out_dir = out;
    o.seed = seed;
    o.workers = workers;
    return o;
}

}  // namespace

PYBIND11_MODULE(_aesad, m) {
    m.doc() = "AE-SAD autoencoders: training, scoring and evaluation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "apply_f",
        [](const std::string& kind, const Array& x) {
            const auto v = apply_f(parse_f_kind(kind), std::span<const double>(x.data(), x.size()));
            Array out(x.request().shape);
            std::copy(v.begin(), v.end(), out.mutable_data());
            return out;
        },
        py::arg("kind"), py::arg("x"));
    m.def("lambda_schedule", &lambda_schedule, py::arg("alpha"), py::arg("n"), py::arg("s"));
    m.def("alpha_grid", &alpha_grid, py::arg("lo") = 0.1, py::arg("hi") = 2.0, py::arg("count") = 5);

    m.def(
        "auc", [](const Array& s, const IntArray& y) { return auc(std::span(s.data(), s.size()), to_ints(y)); },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "auc_bruteforce",
        [](const Array& s, const IntArray& y) { return auc_bruteforce(std::span(s.data(), s.size()), to_ints(y)); },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "per_class_auc",
        [](const Array& s, const IntArray& classes, const std::vector<int>& normal) {
            return per_class_auc(std::span(s.data(), s.size()), to_ints(classes), normal);
        },
        py::arg("scores"), py::arg("class_ids"), py::arg("normal_classes"));

    py::class_<Network>(m, "Network")
        .def(py::init([](const std::vector<std::size_t>& widths, std::uint64_t seed) {
                 return init_network(NetworkSpec{widths}, seed);
             }),
             py::arg("widths"), py::arg("seed") = 0)
        .def_static(
            "default", [](std::size_t d, std::uint64_t seed) { return init_network(default_spec(d), seed); },
            py::arg("input_dim"), py::arg("seed") = 0)
        .def_static("load", py::overload_cast<const std::string&>(&load_network), py::arg("path"))
        .def("save", [](const Network& n, const std::string& path) { save_network(path, n); }, py::arg("path"))
        .def_property_readonly("widths", &Network::widths)
        .def_property_readonly("parameter_count", &Network::parameter_count)
        .def("forward", [](const Network& n, const Array& x) { return to_array(forward(n, to_tensor(x))); })
        .def("score", [](const Network& n, const Array& x) { return score(n, to_tensor(x)); })
        .def("__eq__", [](const Network& a, const Network& b) { return a == b; });

    m.def(
        "train",
        [](Network& net, const Array& x, const IntArray& y, const std::string& method, const std::string& f_kind,
           std::optional<double> lambda, std::optional<double> alpha, std::size_t epochs, std::size_t batch_size,
           double learning_rate, std::uint64_t seed, std::optional<Array> x_test, std::optional<IntArray> y_test,
           std::size_t eval_every) {
            TrainConfig cfg;
            cfg.method = parse_method(method);
            cfg.f_kind = parse_f_kind(f_kind);
            cfg.lambda = lambda;
            cfg.alpha = alpha;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.adam.learning_rate = learning_rate;
            cfg.seed = seed;
            cfg.eval_every = eval_every;
            const Dataset train_set = make_dataset(x, y);
            std::optional<Dataset> test;
            if (x_test && y_test) test = make_dataset(*x_test, *y_test);
            TrainReport rep;
            {
                py::gil_scoped_release release;
                rep = train(net, train_set, cfg, test ? &*test : nullptr);
            }
            py::dict out;
            out["loss"] = rep.loss;
            out["auc_epochs"] = rep.auc_epochs;
            out["auc"] = rep.auc;
            out["lambda"] = rep.lambda;
            out["wall_seconds"] = rep.wall_seconds;
            return out;
        },
        py::arg("net"), py::arg("x"), py::arg("y"), py::arg("method") = "aesad", py::arg("f_kind") = "f0",
        py::arg("lambda_") = py::none(), py::arg("alpha") = py::none(), py::arg("epochs") = 200,
        py::arg("batch_size") = 32, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
        py::arg("x_test") = py::none(), py::arg("y_test") = py::none(), py::arg("eval_every") = 1);

    m.def(
        "run_train",
        [](const std::string& config, const std::string& out, std::optional<std::uint64_t> seed, std::size_t workers) {
            cmd_train(load_config(config), options(out, seed, workers));
        },
        py::arg("config"), py::arg("out"), py::arg("seed") = py::none(), py::arg("workers") = 1);
    m.def(
        "run_grid",
        [](const std::string& config, const std::string& out, std::optional<std::uint64_t> seed, std::size_t workers) {
            cmd_grid(load_config(config), options(out, seed, workers));
        },
        py::arg("config"), py::arg("out"), py::arg("seed") = py::none(), py::arg("workers") = 1);
    m.def(
        "run_compare",
        [](const std::string& config, const std::string& out, std::optional<std::uint64_t> seed, std::size_t workers) {
            cmd_compare(load_config(config), options(out, seed, workers));
        },
        py::arg("config"), py::arg("out"), py::arg("seed") = py::none(), py::arg("workers") = 1);
    m.def(
        "run_evaluate",
        [](const std::string& model, const std::string& data, const std::string& out,
           std::optional<std::string> class_column, std::vector<int> normal_classes) {
            EvaluateOptions o;
            o.model = model;
            o.data = data;
            o.out_dir = out;
            o.class_column = class_column;
            o.normal_classes = std::move(normal_classes);
            const EvalReport r = cmd_evaluate(o);
            py::dict d;
            d["auc"] = r.overall_auc;
            d["per_class"] = r.per_class;
            return d;
        },
        py::arg("model"), py::arg("data"), py::arg("out"), py::arg("class_column") = py::none(),
        py::arg("normal_classes") = std::vector<int>{});
}
