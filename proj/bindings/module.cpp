// Python bindings for the core operations: dataset generation, parameter
// initialization, forward/backward evaluation, merit-guided layer insertion,
// and the training loop. Matrices cross the boundary as numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>

#include "deepen/checkpoint.hpp"
#include "deepen/experiments.hpp"
#include "deepen/insertion.hpp"
#include "deepen/training.hpp"

namespace py = pybind11;
using namespace deepen;

namespace {

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

Matrix matrix_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                   const char* what) {
    if (a.ndim() == 1) {
        Matrix m(static_cast<std::size_t>(a.shape(0)), 1);
        std::copy(a.data(), a.data() + a.size(), m.data.begin());
        return m;
    }
    if (a.ndim() == 2) {
        Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
        std::copy(a.data(), a.data() + a.size(), m.data.begin());
        return m;
    }
    throw std::invalid_argument(std::string(what) + ": expected a 1-D or 2-D array");
}

Matrix column_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                   const char* what) {
    Matrix m = matrix_from(a, what);
    if (m.cols != 1) {
        if (m.rows == 1) return deepen::transpose(m);
        throw std::invalid_argument(std::string(what) + ": expected a vector");
    }
    return m;
}

NetworkKind kind_from(const std::string& s) {
    if (s == "fnn") return NetworkKind::Fnn;
    if (s == "resnet") return NetworkKind::ResNet;
    throw std::invalid_argument("kind must be 'fnn' or 'resnet'");
}

InsertionStrategy strategy_from(const std::string& s, int fixed_position) {
    if (s == "max_merit") return InsertionStrategy::max_merit();
    if (s == "min_merit") return InsertionStrategy::min_merit();
    if (s == "fixed") return InsertionStrategy::fixed(fixed_position);
    throw std::invalid_argument("strategy must be 'max_merit', 'min_merit' or 'fixed'");
}

}  // namespace

PYBIND11_MODULE(_deepen, m) {
    m.doc() = "Training engine for small dense networks with sensitivity-guided "
              "mid-training layer insertion";

    py::class_<NetworkSpec>(m, "NetworkSpec")
        .def(py::init([](const std::string& kind, std::vector<int> widths) {
                 NetworkSpec spec{kind_from(kind), std::move(widths)};
                 spec.validate();
                 return spec;
             }),
             py::arg("kind"), py::arg("widths"))
        .def_property_readonly(
            "kind", [](const NetworkSpec& s) { return s.kind == NetworkKind::Fnn ? "fnn" : "resnet"; })
        .def_readonly("widths", &NetworkSpec::widths)
        .def("__repr__", [](const NetworkSpec& s) {
            std::string out = s.kind == NetworkKind::Fnn ? "NetworkSpec('fnn', [" : "NetworkSpec('resnet', [";
            for (std::size_t i = 0; i < s.widths.size(); ++i) {
                out += (i ? ", " : "") + std::to_string(s.widths[i]);
            }
            return out + "])";
        });

    py::class_<ParamSet>(m, "ParamSet")
        .def_readonly("spec", &ParamSet::spec)
        .def("scalar_count", &ParamSet::scalar_count)
        .def("to_json", &to_checkpoint_json);

    py::class_<GradientSet>(m, "GradientSet")
        .def_readonly("batch_size", &GradientSet::batch_size)
        .def("flat", [](const GradientSet& g) {
            const auto view = g.scalar_view();
            py::array_t<double> out(view.size());
            double* dst = out.mutable_data();
            for (std::size_t i = 0; i < view.size(); ++i) dst[i] = *view[i];
            return out;
        });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](py::array_t<double, py::array::c_style | py::array::forcecast> features,
                         py::array_t<double, py::array::c_style | py::array::forcecast> labels) {
                 Dataset d;
                 d.features = matrix_from(features, "features");
                 d.labels = matrix_from(labels, "labels");
                 if (d.features.rows != d.labels.rows) {
                     throw std::invalid_argument("features and labels row counts differ");
                 }
                 return d;
             }),
             py::arg("features"), py::arg("labels"))
        .def_property_readonly("features", [](const Dataset& d) { return to_array(d.features); })
        .def_property_readonly("labels", [](const Dataset& d) { return to_array(d.labels); })
        .def("__len__", &Dataset::size);

    py::class_<CandidatePosition>(m, "CandidatePosition")
        .def_readonly("index", &CandidatePosition::index)
        .def("__repr__",
             [](CandidatePosition p) { return "CandidatePosition(" + std::to_string(p.index) + ")"; });

    py::class_<MeritCandidate>(m, "MeritCandidate")
        .def_readonly("position", &MeritCandidate::position)
        .def_readonly("merit", &MeritCandidate::merit)
        .def_readonly("weight_grad_norm", &MeritCandidate::weight_grad_norm)
        .def_readonly("inner_weight_grad_norm", &MeritCandidate::inner_weight_grad_norm)
        .def_readonly("bias_grad_norm", &MeritCandidate::bias_grad_norm);

    py::class_<MeritReport>(m, "MeritReport")
        .def_readonly("candidates", &MeritReport::candidates)
        .def_readonly("chosen", &MeritReport::chosen);

    py::class_<ExtendedNetwork>(m, "ExtendedNetwork")
        .def_readonly("params", &ExtendedNetwork::params)
        .def_property_readonly("positions", [](const ExtendedNetwork& e) {
            std::vector<int> out;
            for (const auto& slot : e.slots) out.push_back(slot.position.index);
            return out;
        });

    py::class_<TrainingHistory>(m, "TrainingHistory")
        .def_property_readonly("iterations",
                               [](const TrainingHistory& h) {
                                   py::array_t<int> out(h.records.size());
                                   int* dst = out.mutable_data();
                                   for (std::size_t i = 0; i < h.records.size(); ++i) {
                                       dst[i] = h.records[i].iteration;
                                   }
                                   return out;
                               })
        .def_property_readonly("train_loss",
                               [](const TrainingHistory& h) {
                                   py::array_t<double> out(h.records.size());
                                   double* dst = out.mutable_data();
                                   for (std::size_t i = 0; i < h.records.size(); ++i) {
                                       dst[i] = h.records[i].train_loss;
                                   }
                                   return out;
                               })
        .def_property_readonly("test_error",
                               [](const TrainingHistory& h) {
                                   py::array_t<double> out(h.records.size());
                                   double* dst = out.mutable_data();
                                   for (std::size_t i = 0; i < h.records.size(); ++i) {
                                       dst[i] = h.records[i].test_error;
                                   }
                                   return out;
                               })
        .def_property_readonly("events",
                               [](const TrainingHistory& h) {
                                   py::list out;
                                   for (const auto& e : h.events) {
                                       py::dict d;
                                       d["iteration"] = e.iteration;
                                       d["kind"] = e.kind;
                                       d["position"] = e.position;
                                       d["merits"] = e.merits;
                                       d["param_count"] = e.param_count;
                                       d["learning_rate"] = e.learning_rate;
                                       out.append(d);
                                   }
                                   return out;
                               })
        .def_readonly("final_params", &TrainingHistory::final_params)
        .def_readonly("diverged", &TrainingHistory::diverged)
        .def_readonly("diverged_at", &TrainingHistory::diverged_at);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](const NetworkSpec& spec, double learning_rate, int total_iterations,
                         std::uint64_t seed, std::optional<int> insertion_iteration,
                         const std::string& strategy, int fixed_position,
                         std::optional<double> post_insertion_learning_rate, int batch_size,
                         double resnet_inner_scale) {
                 TrainConfig cfg;
                 cfg.spec = spec;
                 cfg.learning_rate = learning_rate;
                 cfg.total_iterations = total_iterations;
                 cfg.seed = seed;
                 cfg.post_insertion_learning_rate = post_insertion_learning_rate;
                 if (insertion_iteration) {
                     cfg.insertion = InsertionConfig{*insertion_iteration,
                                                     strategy_from(strategy, fixed_position),
                                                     resnet_inner_scale};
                 }
                 if (batch_size > 0) {
                     cfg.optimizer = {OptimizerConfig::Kind::MiniBatchSgd, batch_size};
                 }
                 cfg.validate();
                 return cfg;
             }),
             py::arg("spec"), py::arg("learning_rate"), py::arg("total_iterations"),
             py::arg("seed") = 0, py::arg("insertion_iteration") = std::nullopt,
             py::arg("strategy") = "max_merit", py::arg("fixed_position") = -1,
             py::arg("post_insertion_learning_rate") = std::nullopt, py::arg("batch_size") = 0,
             py::arg("resnet_inner_scale") = 0.8);

    m.def("param_count", &param_count, py::arg("spec"));
    m.def("init_params", &init_params, py::arg("spec"), py::arg("seed"));
    m.def("params_from_json", &from_checkpoint_json, py::arg("text"));

    m.def(
        "forward",
        [](const ParamSet& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return to_array(forward(p, column_from(x, "input")));
        },
        py::arg("params"), py::arg("input"));
    m.def("objective", &objective, py::arg("params"), py::arg("data"));
    m.def(
        "classify",
        [](const ParamSet& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return classify(p, column_from(x, "input"));
        },
        py::arg("params"), py::arg("input"));
    m.def("test_error", &test_error, py::arg("params"), py::arg("data"));

    m.def(
        "backprop",
        [](const ParamSet& p, const Dataset& batch) {
            auto result = backprop(p, batch);
            return py::make_tuple(result.loss, std::move(result.grads));
        },
        py::arg("params"), py::arg("batch"));
    m.def("finite_diff_gradient", &finite_diff_gradient, py::arg("params"), py::arg("batch"),
          py::arg("step") = 1e-6);
    m.def("gd_step", &gd_step, py::arg("params"), py::arg("grads"), py::arg("learning_rate"));

    m.def("generate_spirals", &generate_spirals, py::arg("n_total"), py::arg("noise_std"),
          py::arg("turns"), py::arg("seed"));
    m.def(
        "split_train_test",
        [](const Dataset& full, int n_train, std::uint64_t seed) {
            auto split = split_train_test(full, n_train, seed);
            return py::make_tuple(std::move(split.train), std::move(split.test),
                                  std::move(split.roles));
        },
        py::arg("full"), py::arg("n_train"), py::arg("seed"));

    m.def(
        "candidate_positions",
        [](const NetworkSpec& spec) {
            std::vector<int> out;
            for (const auto& c : candidate_positions(spec)) out.push_back(c.index);
            return out;
        },
        py::arg("spec"));
    m.def("build_fully_extended", &build_fully_extended, py::arg("base"),
          py::arg("resnet_inner_scale") = 0.8);
    m.def(
        "compute_merits",
        [](const ExtendedNetwork& ext, const Dataset& data, const std::string& strategy,
           int fixed_position, int batch_size) {
            const InsertionStrategy s = strategy_from(strategy, fixed_position);
            return batch_size > 0 ? compute_merits_minibatch(ext, data, batch_size, s)
                                  : compute_merits(ext, data, s);
        },
        py::arg("ext"), py::arg("data"), py::arg("strategy") = "max_merit",
        py::arg("fixed_position") = -1, py::arg("batch_size") = 0);
    m.def("select_and_insert", &select_and_insert, py::arg("base"), py::arg("report"),
          py::arg("resnet_inner_scale") = 0.8);

    m.def("train", &train, py::arg("config"), py::arg("train_data"), py::arg("test_data"));

    m.def(
        "run_experiment_file",
        [](const std::string& config_path, const std::string& out_dir, int threads) {
            ExperimentSpec spec = load_experiment_config(config_path);
            if (!out_dir.empty()) spec.out_dir = out_dir;
            return run_experiment(spec, threads).failures;
        },
        py::arg("config_path"), py::arg("out_dir") = "", py::arg("threads") = 0,
        "Run every arm x seed of a JSON experiment config; returns the failed-run count.");
}
