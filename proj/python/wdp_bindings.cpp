#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wdp/data.hpp"
#include "wdp/ensemble.hpp"
#include "wdp/error.hpp"
#include "wdp/metrics.hpp"
#include "wdp/partition.hpp"
#include "wdp/pipeline.hpp"
#include "wdp/preprocess.hpp"
#include "wdp/run_config.hpp"

namespace py = pybind11;
using namespace wdp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Accepts HxW, HxWx3 (image layout) or CxHxW arrays.
Tensor to_tensor(const Array& a) {
    Shape shape;
    if (a.ndim() == 2) {
        shape = {1, static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))};
    } else if (a.ndim() == 3 && a.shape(2) == 3 && a.shape(0) != 1 && a.shape(0) != 3) {
        const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
        Tensor t({3, h, w});
        const auto v = a.unchecked<3>();
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = v(y, x, c);
        return t;
    } else if (a.ndim() == 3) {
        shape = {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                 static_cast<std::size_t>(a.shape(2))};
    } else {
        throw ShapeError("expected a 2-D or 3-D image array");
    }
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    Array out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

py::dict detection_dict(const ensemble::Ensemble& ens, const ensemble::Detection& d) {
    py::dict out;
    out["weapon_present"] = d.weapon_present;
    out["predicted_class"] = ens.class_names.at(d.predicted_class);
    out["class_index"] = d.predicted_class;
    out["confidence"] = d.confidence;
    out["probabilities"] = to_array(d.probabilities);
    return out;
}

py::object json_to_py(const nlohmann::json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

data::Dataset dataset_from(const std::vector<std::pair<Array, std::size_t>>& items) {
    data::Dataset ds;
    for (std::size_t i = 0; i < items.size(); ++i)
        ds.samples.push_back({"s" + std::to_string(i), to_tensor(items[i].first), items[i].second, "PY"});
    return ds;
}

}  // namespace

PYBIND11_MODULE(_wdp, m) {
    m.doc() = "Ensemble weapon-detection pipeline: synthetic data, training, inference and profiling.";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<Error>(m, "WdpError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);

    m.def(
        "synth_generate",
        [](std::size_t n, std::vector<double> mix, std::size_t canvas, std::uint64_t seed) {
            const auto ds = data::synth_generate({n, std::move(mix), canvas, seed});
            py::list out;
            for (const auto& s : ds.samples) out.append(py::make_tuple(s.id, to_array(s.image), s.label));
            return out;
        },
        py::arg("n"), py::arg("mix") = std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, py::arg("canvas") = 32,
        py::arg("seed") = 0, "List of (id, image[1,H,W], label) tuples.");

    m.def(
        "export_synth",
        [](std::size_t n, std::vector<double> mix, std::size_t canvas, std::uint64_t seed,
           const std::filesystem::path& out_dir) {
            data::export_dataset(data::synth_generate({n, std::move(mix), canvas, seed}), out_dir);
        },
        py::arg("n"), py::arg("mix"), py::arg("canvas"), py::arg("seed"), py::arg("out_dir"));

    m.def("class_names", &data::default_class_names);

    m.def(
        "preprocess_frame", [](const Array& raw, std::size_t target) {
            return to_array(preprocess::preprocess_frame(to_tensor(raw), target).input);
        },
        py::arg("raw"), py::arg("target_size") = 32);

    m.def("aggregate_mean", [](const std::vector<Array>& outputs) {
        std::vector<Tensor> ts;
        for (const auto& a : outputs) ts.push_back(Tensor({static_cast<std::size_t>(a.size())},
                                                          std::vector<double>(a.data(), a.data() + a.size())));
        return to_array(ensemble::aggregate_mean(ts));
    });

    m.def(
        "confusion",
        [](const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& labels) {
            const auto cm = metrics::confusion(predictions, labels);
            return py::dict(py::arg("tp") = cm.tp, py::arg("fp") = cm.fp, py::arg("fn") = cm.fn,
                            py::arg("tn") = cm.tn);
        },
        py::arg("predictions"), py::arg("labels"));

    py::class_<ensemble::Ensemble>(m, "Ensemble")
        .def_static(
            "fresh",
            [](std::size_t n, std::size_t input_size, std::uint64_t seed) {
                ensemble::Ensemble e;
                e.input_size = input_size;
                std::size_t i = 0;
                for (const auto& d : ensemble::default_architectures(n, e.class_names.size(), input_size))
                    e.models.push_back(ensemble::init_base_model(d, e.class_names.size(), input_size, seed + i++));
                return e;
            },
            py::arg("n") = 5, py::arg("input_size") = 32, py::arg("seed") = 0, "Untrained ensemble from the catalog.")
        .def_static(
            "train",
            [](const std::vector<std::pair<Array, std::size_t>>& samples, const py::dict& config) {
                const auto cfg = parse_run_config(nlohmann::json::parse(
                    py::module_::import("json").attr("dumps")(config).cast<std::string>()));
                cfg.validate();
                const auto train = dataset_from(samples);
                const auto plan = partition::make_partition(train, cfg.partition.x, cfg.partition.m, cfg.partition.rho,
                                                            cfg.partition.seed);
                py::gil_scoped_release release;
                return ensemble::train_ensemble(plan, ensemble::default_architectures(cfg.ensemble.n, 3, cfg.preprocess.target_size),
                                                train, cfg.preprocess.target_size, cfg.train,
                                                cfg.parallel ? ensemble::Execution::Parallel : ensemble::Execution::Serial);
            },
            py::arg("samples"), py::arg("config") = py::dict(),
            "Train on (image, label) pairs; config uses the same sections as the CLI JSON.")
        .def_static("load", &ensemble::load_ensemble, py::arg("path"))
        .def("save", [](const ensemble::Ensemble& e, const std::filesystem::path& p) { ensemble::save_ensemble(e, p); })
        .def("to_bytes", [](const ensemble::Ensemble& e) { return py::bytes(ensemble::serialize_ensemble(e)); })
        .def_static("from_bytes", [](const py::bytes& b) { return ensemble::deserialize_ensemble(std::string(b)); })
        .def("__len__", &ensemble::Ensemble::size)
        .def_property_readonly("names", [](const ensemble::Ensemble& e) {
            std::vector<std::string> out;
            for (const auto& mdl : e.models) out.push_back(mdl.descriptor.name);
            return out;
        })
        .def_readonly("input_size", &ensemble::Ensemble::input_size)
        .def_readonly("class_names", &ensemble::Ensemble::class_names)
        .def("predict_proba", [](const ensemble::Ensemble& e, const Array& x) {
            return to_array(ensemble::predict_proba(e, to_tensor(x)));
        })
        .def("detect", [](const ensemble::Ensemble& e, const Array& frame) {
            return detection_dict(e, ensemble::detect(e, to_tensor(frame)));
        })
        .def(
            "evaluate",
            [](const ensemble::Ensemble& e, const std::vector<std::pair<Array, std::size_t>>& samples) {
                py::list out;
                for (const auto& r : metrics::evaluate_members(e, dataset_from(samples)))
                    out.append(json_to_py(metrics::to_json(r)));
                return out;
            },
            "Metrics per base model followed by the ensemble.")
        .def(
            "profile",
            [](const ensemble::Ensemble& e, const std::vector<Array>& frames, std::size_t reps) {
                std::vector<Tensor> ts;
                for (const auto& f : frames) ts.push_back(to_tensor(f));
                return json_to_py(pipeline::to_json(pipeline::profile(e, ts, reps)));
            },
            py::arg("frames"), py::arg("repetitions") = 1);
}
