#include "invsig/curve.hpp"
#include "invsig/data.hpp"
#include "invsig/error.hpp"
#include "invsig/eval.hpp"
#include "invsig/invariants.hpp"
#include "invsig/net.hpp"
#include "invsig/siamese.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace invsig;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PlanarCurve to_curve(const Array& pts, bool closed) {
    if (pts.ndim() != 2 || pts.shape(1) != 2) {
        throw Error(ErrorCode::ShapeMismatch, "points must have shape (N, 2)");
    }
    const auto n = static_cast<std::size_t>(pts.shape(0));
    const double* data = pts.data();
    std::vector<Point2> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {data[2 * i], data[2 * i + 1]};
    return PlanarCurve(std::move(out), closed);
}

Array to_array(const PlanarCurve& curve) {
    Array out({static_cast<py::ssize_t>(curve.size()), py::ssize_t{2}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < curve.size(); ++i) {
        m(static_cast<py::ssize_t>(i), 0) = curve[i].x;
        m(static_cast<py::ssize_t>(i), 1) = curve[i].y;
    }
    return out;
}

Array to_array(const std::vector<double>& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw Error(ErrorCode::ShapeMismatch, "expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

}  // namespace

PYBIND11_MODULE(_invsig, m) {
    m.doc() = "Invariant curve signatures (C++ core)";

    static py::exception<Error> error_type(m, "Error", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("resample_uniform",
          [](const Array& pts, std::size_t n, bool closed) {
              return to_array(resample_uniform(to_curve(pts, closed), n));
          },
          py::arg("points"), py::arg("n"), py::arg("closed") = true);
    m.def("normalize_curve",
          [](const Array& pts, bool closed) { return to_array(normalize_curve(to_curve(pts, closed))); },
          py::arg("points"), py::arg("closed") = true);
    m.def("cumulative_arclength",
          [](const Array& pts, bool closed) {
              const auto p = cumulative_arclength(to_curve(pts, closed));
              return py::make_tuple(to_array(p.values), p.total);
          },
          py::arg("points"), py::arg("closed") = true);
    m.def("random_euclidean_transform",
          [](const Array& pts, std::uint64_t seed, bool closed) {
              return to_array(random_euclidean_transform(to_curve(pts, closed), seed));
          },
          py::arg("points"), py::arg("seed"), py::arg("closed") = true);
    m.def("smooth_loess",
          [](const Array& pts, double span, bool closed) {
              return to_array(smooth_loess(to_curve(pts, closed), span));
          },
          py::arg("points"), py::arg("span"), py::arg("closed") = true);
    m.def("curvature",
          [](const Array& pts, double sigma, bool closed) {
              return to_array(euclidean_curvature(to_curve(pts, closed), sigma).values);
          },
          py::arg("points"), py::arg("sigma") = 2.0, py::arg("closed") = true);
    m.def("integral_area_invariant",
          [](const Array& pts, double r, bool best_effort) {
              IntegralAreaOptions opt;
              if (best_effort) opt.self_intersection = SelfIntersectionPolicy::BestEffort;
              return to_array(integral_area_invariant(to_curve(pts, true), r, opt).values);
          },
          py::arg("points"), py::arg("r"), py::arg("best_effort") = false);
    m.def("signature_distance",
          [](const Array& a, const Array& b, bool closed) {
              return signature_distance(to_vector(a), to_vector(b), closed);
          },
          py::arg("a"), py::arg("b"), py::arg("closed") = true);
    m.def("contrastive_loss",
          [](const Array& a, const Array& b, int label, double margin) {
              return contrastive_loss(to_vector(a), to_vector(b), label, margin);
          },
          py::arg("a"), py::arg("b"), py::arg("label"), py::arg("margin") = 1.0);

    py::class_<Model>(m, "Model")
        .def_property_readonly("parameter_count", [](const Model& mdl) { return mdl.params.count(); })
        .def_property_readonly("receptive_radius",
                               [](const Model& mdl) { return mdl.arch.receptive_radius(); })
        .def("to_json", [](const Model& mdl) { return model_to_json(mdl); })
        .def_static("from_json", [](const std::string& text) { return model_from_json(text); })
        .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

    m.def("init_model",
          [](std::uint64_t seed, std::size_t filters, std::size_t width) {
              Architecture arch;
              arch.filters = filters;
              arch.width = width;
              return init_model(arch, seed);
          },
          py::arg("seed") = 0, py::arg("filters") = 15, py::arg("width") = 5);
    m.def("forward",
          [](const Model& mdl, const Array& pts, bool closed) {
              return to_array(forward_values(mdl, to_curve(pts, closed)));
          },
          py::arg("model"), py::arg("points"), py::arg("closed") = true);
    m.def("save_model", [](const Model& mdl, const std::string& path) { save_model(mdl, path); },
          py::arg("model"), py::arg("path"));
    m.def("load_model", [](const std::string& path) { return load_model(path); }, py::arg("path"));

    m.def("synth_shape",
          [](std::uint64_t seed, std::size_t family, std::size_t harmonics, double amplitude) {
              SynthOptions opt;
              opt.harmonics = harmonics;
              opt.amplitude = amplitude;
              const auto rec = synth_shape(seed, family, opt);
              return py::make_tuple(to_array(rec.curve), rec.category);
          },
          py::arg("seed"), py::arg("family") = 0, py::arg("harmonics") = 5,
          py::arg("amplitude") = 0.35);

    m.def("train",
          [](const std::vector<Array>& shapes, int scale_index, std::size_t pairs,
             std::size_t epochs, std::uint64_t seed, double margin, double lr, std::size_t batch,
             std::size_t threads) {
              std::vector<PlanarCurve> curves;
              for (const auto& s : shapes) curves.push_back(to_curve(s, true));
              Hyperparameters hp{margin, lr, batch, epochs, seed};
              TrainingOptions opt;
              opt.threads = threads;
              TrainingResult result;
              {
                  py::gil_scoped_release release;
                  result = invsig::train(curves, hp, scale_index, pairs, opt);
              }
              return py::make_tuple(result.model, result.loss_history);
          },
          py::arg("shapes"), py::arg("scale_index") = 1, py::arg("pairs") = 10000,
          py::arg("epochs") = 30, py::arg("seed") = 0, py::arg("margin") = 1.0,
          py::arg("lr") = 5e-4, py::arg("batch") = 10, py::arg("threads") = 0);
}
