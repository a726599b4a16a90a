#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "protocell/artifacts.hpp"
#include "protocell/config.hpp"
#include "protocell/errors.hpp"
#include "protocell/response.hpp"
#include "protocell/solver.hpp"
#include "protocell/sweep.hpp"
#include "protocell/verify.hpp"

namespace py = pybind11;
using namespace protocell;

namespace {

py::dict record_dict(const ResponseRecord& r) {
    py::dict d;
    d["formulation"] = std::string(to_string(r.formulation));
    d["Q_ccm"] = r.q_ccm;
    d["k1"] = r.k1;
    d["k2"] = r.k2;
    d["k_app"] = r.k_app;
    d["sigma"] = r.sigma;
    d["dchi"] = r.dchi;
    d["Rprime_raw"] = r.rprime_raw;
    d["Rprime_norm"] = r.rprime_norm;
    d["Kprime"] = r.kprime ? py::cast(*r.kprime) : py::none();
    d["R_total"] = r.r_total;
    d["lambda"] = r.lambda ? py::cast(*r.lambda) : py::none();
    d["lambda_prime"] = r.lambda_prime;
    d["dP_Pa"] = r.dp;
    d["Pin_Pa"] = r.p_in;
    d["dP_over_Pin"] = r.dp_over_pin;
    d["converged"] = r.converged;
    d["outer_iterations"] = r.outer_iterations;
    d["fingerprint"] = r.fingerprint;
    d["error"] = r.error;
    return d;
}

}  // namespace

PYBIND11_MODULE(_protocell, m) {
    m.doc() = "Steady reactive transport in a serpentine fuel-cell cathode";
    m.attr("__version__") = std::string(tool_version());

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", error);
    py::register_exception<ValidationError>(m, "ValidationError", error);
    py::register_exception<ResourceError>(m, "ResourceError", error);
    auto conv = py::register_exception<ConvergenceError>(m, "ConvergenceError", error);
    py::register_exception<DivergenceError>(m, "DivergenceError", conv);

    py::enum_<Formulation>(m, "Formulation").value("ALPHA", Formulation::Alpha).value("BETA", Formulation::Beta);
    py::enum_<GeometryKind>(m, "GeometryKind")
        .value("REDUCED", GeometryKind::Reduced)
        .value("FULL", GeometryKind::Full);

    py::class_<KineticsParams>(m, "Kinetics")
        .def(py::init<>())
        .def_readwrite("k1", &KineticsParams::k1)
        .def_readwrite("k2", &KineticsParams::k2)
        .def_readwrite("k_app", &KineticsParams::k_app)
        .def_readwrite("gamma_dye", &KineticsParams::gamma_dye)
        .def_property_readonly("surface_area", &KineticsParams::surface_area)
        .def_property_readonly("site_concentration", &KineticsParams::site_concentration);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_static("from_text", [](const std::string& text) { return parse_config(text).model; })
        .def_static("load", [](const std::string& path) { return load_config(path).model; })
        .def("to_text", [](const ModelConfig& c) { return config_to_text(c); })
        .def("validate", &ModelConfig::validate)
        .def_readwrite("formulation", &ModelConfig::formulation)
        .def_readwrite("geometry_kind", &ModelConfig::geometry_kind)
        .def_readwrite("sigma", &ModelConfig::sigma)
        .def_readwrite("wall_graded", &ModelConfig::wall_graded)
        .def_readwrite("cell_budget", &ModelConfig::cell_budget)
        .def_readwrite("kinetics", &ModelConfig::kinetics)
        .def_readwrite("chi_in", &ModelConfig::chi_in)
        .def_readwrite("c_in", &ModelConfig::c_in)
        .def_readwrite("p_out", &ModelConfig::p_out)
        .def_readwrite("q_ccm", &ModelConfig::q_ccm)
        .def_readwrite("outer_tolerance", &ModelConfig::outer_tolerance)
        .def_readwrite("max_outer_iterations", &ModelConfig::max_outer_iterations);

    py::class_<Solution>(m, "Solution")
        .def_readonly("q_ccm", &Solution::q_ccm)
        .def_readonly("converged", &Solution::converged)
        .def_readonly("outer_iterations", &Solution::outer_iterations)
        .def_readonly("fingerprint", &Solution::fingerprint)
        .def_property_readonly("n_cells", [](const Solution& s) { return s.mesh->cell_count(); })
        .def_property_readonly("dims", [](const Solution& s) {
            return std::array<int, 3>{s.mesh->nx(), s.mesh->ny(), s.mesh->nz()};
        })
        .def_property_readonly("chi", [](const Solution& s) { return s.species.chi; })
        .def_property_readonly("pressure", [](const Solution& s) { return s.flow.pressure; })
        .def_property_readonly("r_dec", [](const Solution& s) { return s.species.r_dec; });

    m.def("mesh_summary", [](const ModelConfig& c) { return mesh_summary(*build_mesh(c)); });
    m.def("solve", &segregated_solve, py::arg("config"), py::arg("q_ccm"), py::arg("initial") = nullptr,
          py::call_guard<py::gil_scoped_release>(), "Segregated flow and species solve at one flow rate");
    m.def("responses", [](const Solution& s) { return record_dict(scalar_responses(s)); });
    m.def("response_csv", [](const Solution& s) { return response_csv({scalar_responses(s)}); });
    m.def("field_dump", [](const Solution& s, const ModelConfig& c) { return field_dump_text(s, c); });
    m.def(
        "sweep",
        [](const ModelConfig& c, const std::vector<double>& k1, const std::vector<double>& k2,
           const std::vector<double>& q, int workers) {
            ResponseTable t;
            {
                py::gil_scoped_release release;
                t = parametric_sweep(c, k1, k2, q, workers);
            }
            py::list out;
            for (const auto& r : t) out.append(record_dict(r));
            return out;
        },
        py::arg("config"), py::arg("k1"), py::arg("k2"), py::arg("q_ccm"), py::arg("workers") = 1);

    m.def(
        "observed_order",
        [](double h1, double f1, double h2, double f2, double h3, double f3) {
            const auto o = observed_order(h1, f1, h2, f2, h3, f3);
            py::dict d;
            d["p_real"] = o.p_real;
            d["p_imag"] = o.p_imag;
            d["oscillatory"] = o.oscillatory;
            d["exact"] = o.exact;
            return d;
        },
        "Observed order from three (h, f) pairs, finest first");
    m.def("richardson_extrapolate", &richardson_extrapolate, py::arg("f1"), py::arg("f2"), py::arg("r12"),
          py::arg("p"));
    m.def("gci", &gci, py::arg("f_extrap"), py::arg("f1"), py::arg("safety_factor") = 1.25);
    m.def(
        "mixed_order_extrapolate",
        [](const std::vector<double>& h, const std::vector<double>& f, int max_order, double fs) {
            if (h.size() != f.size()) throw ValidationError("f", "length differs from h");
            std::vector<GridPoint> pts;
            for (std::size_t i = 0; i < h.size(); ++i) pts.push_back({0, 0, h[i], f[i]});
            const auto r = mixed_order_extrapolate(pts, max_order, fs);
            return py::make_tuple(r.f_extrapolated, r.coefficients, r.error_estimate);
        },
        py::arg("h"), py::arg("f"), py::arg("max_order") = 2, py::arg("safety_factor") = 1.25,
        "Returns (f_exact, coefficients, error band)");
}
