#include "nodal/config.hpp"
#include "nodal/experiments.hpp"
#include "nodal/extraction.hpp"
#include "nodal/kacrice.hpp"
#include "nodal/knots.hpp"
#include "nodal/realization.hpp"
#include "nodal/topology.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>

namespace py = pybind11;
using namespace nodal;

namespace {

// Spec from a model name plus config keys such as "params.lattice_norm".
KernelSpec make_spec(const std::string& model, int n, int m, const std::map<std::string, py::object>& options) {
    KeyValueConfig kv;
    kv.set("model", model);
    kv.set("n", std::to_string(n));
    kv.set("m", std::to_string(m));
    for (const auto& [key, value] : options) kv.set(key, py::str(value));
    KernelSpec spec = KernelSpec::from_config(kv);
    spec.validate();
    return spec;
}

Matrix points_matrix(const Eigen::Ref<const Matrix>& x, int n) {
    if (x.cols() != n) throw ConfigError("points must have " + std::to_string(n) + " columns");
    return x;
}

py::dict component_dict(const ComponentGeometry& g) {
    py::dict d;
    d["kind"] = g.kind == GeometryKind::Polyline ? "polyline" : "mesh";
    d["dim"] = g.dim;
    Matrix v(static_cast<Eigen::Index>(g.vertices.size()), g.dim);
    for (std::size_t i = 0; i < g.vertices.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = g.vertices[i].head(g.dim).transpose();
    d["vertices"] = v;
    Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> f(static_cast<Eigen::Index>(g.faces.size()), 3);
    for (std::size_t i = 0; i < g.faces.size(); ++i) {
        for (int k = 0; k < 3; ++k) f(static_cast<Eigen::Index>(i), k) = g.faces[i][static_cast<std::size_t>(k)];
    }
    d["faces"] = f;
    d["closed"] = g.closed;
    return d;
}

ComponentGeometry component_from(const py::dict& d) {
    ComponentGeometry g;
    g.kind = d.contains("kind") && py::str(d["kind"]).cast<std::string>() == "mesh" ? GeometryKind::Mesh : GeometryKind::Polyline;
    const Matrix v = d["vertices"].cast<Matrix>();
    g.dim = static_cast<int>(v.cols());
    if (g.dim < 2 || g.dim > 3) throw ConfigError("vertices must have 2 or 3 columns");
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        p.head(g.dim) = v.row(i).transpose();
        g.vertices.push_back(p);
    }
    if (d.contains("faces")) {
        const auto f = d["faces"].cast<Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>>();
        for (Eigen::Index i = 0; i < f.rows(); ++i) g.faces.push_back({f(i, 0), f(i, 1), f(i, 2)});
    }
    g.closed = d.contains("closed") ? d["closed"].cast<bool>() : true;
    // Closed polylines repeat their first vertex.
    if (g.kind == GeometryKind::Polyline && g.closed && !g.vertices.empty() &&
        (g.vertices.front() - g.vertices.back()).norm() > 0.0) {
        g.vertices.push_back(g.vertices.front());
    }
    return g;
}

py::dict estimate_dict(const MomentEstimate& e) {
    py::dict d;
    d["operation"] = e.operation;
    d["value"] = e.value;
    d["half_width"] = e.half_width;
    d["samples"] = e.samples;
    d["method"] = method_name(e.method);
    d["parameters"] = e.parameters;
    if (!e.rungs.empty()) d["rungs"] = e.rungs;
    d["json"] = to_json(e);
    return d;
}

}  // namespace

PYBIND11_MODULE(_nodalsets, m) {
    m.doc() = "Gaussian random fields, their zero sets, and Kac-Rice moments.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);

    py::class_<KernelSpec>(m, "KernelSpec")
        .def_property_readonly("model", [](const KernelSpec& s) { return model_name(s.model); })
        .def_readonly("n", &KernelSpec::n)
        .def_readonly("m", &KernelSpec::m)
        .def_readonly("variance", &KernelSpec::variance)
        .def_readonly("lattice_norm", &KernelSpec::lattice_norm)
        .def_readonly("degree", &KernelSpec::degree)
        .def_readonly("waves", &KernelSpec::waves)
        .def_readonly("domain_half_width", &KernelSpec::domain_half_width)
        .def_property_readonly("hash", &KernelSpec::hash)
        .def("to_config", [](const KernelSpec& s) { return s.to_config().dump(); })
        .def("__repr__", [](const KernelSpec& s) {
            return "KernelSpec(" + model_name(s.model) + ", n=" + std::to_string(s.n) + ", m=" + std::to_string(s.m) + ")";
        });

    m.def("kernel_spec", &make_spec, py::arg("model"), py::arg("n"), py::arg("m"),
          py::arg("options") = std::map<std::string, py::object>{},
          "Spec from a model name and config keys, e.g. {\"params.lattice_norm\": 9}.");

    py::class_<FieldRealization>(m, "Field")
        .def_property_readonly("spec", &FieldRealization::spec)
        .def_property_readonly("seed", &FieldRealization::seed)
        .def_property_readonly("coefficients", &FieldRealization::coefficients)
        .def(
            "values",
            [](const FieldRealization& f, const Eigen::Ref<const Matrix>& x) {
                const Matrix pts = points_matrix(x, f.dim());
                Matrix out(pts.rows(), f.codim());
                for (Eigen::Index i = 0; i < pts.rows(); ++i) out.row(i) = f.eval(pts.row(i).transpose(), 0).value.transpose();
                return out;
            },
            py::arg("points"), "F at each row of an (N, n) array, as (N, m).")
        .def(
            "jacobian",
            [](const FieldRealization& f, const Eigen::Ref<const Matrix>& x) {
                const Point p = points_matrix(x, f.dim()).row(0).transpose();
                return f.eval(p, 1).grad;
            },
            py::arg("point"), "m x n Jacobian at a (1, n) point.");

    m.def("sample_field", &sample_field, py::arg("spec"), py::arg("seed"));
    m.def("write_coefficients", &write_coefficients, py::arg("path"), py::arg("field"));
    m.def("read_coefficients", &read_coefficients, py::arg("path"), py::arg("spec"));

    m.def(
        "extract_zero_set",
        [](const FieldRealization& f, double R, double h, double padding, std::optional<Point> center, bool project) {
            GridSpec g;
            g.R = R;
            g.h = h;
            g.padding = padding;
            if (center) g.center = *center;
            ExtractOptions options;
            options.project_vertices = project;
            const auto rep = extract_zero_set(f, g, options);
            const auto split = classify_against_cube(rep.components, R, g.origin(f.dim()));
            py::dict d;
            py::list inside, touching;
            for (const auto& c : split.inside) inside.append(component_dict(c));
            for (const auto& c : split.touching) touching.append(component_dict(c));
            d["inside"] = inside;
            d["touching"] = touching;
            d["step"] = rep.step;
            d["faults"] = rep.faults;
            d["under_resolved"] = rep.under_resolved;
            return d;
        },
        py::arg("field"), py::arg("R"), py::arg("h"), py::arg("padding") = 1.0, py::arg("center") = std::nullopt,
        py::arg("project") = true,
        "Components of Z(F) split against the cube C_R(center): closed and inside, or touching.");

    m.def("total_curvature", [](const py::dict& c) { return total_curvature(component_from(c)); }, py::arg("component"));
    m.def("betti_surface", [](const py::dict& c) { return betti_surface(component_from(c)); }, py::arg("component"));
    m.def(
        "willmore_energy", [](const py::dict& c, const FieldRealization& f) { return willmore_energy(component_from(c), f); },
        py::arg("component"), py::arg("field"));
    m.def(
        "knot_classify",
        [](const py::dict& c) {
            const KnotResult r = knot_classify(component_from(c));
            py::dict d;
            d["label"] = r.label;
            d["determinant"] = r.invariants.determinant;
            d["alexander"] = r.invariants.alexander;
            d["crossings"] = r.invariants.crossings;
            d["fault"] = r.fault;
            return d;
        },
        py::arg("component"));

    m.def(
        "first_moment_density",
        [](const KernelSpec& spec, const std::string& weight, std::size_t samples, std::uint64_t seed) {
            if (weight != "volume" && weight != "willmore") throw ConfigError("weight is volume or willmore");
            return estimate_dict(first_moment_density(spec, weight == "volume" ? KacRiceWeight::Volume : KacRiceWeight::Willmore,
                                                      samples, seed));
        },
        py::arg("spec"), py::arg("weight") = "volume", py::arg("samples") = 100000, py::arg("seed") = 1);
    m.def(
        "sphere_det_integral",
        [](int n, int mm, double alpha, std::size_t samples, std::uint64_t seed) {
            return estimate_dict(sphere_det_integral(n, mm, alpha, samples, seed));
        },
        py::arg("n"), py::arg("m"), py::arg("alpha"), py::arg("samples") = 100000, py::arg("seed") = 1);
    m.def(
        "two_point_schur_check",
        [](const KernelSpec& spec, const Point& x, const Point& y) {
            const auto s = two_point_schur_check(spec, x, y);
            py::dict d;
            d["eigenvalue"] = s.eigenvalue;
            d["bound"] = s.bound;
            d["k1"] = s.k1;
            d["pass"] = s.pass;
            return d;
        },
        py::arg("spec"), py::arg("x"), py::arg("y"));
    m.def(
        "ergodicity_decay",
        [](const KernelSpec& spec, const std::vector<double>& radii) {
            std::vector<double> values;
            for (const auto& p : ergodicity_decay(spec, radii)) values.push_back(p.value);
            return values;
        },
        py::arg("spec"), py::arg("radii"));
    m.def(
        "bulinskaya_probe",
        [](const KernelSpec& spec, double R, const std::vector<double>& tau, std::uint64_t first_seed, std::size_t seeds,
           double h) { return bulinskaya_probe(spec, R, tau, first_seed, seeds, h).probability; },
        py::arg("spec"), py::arg("R"), py::arg("tau"), py::arg("first_seed") = 1, py::arg("seeds") = 100,
        py::arg("h") = 0.05);
    m.def(
        "kostlan_local_limit",
        [](int n, int degree) {
            const auto r = kostlan_local_limit(n, degree);
            return std::make_pair(r.sup_difference, r.diagonal_difference);
        },
        py::arg("n"), py::arg("degree"), "(sup difference, diagonal difference) against exp(-|u-v|^2/2).");

    m.def(
        "run_experiment",
        [](const std::string& config_text, bool resume) {
            const auto cfg = ExperimentConfig::from_config(KeyValueConfig::parse(config_text));
            RunOptions options;
            options.resume = resume;
            RunOutcome out;
            {
                py::gil_scoped_release release;
                out = run_experiment(cfg, options);
            }
            py::dict d;
            py::list checks;
            for (const auto& c : out.checks) {
                py::dict cd;
                cd["name"] = c.name;
                cd["value"] = c.value;
                cd["threshold"] = c.threshold;
                cd["pass"] = c.pass;
                cd["detail"] = c.detail;
                checks.append(cd);
            }
            d["checks"] = checks;
            d["cells_total"] = out.cells_total;
            d["cells_run"] = out.cells_run;
            d["pass"] = out.pass;
            d["output_dir"] = cfg.output_dir;
            return d;
        },
        py::arg("config"), py::arg("resume") = false, "Runs a scenario from key = value config text.");
}
