#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "mcsle/cli.hpp"
#include "mcsle/energy_weights.hpp"
#include "mcsle/errors.hpp"
#include "mcsle/gff_levelline.hpp"
#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/lattice_domain.hpp"
#include "mcsle/loop_excursion.hpp"
#include "mcsle/sle_assembly.hpp"

namespace py = pybind11;
using namespace mcsle;

namespace {

std::vector<Point> path_points(const LatticeDomain& d, const LatticePath& p) {
  std::vector<Point> out;
  out.reserve(p.vertices.size());
  for (std::size_t k = 0; k < p.vertices.size(); ++k) out.push_back(d.point(p, k));
  return out;
}

py::dict winding_dict(const WindingLaw& w) {
  py::dict probs;
  for (auto [k, q] : w.probs) probs[py::int_(k)] = q;
  return probs;
}

}  // namespace

PYBIND11_MODULE(_mcsle, m) {
  m.doc() = "Lattice level lines, loop soups and their partition functions";

  static py::exception<Error> error_type(m, "McsleError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error_type.ptr())(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      inst.attr("field") = e.field();
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::enum_<Mode>(m, "Mode").value("NonCrossing", Mode::NonCrossing).value("Crossing", Mode::Crossing);
  py::enum_<Construction>(m, "Construction")
      .value("GFF4", Construction::GFF4)
      .value("CLEKappa", Construction::CLEKappa)
      .value("AnnulusCrossing4", Construction::AnnulusCrossing4);

  py::class_<Site>(m, "Site")
      .def(py::init<int, int>(), py::arg("i"), py::arg("j"))
      .def_readwrite("i", &Site::i)
      .def_readwrite("j", &Site::j)
      .def("__repr__", [](const Site& s) { return "Site(" + std::to_string(s.i) + ", " + std::to_string(s.j) + ")"; });
  py::class_<Point>(m, "Point")
      .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Point::x)
      .def_readwrite("y", &Point::y);
  py::class_<Hole>(m, "Hole")
      .def(py::init([](std::pair<double, double> c, double r) { return Hole{{c.first, c.second}, r}; }),
           py::arg("center"), py::arg("radius"))
      .def_readwrite("center", &Hole::center)
      .def_readwrite("radius", &Hole::radius);
  py::class_<DomainSpec>(m, "DomainSpec")
      .def(py::init([](double mesh, std::vector<Hole> holes, double outer_radius, double angle_x, double angle_y,
                       Mode mode) {
             DomainSpec s;
             s.mesh = mesh;
             s.holes = std::move(holes);
             s.outer_radius = outer_radius;
             s.angle_x = angle_x;
             s.angle_y = angle_y;
             s.mode = mode;
             return s;
           }),
           py::arg("mesh"), py::arg("holes") = std::vector<Hole>{}, py::arg("outer_radius") = 1.0,
           py::arg("angle_x") = 0.0, py::arg("angle_y") = 3.14159265358979323846,
           py::arg("mode") = Mode::NonCrossing)
      .def_readwrite("mesh", &DomainSpec::mesh)
      .def_readwrite("holes", &DomainSpec::holes)
      .def_readwrite("outer_radius", &DomainSpec::outer_radius)
      .def_readwrite("mode", &DomainSpec::mode);
  m.def("annulus_spec", &annulus_spec, py::arg("p"), py::arg("alpha"), py::arg("mesh"),
        py::arg("mode") = Mode::Crossing);

  py::class_<TopologySignature>(m, "TopologySignature")
      .def(py::init([](std::vector<int> signs) {
             TopologySignature t;
             t.signs = std::move(signs);
             return t;
           }),
           py::arg("signs") = std::vector<int>{})
      .def_readwrite("signs", &TopologySignature::signs)
      .def_readwrite("winding", &TopologySignature::winding)
      .def_readwrite("mode", &TopologySignature::mode)
      .def(py::self == py::self);

  py::class_<LatticePath>(m, "LatticePath")
      .def_readonly("vertices", &LatticePath::vertices)
      .def_readonly("closed", &LatticePath::closed)
      .def_readonly("scale", &LatticePath::scale);

  py::class_<LatticeDomain>(m, "LatticeDomain")
      .def_static("build_circle", &LatticeDomain::build_circle, py::arg("spec"))
      .def_property_readonly("mesh", &LatticeDomain::mesh)
      .def_property_readonly("size", &LatticeDomain::size)
      .def_property_readonly("n_interior", &LatticeDomain::n_interior)
      .def_property_readonly("n_holes", &LatticeDomain::n_holes)
      .def_property_readonly("marked_x", &LatticeDomain::marked_x)
      .def_property_readonly("marked_y", &LatticeDomain::marked_y)
      .def_property_readonly("interior", &LatticeDomain::interior)
      .def_property_readonly("boundary", &LatticeDomain::boundary)
      .def("point", py::overload_cast<Site>(&LatticeDomain::point, py::const_))
      .def("nearest_site", &LatticeDomain::nearest_site)
      .def("is_interior", &LatticeDomain::is_interior)
      .def("path_points", &path_points);

  m.attr("LAMBDA") = kLambda;
  m.def("restriction_exponent", &restriction_exponent, py::arg("kappa"));
  m.def("central_charge", &central_charge, py::arg("kappa"));

  m.def(
      "green_matrix",
      [](const LatticeDomain& d, const std::vector<Site>& rows, const std::vector<Site>& cols) {
        return green_matrix(d, rows, cols).entries;
      },
      py::arg("domain"), py::arg("rows"), py::arg("cols"));
  m.def(
      "poisson_matrix",
      [](const LatticeDomain& d, const std::vector<Site>& rows, const std::vector<Site>& cols) {
        return poisson_matrix(d, rows, cols).entries;
      },
      py::arg("domain"), py::arg("rows"), py::arg("cols"));
  m.def(
      "boundary_poisson_matrix",
      [](const LatticeDomain& d, const std::vector<Site>& rows, const std::vector<Site>& cols) {
        return boundary_poisson_matrix(d, rows, cols).entries;
      },
      py::arg("domain"), py::arg("rows"), py::arg("cols"));

  m.def(
      "loop_mass",
      [](const LatticeDomain& d, const std::vector<Site>& k1, const std::vector<Site>& k2) {
        return loop_mass(d, k1, k2).m_hit_both;
      },
      py::arg("domain"), py::arg("k1"), py::arg("k2"));

  m.def(
      "winding_distribution",
      [](double p, double alpha, int k_max) { return winding_dict(winding_distribution(p, alpha, k_max)); },
      py::arg("p"), py::arg("alpha"), py::arg("k_max"));
  m.def("crossing_weight_annulus", &crossing_weight_annulus, py::arg("p"), py::arg("alpha"), py::arg("k"));

  py::class_<SignatureWeight>(m, "SignatureWeight")
      .def_readonly("signature", &SignatureWeight::signature)
      .def_readonly("log_weight", &SignatureWeight::log_weight)
      .def_readonly("energy_diff", &SignatureWeight::energy_diff)
      .def_readonly("reference_H", &SignatureWeight::reference_H);
  m.def(
      "z_weight_noncrossing",
      [](const LatticeDomain& d, const TopologySignature& sig, double kappa, int variant) {
        return z_weight_noncrossing(d, sig, reference_domain(d, sig.signs, variant), kappa);
      },
      py::arg("domain"), py::arg("signature"), py::arg("kappa"), py::arg("variant") = 0);

  py::class_<LevelLineSample>(m, "LevelLineSample")
      .def_readonly("path", &LevelLineSample::path)
      .def_readonly("signature", &LevelLineSample::signature)
      .def_readonly("accepted", &LevelLineSample::accepted)
      .def_readonly("attempts", &LevelLineSample::attempts);
  m.def(
      "sample_level_line",
      [](const LatticeDomain& d, std::vector<int> signs, std::uint64_t seed) {
        MeanSpec spec;
        spec.mode = d.mode();
        spec.signs = std::move(signs);
        return trace_level_line(sample_dgff(d, spec, seed));
      },
      py::arg("domain"), py::arg("signs"), py::arg("seed"));
  m.def("sample_conditioned_level_line",
        py::overload_cast<const LatticeDomain&, const TopologySignature&, int, std::uint64_t>(
            &sample_conditioned_level_line),
        py::arg("domain"), py::arg("target"), py::arg("max_attempts"), py::arg("seed"));

  py::class_<ClassEstimate>(m, "ClassEstimate")
      .def_readonly("p_hat", &ClassEstimate::p_hat)
      .def_readonly("stderr", &ClassEstimate::stderr_)
      .def_readonly("n_samples", &ClassEstimate::n_samples)
      .def_readonly("hits", &ClassEstimate::hits);
  m.def("estimate_class_probability", &estimate_class_probability, py::arg("domain"), py::arg("target"),
        py::arg("n_samples"), py::arg("seed"), py::arg("workers") = 1);

  m.def(
      "sample_loop_soup",
      [](const LatticeDomain& d, double intensity, std::uint64_t seed) {
        std::vector<std::vector<int>> out;
        for (auto& l : sample_loop_soup(d, intensity, seed)) out.push_back(std::move(l.sites));
        return out;
      },
      py::arg("domain"), py::arg("intensity"), py::arg("seed"));
  m.def("cable_edge_open_probability", &cable_edge_open_probability, py::arg("intensity"), py::arg("lx"),
        py::arg("ly"));

  py::class_<CurveStats>(m, "CurveStats")
      .def_readonly("chord_crossing", &CurveStats::chord_crossing)
      .def_readonly("max_distance", &CurveStats::max_distance)
      .def_readonly("left_area", &CurveStats::left_area);
  m.def("curve_statistics", py::overload_cast<const LatticeDomain&, const LatticePath&>(&curve_statistics),
        py::arg("domain"), py::arg("path"));
  m.def("enumerate_signatures", &enumerate_signatures, py::arg("domain"));

  py::class_<SignatureTerm>(m, "SignatureTerm")
      .def_readonly("weight", &SignatureTerm::weight)
      .def_readonly("p_hat", &SignatureTerm::p_hat)
      .def_readonly("stderr", &SignatureTerm::stderr_)
      .def_readonly("n_samples", &SignatureTerm::n_samples)
      .def_readonly("hits", &SignatureTerm::hits);
  py::class_<MixtureReport>(m, "MixtureReport")
      .def_readonly("kappa", &MixtureReport::kappa)
      .def_readonly("per_signature", &MixtureReport::per_signature)
      .def_readonly("partition_function", &MixtureReport::partition_function)
      .def_readonly("partition_stderr", &MixtureReport::partition_stderr);
  m.def("assemble_noncrossing",
        py::overload_cast<const LatticeDomain&, double, Construction, std::int64_t, std::uint64_t, int>(
            &assemble_noncrossing),
        py::arg("domain"), py::arg("kappa"), py::arg("construction"), py::arg("n_samples"), py::arg("seed"),
        py::arg("workers") = 1);

  py::class_<BridgeExit>(m, "BridgeExit")
      .def_readonly("exit_0", &BridgeExit::exit_0)
      .def_readonly("exit_2pi", &BridgeExit::exit_2pi)
      .def_readonly("no_exit", &BridgeExit::no_exit);
  m.def("bridge_exit_probabilities", &bridge_exit_probabilities, py::arg("p"), py::arg("start"), py::arg("end"),
        py::arg("speed") = 4.0);

  m.def(
      "cli_main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "mcsle");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return cli_main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"));
}
