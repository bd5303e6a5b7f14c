#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "germflow/scenario.hpp"

namespace py = pybind11;
using namespace germflow;

namespace {

py::dict state_dict(const FockState& s) {
  py::dict amps;
  for (const auto& [n, a] : s.amplitudes()) amps[py::tuple(py::cast(n))] = a;
  py::dict out;
  out["modes"] = s.trunc().modes;
  out["nmax"] = s.trunc().nmax;
  out["amplitudes"] = amps;
  out["norm"] = s.norm();
  out["lost2"] = s.lost2();
  return out;
}

MatC mat_from_rows(const std::vector<std::vector<cplx>>& rows) {
  if (rows.empty()) throw validation_error("matrix must be nonempty");
  MatC m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw validation_error("ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

VecC vec_from(const std::vector<cplx>& v) {
  VecC out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i];
  return out;
}

py::dict gaussian_amplitudes(double eps, const std::vector<cplx>& phi,
                             const std::vector<std::vector<cplx>>& M, int nmax,
                             const std::string& mode) {
  GaussianData g;
  g.eps = eps;
  g.phi = vec_from(phi);
  g.M = mat_from_rows(M);
  GaussianMode gm = GaussianMode::kRecursion;
  if (mode == "series") gm = GaussianMode::kSeries;
  else if (mode == "oracle") gm = GaussianMode::kOracle;
  else if (mode != "recursion") throw validation_error("unknown gaussian mode");
  TruncationSpec t{static_cast<int>(phi.size()), nmax};
  return state_dict(build_gaussian(g, t, gm));
}

py::dict validate_scenario(const std::string& text) {
  Scenario s = parse_scenario(text);
  ValidationResult v = run_validate(s);
  py::dict out;
  out["ok"] = v.ok;
  out["isotropy_defect"] = v.manifold.isotropy_defect;
  out["tangent_defect"] = v.germ.tangent_defect;
  out["symmetry_defect"] = v.germ.symmetry_defect;
  out["normalization_defect"] = v.germ.normalization_defect;
  out["gmin"] = v.germ.gmin;
  out["quantization_defects"] = v.quantization;
  return out;
}

py::dict residual_scan(const std::string& text) {
  Scenario s = parse_scenario(text);
  ResidualReport rep = run_residual_scan(s);
  py::dict out;
  out["eps"] = rep.eps;
  out["times"] = rep.times;
  out["r"] = rep.r;
  out["norm"] = rep.norm;
  out["r_max"] = rep.r_max;
  out["slope_fitted"] = rep.slope_fitted;
  out["slope"] = rep.slope;
  out["fit_residual"] = rep.fit_residual;
  out["norm_ratio"] = rep.norm_ratio;
  out["floor"] = rep.floor;
  return out;
}

py::list stationary_table(const std::string& text) {
  Scenario s = parse_scenario(text);
  py::list out;
  for (const StationaryRow& r : run_stationary(s, true)) {
    py::dict row;
    row["eps"] = r.eps;
    row["rho4"] = r.rho4;
    row["rho5"] = r.rho5;
    row["e4"] = r.e4;
    row["e5"] = r.e5;
    row["ediff"] = r.ediff;
    row["residual"] = r.residual;
    row["norm"] = r.norm;
    out.append(row);
  }
  return out;
}

py::dict example2(const std::string& text) {
  Scenario s = parse_scenario(text);
  Example2Result r = run_example2(s);
  py::dict out;
  out["N"] = r.N;
  out["eps"] = r.eps;
  out["tau_pts"] = r.tau_pts;
  out["quad_error"] = r.quad_error;
  out["off_sector"] = r.off_sector;
  out["scale"] = r.scale;
  out["max_rel_dev"] = r.max_rel_dev;
  return out;
}

py::dict assemble_scenario(const std::string& text, double eps) {
  Scenario s = parse_scenario(text);
  AssembledVector av = assemble(scenario_assembly(s, eps), s.trunc);
  py::dict out = state_dict(av.state);
  out["eps"] = av.eps;
  out["tau_pts"] = av.tau_pts;
  out["quad_error"] = av.quad_error;
  out["truncation_loss"] = av.truncation_loss;
  out["particle_number"] = av.particle_number;
  return out;
}

py::list evolve_table(const std::string& text) {
  Scenario s = parse_scenario(text);
  py::list out;
  for (const EvolveRow& r : run_evolve(s)) {
    py::dict row;
    row["t"] = r.t;
    std::vector<cplx> phi(r.phi.data(), r.phi.data() + r.phi.size());
    row["phi"] = phi;
    row["defects"] = r.defects;
    row["action"] = r.action;
    row["transport"] = r.transport;
    out.append(row);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_germflow, m) {
  m.doc() =
      "semiclassical states on isotropic manifolds with complex germs, "
      "assembled and verified in truncated bosonic Fock space";
  m.attr("__version__") = "0.1.0";

  m.def("gaussian_amplitudes", &gaussian_amplitudes, py::arg("eps"), py::arg("phi"),
        py::arg("M"), py::arg("nmax"), py::arg("mode") = "recursion",
        "occupation -> amplitude map of the coherent-squeezed Gaussian");
  m.def("validate_scenario", &validate_scenario, py::arg("config"),
        "chart/germ/quantization defects for a scenario config (JSON text)");
  m.def("residual_scan", &residual_scan, py::arg("config"),
        "Schroedinger residual over the scenario's eps ladder");
  m.def("stationary_table", &stationary_table, py::arg("config"),
        "stationary energies under both quantized-radius conventions");
  m.def("example2", &example2, py::arg("config"),
        "assembled circle sector against the closed-form tensor");
  m.def("assemble_scenario", &assemble_scenario, py::arg("config"), py::arg("eps"),
        "assembled state amplitudes plus quadrature metadata");
  m.def("evolve_table", &evolve_table, py::arg("config"),
        "classical trajectory with canonical-pair defects and transport data");
}
