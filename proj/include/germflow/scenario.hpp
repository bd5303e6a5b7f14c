#pragma once

#include <string>

#include "json.hpp"

#include "germflow/assemble.hpp"
#include "germflow/verify.hpp"

namespace germflow {

using json = nlohmann::json;

struct QuadratureCfg {
  int tau_pts = 64;
  int max_doublings = 3;
  double quad_tol = 1e-8;
};

// One self-contained run description, parsed from a JSON document.  `raw`
// keeps the normalized parsed tree so serialization round-trips to an
// identical value.
struct Scenario {
  std::string name;
  TruncationSpec trunc{1, 8};
  HamiltonianCoeffs h;

  std::string manifold_family = "point";  // point | circle | torus2
  VecC phi;                               // base point / winding amplitude
  std::vector<int> axis_of_mode;          // torus2 only

  // vacuum | base | squeezed | stationary | inline
  std::string germ_init = "vacuum";
  double squeeze = 0.0;  // squeezed init (point: uniform Msym; circle: transverse)
  MatC msym;             // squeezed point init, explicit symmetric matrix
  MatC F0, G0;           // inline init

  std::vector<double> eps;
  std::vector<double> times;
  int steps_per_unit = 2000;
  QuadratureCfg quad;
  std::vector<int> nu;   // transverse excitation powers
  int quanta = 0;        // target sector N for circle scenarios (0 = infer)

  double quantization_tol = 1e-6;
  double drift_tol = 1e-6;
  double residual_floor = 1e-6;

  json raw;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& s);

// "key=val,key=val" with keys quantization, quad, drift, floor
void apply_tol_overrides(Scenario& s, const std::string& overrides);

IsotropicManifold scenario_manifold(const Scenario& s);
GermFrame scenario_frame(const Scenario& s, const IsotropicManifold& m);
AssemblySpec scenario_assembly(const Scenario& s, double eps);

// time-indexed source at fixed eps and fixed grid resolution; t = 0 skips
// the flow entirely
std::function<FockState(double)> scenario_time_source(const Scenario& s,
                                                      double eps, int pts);

// --- runners ----------------------------------------------------------------

struct ValidationResult {
  ManifoldReport manifold;
  GermReport germ;
  std::vector<double> quantization;  // defect per (eps, axis), flattened
  bool ok = false;
};
ValidationResult run_validate(const Scenario& s);

struct EvolveRow {
  double t = 0.0;
  VecC phi;
  std::array<double, 4> defects{};
  cplx action;     // accumulated int (phi . d conj phi/dt - i H) dt
  cplx transport;  // amplitude factor e^{-i s_tr / 4}
};
std::vector<EvolveRow> run_evolve(const Scenario& s);

ResidualReport run_residual_scan(const Scenario& s);

struct StationaryRow {
  double eps = 0.0;
  double rho4 = 0.0, rho5 = 0.0;
  double e4 = 0.0, e5 = 0.0;
  double ediff = 0.0;
  double residual = 0.0;  // ||(H/eps - E4) Psi|| / ||Psi|| on the assembled state
  double norm = 0.0;
};
std::vector<StationaryRow> run_stationary(const Scenario& s, bool with_residual);

struct Example2Result {
  int N = 0;
  double eps = 0.0;
  int tau_pts = 0;
  double quad_error = 0.0;    // || Psi_p - Psi_2p ||
  double off_sector = 0.0;    // amplitude norm outside sector N
  cplx scale;                 // fitted single complex factor
  double max_rel_dev = 0.0;   // max |assembled - scale*closed| / max |scale*closed|
  SectorTensor assembled;
  SectorTensor closed;
};
Example2Result run_example2(const Scenario& s);

}  // namespace germflow
