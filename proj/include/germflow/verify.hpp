#pragma once

#include <functional>

#include "germflow/assemble.hpp"
#include "germflow/dynamics.hpp"
#include "germflow/hamiltonian.hpp"

namespace germflow {

// Relative residual of the scaled Schroedinger equation at time t,
//   r = || i d/dt Psi - (1/eps) H Psi || / || Psi ||,
// with the time derivative taken by phase-gauged central difference:
// both offset states are multiplied by e^{+-i E dt}, E the Rayleigh
// quotient <Psi, H Psi> / (eps <Psi,Psi>), and E is subtracted from the
// generator.  Identical in the dt -> 0 limit, but free of the E^3 dt^2
// error that would otherwise dominate quadratic benchmarks.
double residual_norm(const HamiltonianCoeffs& h, double eps,
                     const std::function<FockState(double)>& psi_at, double t,
                     double dt, double* norm_out = nullptr);

// central-difference step used by the scans
inline double residual_dt(double eps) { return std::min(1e-3, eps / 10.0); }

struct ResidualReport {
  std::vector<double> eps;
  std::vector<double> times;
  // residual and norm per (eps, time), indexed [i_eps][i_time]
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> norm;
  // per-eps worst residual across times
  std::vector<double> r_max;
  double slope = 0.0;          // d log r / d log eps over points above the floor
  double fit_residual = 0.0;   // max log-space deviation from the fit
  bool slope_fitted = false;   // false when every residual sits below the floor
  double floor = 1e-6;
  double norm_ratio = 1.0;     // max/min of ||Psi|| over the whole scan
};

struct ScanConfig {
  std::vector<double> eps;     // geometric ladder, >= 3 values for a fit
  std::vector<double> times;
  double floor = 1e-6;         // residuals below this skip the slope fit
};

ResidualReport epsilon_scan(const HamiltonianCoeffs& h,
                            const std::function<FockState(double eps, double t)>& psi,
                            const ScanConfig& cfg);

// least-squares slope of log y vs log x; residual gets the max deviation
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                        double* residual = nullptr);

// Bogoliubov stationary modes over the uniformly wound circle through
// phi_t: the winding rate Omega with grad H = Omega phi_t, and the D-1
// transverse eigencolumns of
//   [ hess_pc - Omega        hess_pp      ] (G_l)     (G_l)
//   [ -hess_cc         -(hess_cp - Omega) ] (F_l) = b (F_l)
// selected on the positive-normalization branch G+G - F+F = 1 and sorted
// by b.  Column 0 is the chart tangent with b = 0.
struct StationaryModes {
  VecC phi;
  double Omega = 0.0;
  VecR beta;              // per frame column, beta(0) = 0
  MatC Ft, Gt;            // base frame matrices
  double eigen_residual = 0.0;
  double phi_residual = 0.0;  // || grad H - Omega phi ||
};

StationaryModes stationary_modes(const HamiltonianCoeffs& h, const VecC& phi_t,
                                 double tol = 1e-8);

GermFrame stationary_frame(const StationaryModes& sm);

// Stationary energy of the wound-circle state,
//   E = H(conj phi, phi)/eps
//       + (1/4) sum_mn [ hess_pp_mn (F G^{-1})_mn + hess_cc_mn conj(F G^{-1})_mn ]
//       (+ sum_a beta_{1+a} nu_a when both are supplied).
double stationary_energy(const HamiltonianCoeffs& h, const VecC& phi_t,
                         const MatC& Ft, const MatC& Gt, double eps,
                         const VecR* beta = nullptr,
                         const std::vector<int>* nu = nullptr);

// Quantized circle radius rho = |phi_t|^2 for excitation numbers nu:
//   with_beta_offset: rho = eps (N + sum beta_l(rho) nu_l / Omega(rho)),
//                     solved by fixed-point iteration;
//   otherwise:        rho = eps N.
// direction must be a unit vector; the modes are returned at the final rho.
struct QuantizedCircle {
  double rho = 0.0;
  StationaryModes modes;
};
QuantizedCircle quantize_circle(const HamiltonianCoeffs& h, const VecC& direction,
                                double eps, int N, const std::vector<int>& nu,
                                bool with_beta_offset, int iters = 60,
                                double tol = 1e-13);

// Heisenberg consistency of the frame raising combination: evolve the probe
// with the quadratic generator along the flow and compare
// [evolve o ladder(0)] against [ladder(t) o evolve].  Returns the norm
// defect relative to the probe norm.
double heisenberg_defect(const HamiltonianCoeffs& h, const VecC& phi0,
                         const MatC& F0, const MatC& G0, int alpha,
                         const FockState& probe, double time, int steps);

// dense-propagator reference evolution  Psi(t) = exp(-i t H / eps) Psi(0)
// (small systems only; the basis is capped to keep the solve dense-friendly)
FockState exact_evolve(const HamiltonianCoeffs& h, const FockState& psi0,
                       double time, double eps, std::size_t basis_cap = 6000);

// fidelity |<a, b>| / (||a|| ||b||)
double fidelity(const FockState& a, const FockState& b);

}  // namespace germflow
