#pragma once

#include <functional>
#include <optional>

#include "germflow/types.hpp"

namespace germflow {

// Chart of a k-dimensional isotropic manifold in the phase space of D
// modes, with phi_j = (Q_j + i P_j)/sqrt(2).  All coordinates are periodic
// with the listed periods; k = 0 describes a single point.  Analytic
// tangent closures are optional, validators fall back to central
// differences when they are absent.
struct IsotropicManifold {
  int modes = 1;
  int k = 0;
  std::vector<double> period;  // size k
  std::function<VecC(const std::vector<double>&)> phi;
  std::vector<std::function<VecC(const std::vector<double>&)>> dphi;

  VecC phi_at(const std::vector<double>& tau) const;
  // D x k matrix of tangents dphi/dtau_a (analytic if available, else FD)
  MatC tangent(const std::vector<double>& tau) const;
  bool has_analytic_tangent() const { return !dphi.empty(); }
};

IsotropicManifold point_manifold(const VecC& phi0);
// phi(tau) = phi_tilde * e^{i tau}
IsotropicManifold circle_manifold(const VecC& phi_tilde);
// two-torus: phi_j(tau) = phi_tilde_j * e^{i tau_{axis_of_mode[j]}}
IsotropicManifold torus2_manifold(const VecC& phi_tilde,
                                  const std::vector<int>& axis_of_mode);

struct ManifoldReport {
  double isotropy_defect = 0.0;  // max |sum_j (dP_a dQ_b - dP_b dQ_a)|
  double gram_min_eig = 0.0;     // min eigenvalue of the tangent Gram
  double gram_imag = 0.0;        // max |Im Gram| (vanishes on isotropic charts)
  bool analytic = true;

  bool ok(const Tolerances& tol) const;
};

ManifoldReport validate_manifold(const IsotropicManifold& m, int samples_per_axis = 16);

// Frame of a complex germ over the manifold: matrices F(tau), G(tau) of
// size D x D whose first k columns coincide with the chart tangents,
//   F_{.a} = dphi/dtau_a,  G_{.a} = d(conj phi)/dtau_a,  a < k.
// (F,G) encode the usual (B,C) pair through F = (C+iB)/sqrt(2),
// G = (C-iB)/sqrt(2); the germ conditions read
//   F^T G = G^T F,   G+G - F+F = L,   G invertible,
// with L = diag(0 x k, 1, 1, ...).
struct GermFrame {
  int modes = 1;
  int k = 0;
  std::function<MatC(const std::vector<double>&)> F, G;
  // analytic monodromy phases per periodic axis when known:
  // around loop `axis` column alpha returns to itself times exp(-i gamma)
  std::vector<std::vector<double>> loop_gamma;

  MatC F_at(const std::vector<double>& tau) const { return F(tau); }
  MatC G_at(const std::vector<double>& tau) const { return G(tau); }
};

MatR germ_L(int modes, int k);  // diag(0 x k, 1 x (D-k))

// --- frame builders ---------------------------------------------------------

// k = 0 frame from explicit matrices
GermFrame point_frame(const MatC& F, const MatC& G);
// vacuum frame F = 0, G = E
GermFrame vacuum_point_frame(int modes);
// squeezed frame with prescribed ratio  F G^{-1} = Msym (symmetric, norm < 1):
// G = (E - M+M)^{-1/2}, F = Msym G
GermFrame squeezed_point_frame(const MatC& Msym);

// circle frame with uniform winding, F(tau) = Ft e^{i tau}, G(tau) = Gt e^{-i tau};
// the first columns must be Ft_{.0} = i phi_tilde, Gt_{.0} = -i conj(phi_tilde)
GermFrame circle_frame(const VecC& phi_tilde, const MatC& Ft, const MatC& Gt);
// minimal valid circle frame: transverse block spans the bilinear
// orthocomplement of phi_tilde with no squeezing
GermFrame circle_base_frame(const VecC& phi_tilde);
// circle frame with uniformly squeezed transverse block: G cols cosh(s) U,
// F cols sinh(s) conj(U) over the orthocomplement basis U; s = 0 recovers
// the base frame; s != 0 makes the transverse Gaussian matrix nonzero
GermFrame squeezed_circle_frame(const VecC& phi_tilde, double squeeze);
// circle frame with per-column winding set by mode offsets beta:
// F_{ml}(tau) = Ft_{ml} e^{-i(beta_l/Omega - 1) tau},
// G_{ml}(tau) = Gt_{ml} e^{-i(beta_l/Omega + 1) tau}
GermFrame stationary_circle_frame(const VecC& phi_tilde, double Omega,
                                  const VecR& beta, const MatC& Ft, const MatC& Gt);
// product-of-circles frame matching torus2_manifold
GermFrame torus2_base_frame(const VecC& phi_tilde, const std::vector<int>& axis_of_mode);

struct GermReport {
  double tangent_defect = 0.0;        // frame columns vs chart derivatives
  double symmetry_defect = 0.0;       // || F^T G - G^T F ||
  double normalization_defect = 0.0;  // || G+G - F+F - L ||
  double gmin = 0.0;                  // smallest singular value of G
  double monodromy_unitarity = 0.0;   // || A+A - E || over fundamental loops
  double monodromy_consistency = 0.0; // || F(end) - F(start) A ||
  bool analytic = true;               // tangents probed analytically or via FD

  bool ok(const Tolerances& tol) const;
};

GermReport validate_germ(const IsotropicManifold& m, const GermFrame& g,
                         int samples_per_axis = 16);

// Transverse Gaussian matrix of the frame at tau:
//   M = F G^{-1} - T W T^T,  T = chart tangent matrix, W = (T+T)^{-1}.
// The returned matrix is symmetrized; `asym` reports the defect.
struct MMatrixResult {
  MatC M;
  double asym = 0.0;
};
MMatrixResult build_M(const IsotropicManifold& m, const GermFrame& g,
                      const std::vector<double>& tau);

// volume density sqrt(det Gram) of the tangent pairing at tau
double measure_density(const IsotropicManifold& m, const std::vector<double>& tau);

// Determinant of a rank-k update R = E - sum_c y^c (z^c)^T via the k x k
// identity det R = det(delta_ab - (y^a, z^b)) with the *bilinear* pairing
// (u,v) = sum_j u_j v_j.  Also evaluates the dense determinant and throws
// if the two disagree beyond `tol` (relative).
cplx rank_update_det(const std::vector<VecC>& y, const std::vector<VecC>& z,
                     double tol = 1e-12);

// Spectral gap of L + Y with Y = G+ (E - M+M) G - L; positive exactly when
// the transverse Gaussian matrix is a strict contraction.
double gap_bound(const IsotropicManifold& m, const GermFrame& g,
                 const std::vector<double>& tau);

// Loop integral  S = (i / 2 pi eps) \oint phi . d(conj phi)  along the
// fundamental loop of one periodic axis (equals |phi|^2/eps on the circle).
double loop_action(const IsotropicManifold& m, double eps, int axis, int npts = 256);

// Distance of the loop action from the admissible set
// { n + sum_alpha gamma_alpha nu_alpha / (2 pi) : n integer }.
double quantization_defect(const IsotropicManifold& m, double eps, int axis,
                           const std::vector<double>& gamma = {},
                           const std::vector<int>& nu = {}, int npts = 256);

// Uniform product grid over the chart [0,period_1) x ... x [0,period_k),
// pts points per axis, no duplicated endpoints.  `phase[i]` carries the
// accumulated line integral  int phi . d(conj phi)  from node 0 to node i
// along the axis-ordered lattice path (Simpson per segment); the form is
// closed on an isotropic manifold, so the path choice only matters modulo
// the per-axis loop integrals stored in `loop_total`.  k = 0 degenerates to
// a single empty node with cell = 1.
struct TauGrid {
  int k = 0;
  std::vector<int> pts;                    // nodes per axis
  std::vector<std::vector<double>> nodes;  // row-major, last axis fastest
  double cell = 1.0;                       // product of axis spacings
  std::vector<cplx> phase;                 // line integral to each node
  std::vector<cplx> loop_total;            // full-loop integral per axis
};
TauGrid make_tau_grid(const IsotropicManifold& m, int pts_per_axis);

}  // namespace germflow
