#pragma once

#include <functional>
#include <map>

#include "germflow/fock.hpp"
#include "germflow/geometry.hpp"

namespace germflow {

// Coherent-squeezed Gaussian in physical scaling:
//   Phi = e^{log_scale} exp{ (1/eps) phi.(sqrt(eps) psi+ - conj phi)
//         + (1/2 eps) (sqrt(eps) psi+ - conj phi) M (sqrt(eps) psi+ - conj phi) } Phi_0.
// Normal ordering gives  Phi = c exp(a.psi+ + psi+ M psi+ / 2) Phi_0  with
//   a = (phi - M conj phi) / sqrt(eps),
//   log c = log_scale - (conj phi . phi)/eps + (conj phi M conj phi)/(2 eps).
struct GaussianData {
  double eps = 1.0;
  VecC phi;
  MatC M;               // symmetric, ||M|| < 1
  cplx log_scale = 0.0; // extra log prefactor folded in analytically
};

// Three independent constructions of the same amplitudes:
//  kRecursion - mode-pivot three-term recursion over occupations (production)
//  kSeries    - truncated Taylor series of the exponential applied to vacuum
//  kOracle    - literal sum over singleton/pair matchings per basis vector
enum class GaussianMode { kRecursion, kSeries, kOracle };

VecC gaussian_shift(const GaussianData& g);          // a
cplx gaussian_log_prefactor(const GaussianData& g);  // log c

// e^{log_c} exp(a.psi+ + psi+ M psi+ / 2) Phi_0 in truncation t.  Raising
// never feeds back below the cap, so in-cap amplitudes are exact in every
// mode; for kRecursion/kSeries lost2 records the weight of the first two
// sectors beyond the cap (a lower estimate of the discarded tail).
FockState gaussian_from_exponent(const VecC& a, const MatC& M, cplx log_c,
                                 const TruncationSpec& t,
                                 GaussianMode mode = GaussianMode::kRecursion);

FockState build_gaussian(const GaussianData& g, const TruncationSpec& t,
                         GaussianMode mode = GaussianMode::kRecursion);

// first-order ladder polynomial  sum_m (create_m psi+_m + destroy_m psi-_m) + scalar
struct LinearLadder {
  VecC create;
  VecC destroy;
  cplx scalar = 0.0;
};
FockState apply_linear(const LinearLadder& op, const FockState& s);

enum class GermLadderKind { kRaise, kLower };

// Frame ladder at (tau, eps), transverse column alpha:
//   raise: conj(G)_{ma} (psi+_m - conj(phi)_m/sqrt eps) - conj(F)_{ma} (psi-_m - phi_m/sqrt eps)
//   lower: G_{ma} (psi-_m - phi_m/sqrt eps) - F_{ma} (psi+_m - conj(phi)_m/sqrt eps)
LinearLadder germ_ladder(const GermFrame& g, const IsotropicManifold& m,
                         const std::vector<double>& tau, double eps, int alpha,
                         GermLadderKind kind);

// Same column combination without the scalar shifts.
LinearLadder frame_ladder(const MatC& F, const MatC& G, int alpha,
                          GermLadderKind kind);

// polynomial in the D shifted creation symbols X_m = psi+_m - shift_m,
// stored as exponent multi-index -> coefficient
struct CreationPoly {
  int modes = 1;
  std::map<Occ, cplx> terms;

  static CreationPoly one(int modes);
  CreationPoly& operator*=(cplx s);
  int degree() const;
};

FockState apply_creation_poly(const CreationPoly& p, const VecC& shift,
                              const FockState& s);

// Action of a linear ladder on p(X) Phi for a Gaussian Phi, reduced to the
// polynomial ring:  p(X) -> (v.X) p(X) + w.grad p(X).  For a Gaussian with
// matrix M the germ ladders give
//   raise: v = (conj G - M conj F) column,  w = -conj F column
//   lower: v = (M G - F) column,            w = +G column.
CreationPoly ladder_on_poly(const CreationPoly& p, const VecC& v, const VecC& w);

// Weyl displacement exp(u.psi+ - conj u.psi-) s via the exact factorization
// e^{-|u|^2/2} e^{u.psi+} e^{-conj u.psi-}; both factors are terminating
// series in truncation.  displace_expm is the direct scaled-Taylor
// exponential of the anti-Hermitian generator, kept as a cross-check.
FockState displace(const VecC& u, const FockState& s);
FockState displace_expm(const VecC& u, const FockState& s);

// Exponent constant of the half form at the chart origin,
//   g = conj(phi).phi / 2 + (conj(phi).conj(phi) - phi.phi) / 4.
cplx origin_constant(const VecC& phi0);

// Stationary-overlap symbol: a shared transverse Gaussian matrix D(tau) with
// two polynomial prefactors, defining for a = 1,2 the states
//   Phi_a = int dtau e^{iS(tau)/eps} / eps^{k/4}
//           P_a(psi+ - conj phi(tau)/sqrt eps)
//           exp{ (psi+ - conj phi/sqrt eps) D (psi+ - conj phi/sqrt eps) / 2 }
//           exp{ (1/eps) phi.(sqrt eps psi+ - conj phi) } Phi_0,
// with iS(tau) the closed line integral of phi . d(conj phi) from the chart
// origin plus the origin constant g.
struct OverlapSymbol {
  std::function<MatC(const std::vector<double>&)> D;
  std::function<CreationPoly(const std::vector<double>&)> P1;
  std::function<CreationPoly(const std::vector<double>&)> P2;
};

// <Phi_1, Phi_2> at finite eps on the truncated space
cplx overlap_lhs(const OverlapSymbol& y, const IsotropicManifold& m, double eps,
                 const TruncationSpec& t, int tau_pts);

// eps -> 0 limit:  int dtau int dxi <Y_1(psi+) Phi_0,
//   exp(xi_b (dphi/dtau_b . psi+ - d conj phi/dtau_b . psi-)) Y_2(psi+) Phi_0>
// with Y_a(psi+) Phi_0 = P_a(psi+) exp(psi+ D psi+ / 2) Phi_0.  The xi box
// half-width is chosen from the Gaussian decay of the displaced overlap;
// xi_tail reports the worst boundary integrand times the box volume.
struct OverlapLimit {
  cplx value = 0.0;
  double xi_box = 0.0;
  double xi_tail = 0.0;
};
OverlapLimit overlap_rhs(const OverlapSymbol& y, const IsotropicManifold& m,
                         const TruncationSpec& t, int tau_pts, int xi_pts);

}  // namespace germflow
