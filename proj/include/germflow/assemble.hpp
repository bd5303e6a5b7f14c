#pragma once

#include <functional>

#include "germflow/dynamics.hpp"
#include "germflow/gaussian.hpp"
#include "germflow/geometry.hpp"
#include "germflow/hamiltonian.hpp"

namespace germflow {

// Raised when a periodic axis fails the loop quantization condition; the
// CLI maps this to the machine-readable failure code "quantization".
struct quantization_error : validation_error {
  using validation_error::validation_error;
};

// One entry of the generalized amplitude family: a coefficient function on
// the chart times the product of germ raising operators for the listed
// transverse columns (indices into 0..D-k-1).  Sums of such entries are
// admissible only when every monodromy phase vanishes.
struct ExcitationTerm {
  std::vector<int> alphas;
  std::function<cplx(const std::vector<double>&)> coeff;
};

struct AssemblySpec {
  IsotropicManifold manifold;
  GermFrame frame;
  double eps = 1.0;
  // scalar amplitude on the chart; empty means f = 1
  std::function<cplx(const std::vector<double>&)> f;
  // excitation powers per transverse column (size D-k or empty)
  std::vector<int> nu;
  // generalized families; mutually exclusive with nonzero nu
  std::vector<ExcitationTerm> families;
  // chart origin for the phase accumulation; empty selects grid node 0.
  // Must land on a node of the base grid so refinements keep it exact.
  std::vector<double> tau0;
  int tau_pts = 64;          // base nodes per periodic axis
  int max_doublings = 3;     // refinement budget for self-consistency
  double quad_tol = 1e-8;    // relative self-consistency target
  double quantization_tol = 1e-6;
};

struct AssembledVector {
  FockState state;
  double eps = 1.0;
  int tau_pts = 0;           // resolution the returned state was built at
  double quad_error = 0.0;   // norm distance between the last two refinements
  double truncation_loss = 0.0;  // accumulated lost-weight ledger (norm^2 units)
  double particle_number = 0.0;  // conj(phi).phi / eps at the chart origin
};

// Quadrature assembly of the global vector
//   Psi = int dtau  sqrt(det Gram) / ((2 pi)^{k/2} eps^{k/4} |det G|^{1/2})
//         f(tau) e^{(1/eps)(g + int phi d conj phi)}  A+^nu  Phi_{phi,M}(tau)
// at a fixed resolution, or with doubling until two successive refinements
// agree to quad_tol (assemble).  Each periodic axis must satisfy the loop
// quantization condition with the frame's monodromy phases.
AssembledVector assemble_fixed(const AssemblySpec& spec, const TruncationSpec& t,
                               int pts);
AssembledVector assemble(const AssemblySpec& spec, const TruncationSpec& t);

// Same quadrature with every chart point advanced to `time` by the
// Hamiltonian flow (phi by the classical flow, the frame by the linearized
// flow, the amplitude by the transport factor, the exponent by the action
// integral).  `steps` is the integrator step count per node.
AssembledVector assemble_evolved_fixed(const AssemblySpec& spec,
                                       const HamiltonianCoeffs& h, double time,
                                       int steps, const TruncationSpec& t,
                                       int pts);
AssembledVector assemble_evolved(const AssemblySpec& spec,
                                 const HamiltonianCoeffs& h, double time,
                                 int steps, const TruncationSpec& t);

// Closed-form N-quantum sector of the uniformly wound circle state: the
// symmetric tensor with word component
//   scale * sum over partial pairings of the word of
//     prod_{singles} phi_t[m] * prod_{pairs (a,b)} eps * Mt_{ab}.
// Pairings are enumerated exactly; N is capped (default 8).
SectorTensor circle_sector_tensor(const VecC& phi_t, const MatC& Mt, int N,
                                  cplx scale, double eps, int max_order = 8);

}  // namespace germflow
