#pragma once

#include <map>
#include <utility>

#include "germflow/fock.hpp"

namespace germflow {

// One (m,n) monomial block of a polynomial symbol
//   H(conj phi, phi) = sum_{m,n} H^{(m,n)}_{i1..im, j1..jn}
//                      conj(phi)_{i1}..conj(phi)_{im} phi_{j1}..phi_{jn}.
// Coefficients are stored densely, index order (i_1..i_m, j_1..j_n),
// row-major over D^{m+n} entries.
struct SymbolBlock {
  int m = 0;
  int n = 0;
  int modes = 1;
  std::vector<cplx> c;

  static SymbolBlock zero(int modes, int m, int n);
  std::size_t index(const std::vector<int>& ij) const;
  cplx at(const std::vector<int>& ij) const { return c[index(ij)]; }
  cplx& at(const std::vector<int>& ij) { return c[index(ij)]; }
};

// Polynomial Hamiltonian symbol.  Well-formed coefficients are separately
// symmetric in the i-group and the j-group and satisfy the conjugation
// pairing conj(H^{(m,n)}_{ij}) = H^{(n,m)}_{ji}, which makes the symbol
// real-valued and its quantization self-adjoint.
struct HamiltonianCoeffs {
  int modes = 1;
  std::map<std::pair<int, int>, SymbolBlock> blocks;

  int max_order() const;  // largest m or n present
  const SymbolBlock* block(int m, int n) const;
};

// named families
HamiltonianCoeffs harmonic_hamiltonian(const std::vector<double>& omega);
// T * (total number symbol) + (V/2) * (total number symbol)^2
HamiltonianCoeffs quartic_pair_hamiltonian(int modes, double T, double V);
// random Hermitian one-body part plus a random number-conserving quartic
HamiltonianCoeffs number_conserving_hamiltonian(int modes, unsigned seed);

// max deviation from group symmetry + conjugation pairing
double hermiticity_defect(const HamiltonianCoeffs& h);
// project onto the well-formed class (group-symmetrize, then pair-average)
void symmetrize(HamiltonianCoeffs& h);

// --- symbol calculus at a point -------------------------------------------
cplx symbol_value(const HamiltonianCoeffs& h, const VecC& phi);
VecC grad_conj(const HamiltonianCoeffs& h, const VecC& phi);  // dH/d(conj phi)_m

// second derivatives; "c" marks a conj(phi) slot, "p" a phi slot:
//   hess_cc = d2H/dconj(phi) dconj(phi)   hess_cp = d2H/dconj(phi) dphi
//   hess_pc = d2H/dphi dconj(phi)         hess_pp = d2H/dphi dphi
MatC hess_cc(const HamiltonianCoeffs& h, const VecC& phi);
MatC hess_cp(const HamiltonianCoeffs& h, const VecC& phi);
MatC hess_pc(const HamiltonianCoeffs& h, const VecC& phi);
MatC hess_pp(const HamiltonianCoeffs& h, const VecC& phi);

// Normal-ordered quantization: each block contributes
// eps^{(m+n)/2} H^{(m,n)}_{ij} psi+_{i1}..psi+_{im} psi-_{j1}..psi-_{jn}.
FockState apply_hamiltonian(const HamiltonianCoeffs& h, const FockState& s, double eps);

// dense matrix over enumerate_basis(t), same operator as apply_hamiltonian
MatC dense_matrix(const HamiltonianCoeffs& h, const TruncationSpec& t, double eps);

}  // namespace germflow
