#pragma once

#include <random>

#include "germflow/fock.hpp"
#include "germflow/geometry.hpp"

namespace germflow::testutil {

inline cplx rand_c(std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(gen), u(gen)};
}

inline VecC rand_vec(int d, std::mt19937& gen) {
  VecC v(d);
  for (int i = 0; i < d; ++i) v(i) = rand_c(gen);
  return v;
}

inline MatC rand_mat(int d, std::mt19937& gen) {
  MatC m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rand_c(gen);
  return m;
}

// complex symmetric with operator norm exactly `target`
inline MatC rand_sym_contraction(int d, double target, std::mt19937& gen) {
  MatC a = rand_mat(d, gen);
  MatC s = 0.5 * (a + a.transpose());
  double nrm = op_norm(s);
  if (nrm == 0.0) return MatC::Zero(d, d);
  return s * (target / nrm);
}

inline MatC rand_unitary(int d, std::mt19937& gen) {
  Eigen::HouseholderQR<MatC> qr(rand_mat(d, gen));
  return qr.householderQ() * MatC::Identity(d, d);
}

inline FockState rand_state(const TruncationSpec& t, std::mt19937& gen) {
  FockState s(t);
  for (const Occ& n : enumerate_basis(t)) s.accumulate(n, rand_c(gen));
  return s;
}

// Random valid circle germ over phi_tilde: per-column transverse squeezes on
// a bilinear-orthocomplement basis, then a common right unitary mix.  The
// construction preserves the symmetry and normalization pairings for any
// squeeze list and any unitary, which gives a genuinely scattered sample of
// the admissible frames.
inline GermFrame rand_circle_germ(const VecC& phi_tilde, std::mt19937& gen,
                                  double max_squeeze = 1.2) {
  const int D = static_cast<int>(phi_tilde.size());
  MatC Ft = MatC::Zero(D, D), Gt = MatC::Zero(D, D);
  Ft.col(0) = kI * phi_tilde;
  Gt.col(0) = -kI * phi_tilde.conjugate();
  if (D > 1) {
    // Hermitian ONB of the orthocomplement of conj(phi_tilde), i.e. the
    // bilinear orthocomplement of phi_tilde
    Eigen::HouseholderQR<MatC> qr(phi_tilde.conjugate());
    MatC U = (qr.householderQ() * MatC::Identity(D, D)).rightCols(D - 1);
    std::uniform_real_distribution<double> us(0.0, max_squeeze);
    MatC Gtr(D, D - 1), Ftr(D, D - 1);
    for (int l = 0; l < D - 1; ++l) {
      double s = us(gen);
      Gtr.col(l) = std::cosh(s) * U.col(l);
      Ftr.col(l) = std::sinh(s) * U.col(l).conjugate();
    }
    MatC mix = rand_unitary(D - 1, gen);
    Gt.rightCols(D - 1) = Gtr * mix;
    Ft.rightCols(D - 1) = Ftr * mix;
  }
  return circle_frame(phi_tilde, Ft, Gt);
}

}  // namespace germflow::testutil
