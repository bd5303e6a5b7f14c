#pragma once

#include <iosfwd>
#include <map>

#include "germflow/types.hpp"

namespace germflow {

// Truncated bosonic Fock space over `modes` single-particle modes keeping
// states of total occupation <= nmax.
struct TruncationSpec {
  int modes = 1;
  int nmax = 0;

  bool operator==(const TruncationSpec&) const = default;
  void check() const;
};

using Occ = std::vector<int>;  // occupation numbers, one entry per mode

int occ_total(const Occ& n);
std::vector<Occ> enumerate_basis(const TruncationSpec& t);  // lexicographic

// Sparse Fock vector.  Amplitudes live in a sorted map keyed by occupation
// vector, so iteration and every reduction over it are deterministic.
// `lost2` is a running ledger of squared norm dropped by truncation in the
// operations that produced this state.
class FockState {
 public:
  FockState() = default;
  explicit FockState(TruncationSpec t) : trunc_(t) { t.check(); }

  static FockState vacuum(TruncationSpec t);
  static FockState basis(TruncationSpec t, const Occ& n);

  const TruncationSpec& trunc() const { return trunc_; }
  const std::map<Occ, cplx>& amplitudes() const { return amp_; }

  double lost2() const { return lost2_; }
  void add_lost2(double l2) { lost2_ += l2; }

  cplx amplitude(const Occ& n) const;
  // adds a*|n>; components beyond nmax go to the lost ledger
  void accumulate(const Occ& n, cplx a);

  FockState& operator*=(cplx s);
  FockState& axpy(cplx s, const FockState& other);  // this += s * other
  FockState& operator+=(const FockState& other) { return axpy(cplx(1.0), other); }

  double norm2() const;
  double norm() const { return std::sqrt(norm2()); }
  void prune(double eps = 0.0);

  std::map<int, double> sector_norm2() const;  // total quanta -> squared norm
  FockState sector_project(int N) const;

 private:
  TruncationSpec trunc_;
  std::map<Occ, cplx> amp_;
  double lost2_ = 0.0;
};

// conjugate-linear in the first argument: (f,g) = sum conj(f_n) g_n
cplx inner_product(const FockState& f, const FockState& g);

// psi+_j |n> = sqrt(n_j+1) |n+e_j>,  psi-_j |n> = sqrt(n_j) |n-e_j>.
// Creation out of the truncated space is dropped into the lost ledger.
FockState apply_create(const FockState& s, int mode);
FockState apply_destroy(const FockState& s, int mode);

enum class Ladder { create, destroy };
FockState apply_ladder(const FockState& s, int mode, Ladder which);

// Dense symmetric-tensor view of one fixed-total-occupation sector.
// Components are indexed by mode words (i_1,...,i_N), row-major.
struct SectorTensor {
  int modes = 1;
  int order = 0;
  std::vector<cplx> c;

  static SectorTensor zero(int modes, int order);
  std::size_t index(const std::vector<int>& word) const;
  cplx at(const std::vector<int>& word) const { return c[index(word)]; }
  cplx& at(const std::vector<int>& word) { return c[index(word)]; }
};

// Conversion between occupation amplitudes and symmetric tensor components
// uses the multinomial weight  amp(n) = sqrt(N!/prod_j n_j!) * T[word(n)].
SectorTensor tensor_from_sector(const FockState& s, int N);
FockState state_from_tensor(const TruncationSpec& t, const SectorTensor& T,
                            double symmetry_tol = 1e-12);

// plain-text serialization, 17 significant digits (round-trips exactly)
void write_state(std::ostream& os, const FockState& s);
FockState read_state(std::istream& is);

}  // namespace germflow
