#include "germflow/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace germflow {

SymbolBlock SymbolBlock::zero(int modes, int m, int n) {
  SymbolBlock b;
  b.modes = modes;
  b.m = m;
  b.n = n;
  std::size_t sz = 1;
  for (int i = 0; i < m + n; ++i) sz *= static_cast<std::size_t>(modes);
  b.c.assign(sz, cplx(0.0));
  return b;
}

std::size_t SymbolBlock::index(const std::vector<int>& ij) const {
  if (static_cast<int>(ij.size()) != m + n)
    throw validation_error("symbol block: index length mismatch");
  std::size_t idx = 0;
  for (int v : ij) {
    if (v < 0 || v >= modes) throw validation_error("symbol block: mode out of range");
    idx = idx * static_cast<std::size_t>(modes) + static_cast<std::size_t>(v);
  }
  return idx;
}

int HamiltonianCoeffs::max_order() const {
  int s = 0;
  for (const auto& [mn, b] : blocks) s = std::max({s, mn.first, mn.second});
  return s;
}

const SymbolBlock* HamiltonianCoeffs::block(int m, int n) const {
  auto it = blocks.find({m, n});
  return it == blocks.end() ? nullptr : &it->second;
}

// ===== named families =======================================================

HamiltonianCoeffs harmonic_hamiltonian(const std::vector<double>& omega) {
  const int D = static_cast<int>(omega.size());
  if (D < 1) throw validation_error("harmonic family needs at least one mode");
  HamiltonianCoeffs h;
  h.modes = D;
  SymbolBlock b = SymbolBlock::zero(D, 1, 1);
  for (int m = 0; m < D; ++m) b.at({m, m}) = omega[m];
  h.blocks[{1, 1}] = std::move(b);
  return h;
}

HamiltonianCoeffs quartic_pair_hamiltonian(int modes, double T, double V) {
  if (modes < 1) throw validation_error("quartic_pair family needs at least one mode");
  HamiltonianCoeffs h;
  h.modes = modes;
  SymbolBlock b1 = SymbolBlock::zero(modes, 1, 1);
  for (int m = 0; m < modes; ++m) b1.at({m, m}) = T;
  h.blocks[{1, 1}] = std::move(b1);

  // (V/2) (sum_m conj(phi)_m phi_m)^2, coefficients symmetrized per group
  SymbolBlock b2 = SymbolBlock::zero(modes, 2, 2);
  for (int k = 0; k < modes; ++k)
    for (int l = 0; l < modes; ++l)
      for (int r = 0; r < modes; ++r)
        for (int s = 0; s < modes; ++s) {
          double v = 0.0;
          if (k == r && l == s) v += 1.0;
          if (k == s && l == r) v += 1.0;
          b2.at({k, l, r, s}) = 0.25 * V * v;
        }
  h.blocks[{2, 2}] = std::move(b2);
  return h;
}

HamiltonianCoeffs number_conserving_hamiltonian(int modes, unsigned seed) {
  if (modes < 1) throw validation_error("number_conserving family needs at least one mode");
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto rnd = [&]() { return cplx(gauss(rng), gauss(rng)); };

  HamiltonianCoeffs h;
  h.modes = modes;

  SymbolBlock b1 = SymbolBlock::zero(modes, 1, 1);
  for (int m = 0; m < modes; ++m)
    for (int n = 0; n < modes; ++n) b1.at({m, n}) = rnd();
  h.blocks[{1, 1}] = std::move(b1);

  SymbolBlock b2 = SymbolBlock::zero(modes, 2, 2);
  const double scale = 0.3 / (modes * modes);
  for (int k = 0; k < modes; ++k)
    for (int l = 0; l < modes; ++l)
      for (int r = 0; r < modes; ++r)
        for (int s = 0; s < modes; ++s) b2.at({k, l, r, s}) = scale * rnd();
  h.blocks[{2, 2}] = std::move(b2);

  symmetrize(h);
  return h;
}

// ===== structural checks ====================================================

static void for_each_tuple(int modes, int len,
                           const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> t(len, 0);
  while (true) {
    fn(t);
    int p = len - 1;
    while (p >= 0 && t[p] == modes - 1) {
      t[p] = 0;
      --p;
    }
    if (p < 0) return;
    ++t[p];
  }
}

// average of a block over permutations within the i-group and the j-group
static SymbolBlock group_symmetrized(const SymbolBlock& b) {
  SymbolBlock out = SymbolBlock::zero(b.modes, b.m, b.n);
  for_each_tuple(b.modes, b.m + b.n, [&](const std::vector<int>& ij) {
    std::vector<int> is(ij.begin(), ij.begin() + b.m);
    std::vector<int> js(ij.begin() + b.m, ij.end());
    std::sort(is.begin(), is.end());
    std::sort(js.begin(), js.end());
    cplx acc = 0.0;
    int cnt = 0;
    std::vector<int> perm_i = is;
    do {
      std::vector<int> perm_j = js;
      do {
        std::vector<int> full = perm_i;
        full.insert(full.end(), perm_j.begin(), perm_j.end());
        acc += b.at(full);
        ++cnt;
      } while (std::next_permutation(perm_j.begin(), perm_j.end()));
    } while (std::next_permutation(perm_i.begin(), perm_i.end()));
    out.at(ij) = acc / static_cast<double>(cnt);
  });
  return out;
}

static std::vector<int> swapped_groups(const std::vector<int>& ij, int m, int n) {
  std::vector<int> out(ij.begin() + m, ij.end());
  out.insert(out.end(), ij.begin(), ij.begin() + m);
  (void)n;
  return out;
}

double hermiticity_defect(const HamiltonianCoeffs& h) {
  double defect = 0.0;
  for (const auto& [mn, b] : h.blocks) {
    SymbolBlock sym = group_symmetrized(b);
    for (std::size_t i = 0; i < b.c.size(); ++i)
      defect = std::max(defect, std::abs(b.c[i] - sym.c[i]));

    const SymbolBlock* partner = h.block(mn.second, mn.first);
    if (!partner) {
      for (const cplx& v : b.c) defect = std::max(defect, std::abs(v));
      continue;
    }
    for_each_tuple(b.modes, b.m + b.n, [&](const std::vector<int>& ij) {
      cplx want = std::conj(partner->at(swapped_groups(ij, b.m, b.n)));
      defect = std::max(defect, std::abs(b.at(ij) - want));
    });
  }
  return defect;
}

void symmetrize(HamiltonianCoeffs& h) {
  for (auto& [mn, b] : h.blocks) b = group_symmetrized(b);
  // pair-average H^{(m,n)} with conj(H^{(n,m)} swapped); create missing partners
  std::map<std::pair<int, int>, SymbolBlock> fixed;
  for (const auto& [mn, b] : h.blocks) {
    auto [m, n] = mn;
    const SymbolBlock* partner = h.block(n, m);
    SymbolBlock nb = SymbolBlock::zero(h.modes, m, n);
    for_each_tuple(h.modes, m + n, [&](const std::vector<int>& ij) {
      cplx v = b.at(ij);
      cplx w = partner ? std::conj(partner->at(swapped_groups(ij, m, n))) : cplx(0.0);
      nb.at(ij) = partner ? 0.5 * (v + w) : v;
    });
    fixed[mn] = std::move(nb);
    if (!partner) {
      SymbolBlock pb = SymbolBlock::zero(h.modes, n, m);
      for_each_tuple(h.modes, m + n, [&](const std::vector<int>& ij) {
        pb.at(swapped_groups(ij, m, n)) = std::conj(fixed[mn].at(ij));
      });
      fixed[{n, m}] = std::move(pb);
    }
  }
  h.blocks = std::move(fixed);
}

// ===== symbol calculus ======================================================

cplx symbol_value(const HamiltonianCoeffs& h, const VecC& phi) {
  if (phi.size() != h.modes) throw validation_error("symbol_value: dimension mismatch");
  cplx total = 0.0;
  for (const auto& [mn, b] : h.blocks) {
    auto [m, n] = mn;
    for_each_tuple(h.modes, m + n, [&](const std::vector<int>& ij) {
      cplx v = b.at(ij);
      if (v == cplx(0.0)) return;
      for (int p = 0; p < m; ++p) v *= std::conj(phi(ij[p]));
      for (int p = m; p < m + n; ++p) v *= phi(ij[p]);
      total += v;
    });
  }
  return total;
}

// derivative of one block with respect to conj(phi)_mu (slot group i)
// and/or phi_nu; deriv_c / deriv_p give the number of derivatives taken.
static void accumulate_derivs(const SymbolBlock& b, const VecC& phi, int deriv_c,
                              int deriv_p,
                              const std::function<void(const std::vector<int>&, cplx)>& sink) {
  // choose ordered distinct slot positions for the derivatives
  const int m = b.m, n = b.n;
  if (deriv_c > m || deriv_p > n) return;
  for_each_tuple(b.modes, m + n, [&](const std::vector<int>& ij) {
    cplx base = b.at(ij);
    if (base == cplx(0.0)) return;
    // positions of derivative slots: all ordered picks of deriv_c from the m
    // i-slots and deriv_p from the n j-slots
    std::vector<int> ci(deriv_c), pj(deriv_p);
    std::function<void(int, int)> pick_c = [&](int start, int depth) {
      if (depth == deriv_c) {
        std::function<void(int, int)> pick_p = [&](int start2, int depth2) {
          if (depth2 == deriv_p) {
            cplx v = base;
            std::vector<int> labels;
            labels.reserve(deriv_c + deriv_p);
            for (int p = 0; p < m; ++p) {
              bool used = false;
              for (int q = 0; q < deriv_c; ++q) used |= (ci[q] == p);
              if (used)
                labels.push_back(ij[p]);
              else
                v *= std::conj(phi(ij[p]));
            }
            for (int p = 0; p < n; ++p) {
              bool used = false;
              for (int q = 0; q < deriv_p; ++q) used |= (pj[q] == p);
              if (used)
                labels.push_back(ij[m + p]);
              else
                v *= phi(ij[m + p]);
            }
            sink(labels, v);
            return;
          }
          for (int p = start2; p < n; ++p) {
            pj[depth2] = p;
            pick_p(p + 1, depth2 + 1);
          }
        };
        pick_p(0, 0);
        return;
      }
      for (int p = start; p < m; ++p) {
        ci[depth] = p;
        pick_c(p + 1, depth + 1);
      }
    };
    pick_c(0, 0);
  });
}

VecC grad_conj(const HamiltonianCoeffs& h, const VecC& phi) {
  VecC g = VecC::Zero(h.modes);
  for (const auto& [mn, b] : h.blocks)
    accumulate_derivs(b, phi, 1, 0,
                      [&](const std::vector<int>& lab, cplx v) { g(lab[0]) += v; });
  return g;
}

MatC hess_cc(const HamiltonianCoeffs& h, const VecC& phi) {
  MatC out = MatC::Zero(h.modes, h.modes);
  for (const auto& [mn, b] : h.blocks)
    accumulate_derivs(b, phi, 2, 0, [&](const std::vector<int>& lab, cplx v) {
      out(lab[0], lab[1]) += v;
      out(lab[1], lab[0]) += v;
    });
  return out;
}

MatC hess_pp(const HamiltonianCoeffs& h, const VecC& phi) {
  MatC out = MatC::Zero(h.modes, h.modes);
  for (const auto& [mn, b] : h.blocks)
    accumulate_derivs(b, phi, 0, 2, [&](const std::vector<int>& lab, cplx v) {
      out(lab[0], lab[1]) += v;
      out(lab[1], lab[0]) += v;
    });
  return out;
}

MatC hess_cp(const HamiltonianCoeffs& h, const VecC& phi) {
  MatC out = MatC::Zero(h.modes, h.modes);
  for (const auto& [mn, b] : h.blocks)
    accumulate_derivs(b, phi, 1, 1, [&](const std::vector<int>& lab, cplx v) {
      out(lab[0], lab[1]) += v;  // row: conj slot, column: plain slot
    });
  return out;
}

MatC hess_pc(const HamiltonianCoeffs& h, const VecC& phi) {
  return hess_cp(h, phi).transpose();
}

// ===== quantization =========================================================

FockState apply_hamiltonian(const HamiltonianCoeffs& h, const FockState& s, double eps) {
  if (h.modes != s.trunc().modes)
    throw validation_error("apply_hamiltonian: mode mismatch");
  if (eps <= 0.0) throw validation_error("apply_hamiltonian: eps must be positive");
  FockState out(s.trunc());

  for (const auto& [mn, b] : h.blocks) {
    auto [m, n] = mn;
    const double escale = std::pow(eps, 0.5 * (m + n));
    for (const auto& [occ, amp] : s.amplitudes()) {
      for_each_tuple(h.modes, m + n, [&](const std::vector<int>& ij) {
        cplx coef = b.at(ij);
        if (coef == cplx(0.0)) return;
        // destroy j_n .. j_1 acting right to left, then create i_m .. i_1
        Occ cur = occ;
        double fac = 1.0;
        for (int p = m + n - 1; p >= m; --p) {
          int j = ij[p];
          if (cur[j] == 0) return;
          fac *= std::sqrt(static_cast<double>(cur[j]));
          cur[j] -= 1;
        }
        for (int p = m - 1; p >= 0; --p) {
          int i = ij[p];
          cur[i] += 1;
          fac *= std::sqrt(static_cast<double>(cur[i]));
        }
        out.accumulate(cur, coef * escale * fac * amp);
      });
    }
  }
  out.add_lost2(s.lost2());
  return out;
}

MatC dense_matrix(const HamiltonianCoeffs& h, const TruncationSpec& t, double eps) {
  std::vector<Occ> basis = enumerate_basis(t);
  std::map<Occ, int> pos;
  for (std::size_t i = 0; i < basis.size(); ++i) pos[basis[i]] = static_cast<int>(i);
  MatC H = MatC::Zero(basis.size(), basis.size());
  for (std::size_t col = 0; col < basis.size(); ++col) {
    FockState e = FockState::basis(t, basis[col]);
    FockState he = apply_hamiltonian(h, e, eps);
    for (const auto& [n, a] : he.amplitudes()) H(pos.at(n), col) = a;
  }
  return H;
}

}  // namespace germflow
