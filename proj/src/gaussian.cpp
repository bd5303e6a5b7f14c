#include "germflow/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

namespace germflow {

namespace {

void check_gaussian_matrix(const MatC& M, int modes) {
  if (M.rows() != modes || M.cols() != modes)
    throw validation_error("gaussian: matrix dimension mismatch");
  double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw validation_error("gaussian: matrix must be symmetric");
}

// X s with X = a.psi+ + (1/2) psi+ M psi+
FockState apply_raise_form(const VecC& a, const MatC& M, const FockState& s) {
  const int modes = s.trunc().modes;
  FockState out(s.trunc());
  for (int j = 0; j < modes; ++j)
    if (a(j) != cplx(0.0)) out.axpy(a(j), apply_create(s, j));
  for (int j = 0; j < modes; ++j)
    for (int l = 0; l <= j; ++l) {
      cplx c = (j == l) ? 0.5 * M(j, j) : M(j, l);
      if (c != cplx(0.0)) out.axpy(c, apply_create(apply_create(s, l), j));
    }
  return out;
}

// Occupation coefficients of exp(a.psi+ + psi+ M psi+ / 2) Phi_0 from the
// pivot recursion: with j the first occupied mode of n,
//   C(n) = a_j C(n-e_j)/sqrt(n_j) + M_jj sqrt((n_j-1)/n_j) C(n-2e_j)
//          + sum_{l != j} M_jl sqrt(n_l/n_j) C(n-e_j-e_l).
std::map<Occ, cplx> recursion_coeffs(const VecC& a, const MatC& M,
                                     const TruncationSpec& t) {
  const int modes = t.modes;
  std::map<Occ, cplx> C;
  for (const Occ& n : enumerate_basis(t)) {
    if (occ_total(n) == 0) {
      C[n] = 1.0;
      continue;
    }
    int j = 0;
    while (n[j] == 0) ++j;
    Occ m1 = n;
    --m1[j];
    cplx val = a(j) / std::sqrt(double(n[j])) * C[m1];
    if (n[j] >= 2) {
      Occ m2 = n;
      m2[j] -= 2;
      val += M(j, j) * std::sqrt((n[j] - 1.0) / n[j]) * C[m2];
    }
    for (int l = 0; l < modes; ++l) {
      if (l == j || n[l] == 0) continue;
      Occ m2 = m1;
      --m2[l];
      val += M(j, l) * std::sqrt(double(n[l]) / n[j]) * C[m2];
    }
    C[n] = val;
  }
  return C;
}

std::map<Occ, cplx> series_coeffs(const VecC& a, const MatC& M,
                                  const TruncationSpec& t) {
  FockState sum = FockState::vacuum(t);
  FockState term = sum;
  // each application raises total occupation by at least one, so the series
  // terminates exactly within the truncation
  for (int m = 1; m <= t.nmax + 1; ++m) {
    term = apply_raise_form(a, M, term);
    term *= cplx(1.0 / m);
    if (term.amplitudes().empty()) break;
    sum += term;
  }
  return sum.amplitudes();
}

// sum over partitions of the mode word into singletons (weight a) and pairs
// (weight M); the occupation coefficient is this sum over sqrt(prod n_j!)
cplx matchings_sum(const std::vector<int>& w, const VecC& a, const MatC& M) {
  const int l = static_cast<int>(w.size());
  if (l == 0) return 1.0;
  std::vector<char> used(l, 0);
  std::function<cplx(int)> rec = [&](int i) -> cplx {
    while (i < l && used[i]) ++i;
    if (i == l) return cplx(1.0);
    used[i] = 1;
    cplx total = a(w[i]) * rec(i + 1);
    for (int j = i + 1; j < l; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      total += M(w[i], w[j]) * rec(i + 1);
      used[j] = 0;
    }
    used[i] = 0;
    return total;
  };
  return rec(0);
}

}  // namespace

VecC gaussian_shift(const GaussianData& g) {
  return (g.phi - g.M * g.phi.conjugate()) / std::sqrt(g.eps);
}

cplx gaussian_log_prefactor(const GaussianData& g) {
  cplx quad = (g.phi.conjugate().transpose() * g.M * g.phi.conjugate())(0);
  return g.log_scale - g.phi.squaredNorm() / g.eps + quad / (2.0 * g.eps);
}

FockState gaussian_from_exponent(const VecC& a, const MatC& M, cplx log_c,
                                 const TruncationSpec& t, GaussianMode mode) {
  t.check();
  if (a.size() != t.modes)
    throw validation_error("gaussian_from_exponent: shift dimension mismatch");
  check_gaussian_matrix(M, t.modes);
  if (log_c.real() > 700.0)
    throw validation_error("gaussian_from_exponent: prefactor overflow");
  const cplx pref = std::exp(log_c);

  FockState out(t);
  if (mode == GaussianMode::kOracle) {
    for (const Occ& n : enumerate_basis(t)) {
      std::vector<int> w;
      double lg = 0.0;
      for (int j = 0; j < t.modes; ++j) {
        w.insert(w.end(), n[j], j);
        lg += std::lgamma(n[j] + 1.0);
      }
      out.accumulate(n, pref * matchings_sum(w, a, M) * std::exp(-0.5 * lg));
    }
    out.prune();
    return out;
  }

  // build two sectors past the cap so the lost ledger carries a tail estimate
  TruncationSpec ext{t.modes, t.nmax + 2};
  std::map<Occ, cplx> C = (mode == GaussianMode::kRecursion)
                              ? recursion_coeffs(a, M, ext)
                              : series_coeffs(a, M, ext);
  for (const auto& [n, c] : C) out.accumulate(n, pref * c);
  out.prune();
  return out;
}

FockState build_gaussian(const GaussianData& g, const TruncationSpec& t,
                         GaussianMode mode) {
  if (g.eps <= 0.0) throw validation_error("build_gaussian: eps must be positive");
  if (g.phi.size() != t.modes)
    throw validation_error("build_gaussian: phi dimension mismatch");
  check_gaussian_matrix(g.M, t.modes);
  if (op_norm(g.M) >= 1.0)
    throw validation_error("build_gaussian: transverse matrix must contract");
  return gaussian_from_exponent(gaussian_shift(g), g.M, gaussian_log_prefactor(g),
                                t, mode);
}

FockState apply_linear(const LinearLadder& op, const FockState& s) {
  const int modes = s.trunc().modes;
  if (op.create.size() != modes || op.destroy.size() != modes)
    throw validation_error("apply_linear: coefficient dimension mismatch");
  FockState out(s.trunc());
  if (op.scalar != cplx(0.0)) out.axpy(op.scalar, s);
  for (int m = 0; m < modes; ++m) {
    if (op.create(m) != cplx(0.0)) out.axpy(op.create(m), apply_create(s, m));
    if (op.destroy(m) != cplx(0.0)) out.axpy(op.destroy(m), apply_destroy(s, m));
  }
  return out;
}

LinearLadder frame_ladder(const MatC& F, const MatC& G, int alpha,
                          GermLadderKind kind) {
  if (alpha < 0 || alpha >= G.cols())
    throw validation_error("frame_ladder: column out of range");
  LinearLadder op;
  if (kind == GermLadderKind::kRaise) {
    op.create = G.col(alpha).conjugate();
    op.destroy = -F.col(alpha).conjugate();
  } else {
    op.create = -F.col(alpha);
    op.destroy = G.col(alpha);
  }
  return op;
}

LinearLadder germ_ladder(const GermFrame& g, const IsotropicManifold& m,
                         const std::vector<double>& tau, double eps, int alpha,
                         GermLadderKind kind) {
  if (eps <= 0.0) throw validation_error("germ_ladder: eps must be positive");
  LinearLadder op = frame_ladder(g.F_at(tau), g.G_at(tau), alpha, kind);
  VecC phi = m.phi_at(tau);
  double rt = std::sqrt(eps);
  op.scalar = -((op.create.transpose() * phi.conjugate())(0) +
                (op.destroy.transpose() * phi)(0)) /
              rt;
  return op;
}

CreationPoly CreationPoly::one(int modes) {
  CreationPoly p;
  p.modes = modes;
  p.terms[Occ(modes, 0)] = 1.0;
  return p;
}

CreationPoly& CreationPoly::operator*=(cplx s) {
  for (auto& [n, c] : terms) c *= s;
  return *this;
}

int CreationPoly::degree() const {
  int d = 0;
  for (const auto& [n, c] : terms)
    if (c != cplx(0.0)) d = std::max(d, occ_total(n));
  return d;
}

FockState apply_creation_poly(const CreationPoly& p, const VecC& shift,
                              const FockState& s) {
  if (p.modes != s.trunc().modes || shift.size() != p.modes)
    throw validation_error("apply_creation_poly: dimension mismatch");
  FockState out(s.trunc());
  for (const auto& [nu, coef] : p.terms) {
    if (coef == cplx(0.0)) continue;
    FockState tmp = s;
    for (int m = 0; m < p.modes; ++m)
      for (int r = 0; r < nu[m]; ++r) {
        FockState nxt = apply_create(tmp, m);
        if (shift(m) != cplx(0.0)) nxt.axpy(-shift(m), tmp);
        tmp = std::move(nxt);
      }
    out.axpy(coef, tmp);
  }
  return out;
}

CreationPoly ladder_on_poly(const CreationPoly& p, const VecC& v, const VecC& w) {
  if (v.size() != p.modes || w.size() != p.modes)
    throw validation_error("ladder_on_poly: dimension mismatch");
  CreationPoly out;
  out.modes = p.modes;
  for (const auto& [nu, c] : p.terms) {
    if (c == cplx(0.0)) continue;
    for (int m = 0; m < p.modes; ++m) {
      if (v(m) != cplx(0.0)) {
        Occ up = nu;
        ++up[m];
        out.terms[up] += v(m) * c;
      }
      if (w(m) != cplx(0.0) && nu[m] > 0) {
        Occ dn = nu;
        --dn[m];
        out.terms[dn] += w(m) * double(nu[m]) * c;
      }
    }
  }
  return out;
}

FockState displace(const VecC& u, const FockState& s) {
  const int modes = s.trunc().modes;
  if (u.size() != modes) throw validation_error("displace: dimension mismatch");
  const int nmax = s.trunc().nmax;

  // e^{-conj u . psi-} s, exact terminating series
  FockState cur = s;
  FockState acc = s;
  for (int m = 1; m <= nmax + 1; ++m) {
    FockState nxt(s.trunc());
    for (int j = 0; j < modes; ++j)
      if (u(j) != cplx(0.0)) nxt.axpy(-std::conj(u(j)), apply_destroy(cur, j));
    nxt *= cplx(1.0 / m);
    cur = std::move(nxt);
    if (cur.amplitudes().empty()) break;
    acc += cur;
  }

  // e^{u . psi+} acc, terminates at the cap
  FockState cur2 = acc;
  FockState out = acc;
  for (int m = 1; m <= nmax + 1; ++m) {
    FockState nxt(s.trunc());
    for (int j = 0; j < modes; ++j)
      if (u(j) != cplx(0.0)) nxt.axpy(u(j), apply_create(cur2, j));
    nxt *= cplx(1.0 / m);
    cur2 = std::move(nxt);
    if (cur2.amplitudes().empty() && cur2.lost2() == 0.0) break;
    out += cur2;
  }
  out *= std::exp(cplx(-0.5 * u.squaredNorm()));
  out.prune();
  return out;
}

FockState displace_expm(const VecC& u, const FockState& s) {
  const int modes = s.trunc().modes;
  if (u.size() != modes)
    throw validation_error("displace_expm: dimension mismatch");
  double bound = 2.0 * u.norm() * std::sqrt(s.trunc().nmax + 1.0);
  int sq = 0;
  while (bound > 0.5 && sq < 31) {
    bound *= 0.5;
    ++sq;
  }
  if (bound > 0.5) throw validation_error("displace_expm: displacement too large");
  double scale = std::ldexp(1.0, -sq);
  LinearLadder gen{u * scale, -u.conjugate() * scale, 0.0};
  FockState v = s;
  const long reps = 1L << sq;
  for (long r = 0; r < reps; ++r) {
    FockState term = v;
    FockState sum = v;
    for (int m = 1; m <= 60; ++m) {
      term = apply_linear(gen, term);
      term *= cplx(1.0 / m);
      sum += term;
      if (term.norm() < 1e-16 * std::max(1.0, sum.norm())) break;
    }
    v = std::move(sum);
  }
  return v;
}

cplx origin_constant(const VecC& phi0) {
  cplx pp = phi0.squaredNorm();
  cplx cc = (phi0.conjugate().transpose() * phi0.conjugate())(0);
  cplx aa = (phi0.transpose() * phi0)(0);
  return 0.5 * pp + 0.25 * (cc - aa);
}

cplx overlap_lhs(const OverlapSymbol& y, const IsotropicManifold& m, double eps,
                 const TruncationSpec& t, int tau_pts) {
  if (eps <= 0.0) throw validation_error("overlap_lhs: eps must be positive");
  if (m.modes != t.modes) throw validation_error("overlap_lhs: mode mismatch");
  TauGrid grid = make_tau_grid(m, tau_pts);
  cplx g0 = origin_constant(m.phi_at(grid.nodes[0]));
  double w = grid.cell / std::pow(eps, m.k / 4.0);
  FockState acc1(t);
  FockState acc2(t);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const auto& tau = grid.nodes[i];
    VecC phi = m.phi_at(tau);
    GaussianData gd{eps, phi, y.D(tau), (g0 + grid.phase[i]) / eps};
    FockState base = build_gaussian(gd, t, GaussianMode::kRecursion);
    VecC shift = phi.conjugate() / std::sqrt(eps);
    acc1.axpy(w, apply_creation_poly(y.P1(tau), shift, base));
    acc2.axpy(w, apply_creation_poly(y.P2(tau), shift, base));
  }
  return inner_product(acc1, acc2);
}

OverlapLimit overlap_rhs(const OverlapSymbol& y, const IsotropicManifold& m,
                         const TruncationSpec& t, int tau_pts, int xi_pts) {
  if (m.modes != t.modes) throw validation_error("overlap_rhs: mode mismatch");
  if (m.k > 0 && xi_pts < 2)
    throw validation_error("overlap_rhs: need at least 2 xi points");
  TauGrid grid = make_tau_grid(m, tau_pts);
  OverlapLimit out;
  VecC zero_shift = VecC::Zero(t.modes);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const auto& tau = grid.nodes[i];
    MatC D = y.D(tau);
    FockState base =
        gaussian_from_exponent(VecC::Zero(t.modes), D, 0.0, t, GaussianMode::kRecursion);
    FockState y1 = apply_creation_poly(y.P1(tau), zero_shift, base);
    FockState y2 = apply_creation_poly(y.P2(tau), zero_shift, base);
    if (m.k == 0) {
      out.value += inner_product(y1, y2);
      continue;
    }
    MatC T = m.tangent(tau);
    MatR gram = (T.adjoint() * T).real();
    double lam = Eigen::SelfAdjointEigenSolver<MatR>(gram).eigenvalues()(0);
    double dn = op_norm(D);
    if (dn >= 1.0 || lam <= 0.0)
      throw validation_error("overlap_rhs: degenerate symbol");
    // half-width where exp(-(1-||D||) lambda_min xi^2 / 2) drops below ~1e-14
    double half = std::sqrt(64.0 / ((1.0 - dn) * lam));
    out.xi_box = std::max(out.xi_box, half);
    double h = 2.0 * half / xi_pts;
    long total = 1;
    for (int b = 0; b < m.k; ++b) total *= xi_pts;
    std::vector<int> idx(m.k, 0);
    cplx node_acc = 0.0;
    for (long q = 0; q < total; ++q) {
      VecR xi(m.k);
      bool boundary = false;
      for (int b = 0; b < m.k; ++b) {
        xi(b) = -half + (idx[b] + 0.5) * h;
        if (idx[b] == 0 || idx[b] == xi_pts - 1) boundary = true;
      }
      VecC u = T * xi.cast<cplx>();
      cplx val = inner_product(y1, displace(u, y2));
      node_acc += val;
      if (boundary)
        out.xi_tail = std::max(out.xi_tail, std::abs(val) * std::pow(2.0 * half, m.k));
      for (int b = m.k - 1; b >= 0; --b) {
        if (++idx[b] < xi_pts) break;
        idx[b] = 0;
      }
    }
    out.value += grid.cell * std::pow(h, m.k) * node_acc;
  }
  return out;
}

}  // namespace germflow
