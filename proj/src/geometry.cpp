#include "germflow/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace germflow {

static constexpr double kFdStep = 1e-6;

VecC IsotropicManifold::phi_at(const std::vector<double>& tau) const {
  if (static_cast<int>(tau.size()) != k)
    throw validation_error("manifold chart: coordinate count mismatch");
  return phi(tau);
}

MatC IsotropicManifold::tangent(const std::vector<double>& tau) const {
  MatC T(modes, k);
  if (!dphi.empty()) {
    for (int a = 0; a < k; ++a) T.col(a) = dphi[a](tau);
    return T;
  }
  for (int a = 0; a < k; ++a) {
    std::vector<double> tp = tau, tm = tau;
    tp[a] += kFdStep;
    tm[a] -= kFdStep;
    T.col(a) = (phi(tp) - phi(tm)) / (2.0 * kFdStep);
  }
  return T;
}

// ===== manifold builders ====================================================

IsotropicManifold point_manifold(const VecC& phi0) {
  IsotropicManifold m;
  m.modes = static_cast<int>(phi0.size());
  m.k = 0;
  VecC p0 = phi0;
  m.phi = [p0](const std::vector<double>&) { return p0; };
  return m;
}

IsotropicManifold circle_manifold(const VecC& phi_tilde) {
  IsotropicManifold m;
  m.modes = static_cast<int>(phi_tilde.size());
  m.k = 1;
  m.period = {2.0 * kPi};
  VecC pt = phi_tilde;
  m.phi = [pt](const std::vector<double>& tau) -> VecC {
    return pt * std::exp(kI * tau[0]);
  };
  m.dphi = {[pt](const std::vector<double>& tau) -> VecC {
    return kI * pt * std::exp(kI * tau[0]);
  }};
  return m;
}

IsotropicManifold torus2_manifold(const VecC& phi_tilde,
                                  const std::vector<int>& axis_of_mode) {
  const int D = static_cast<int>(phi_tilde.size());
  if (static_cast<int>(axis_of_mode.size()) != D)
    throw validation_error("torus2: axis map has wrong length");
  for (int v : axis_of_mode)
    if (v != 0 && v != 1) throw validation_error("torus2: axis map entries must be 0 or 1");

  IsotropicManifold m;
  m.modes = D;
  m.k = 2;
  m.period = {2.0 * kPi, 2.0 * kPi};
  VecC pt = phi_tilde;
  std::vector<int> ax = axis_of_mode;
  m.phi = [pt, ax, D](const std::vector<double>& tau) -> VecC {
    VecC out(D);
    for (int j = 0; j < D; ++j) out(j) = pt(j) * std::exp(kI * tau[ax[j]]);
    return out;
  };
  for (int a = 0; a < 2; ++a) {
    m.dphi.push_back([pt, ax, D, a](const std::vector<double>& tau) -> VecC {
      VecC out = VecC::Zero(D);
      for (int j = 0; j < D; ++j)
        if (ax[j] == a) out(j) = kI * pt(j) * std::exp(kI * tau[a]);
      return out;
    });
  }
  return m;
}

// ===== sampling helpers =====================================================

static std::vector<std::vector<double>> sample_grid(const IsotropicManifold& m,
                                                    int per_axis) {
  std::vector<std::vector<double>> out;
  if (m.k == 0) {
    out.push_back({});
    return out;
  }
  std::vector<int> idx(m.k, 0);
  while (true) {
    std::vector<double> tau(m.k);
    for (int a = 0; a < m.k; ++a)
      tau[a] = m.period[a] * static_cast<double>(idx[a]) / per_axis;
    out.push_back(tau);
    int p = m.k - 1;
    while (p >= 0 && idx[p] == per_axis - 1) {
      idx[p] = 0;
      --p;
    }
    if (p < 0) break;
    ++idx[p];
  }
  return out;
}

bool ManifoldReport::ok(const Tolerances& tol) const {
  const double t = analytic ? tol.analytic : tol.fd;
  return isotropy_defect <= t && gram_imag <= t && gram_min_eig > 0.0;
}

ManifoldReport validate_manifold(const IsotropicManifold& m, int samples_per_axis) {
  ManifoldReport rep;
  rep.analytic = m.has_analytic_tangent();
  if (m.k == 0) {
    rep.gram_min_eig = 1.0;  // empty Gram, trivially fine
    return rep;
  }
  rep.gram_min_eig = std::numeric_limits<double>::infinity();
  for (const auto& tau : sample_grid(m, samples_per_axis)) {
    MatC T = m.tangent(tau);
    // isotropy bracket: sum_j (dP_a dQ_b - dP_b dQ_a); in chart variables this
    // is -2 Im(T+T)_{ab}, so it doubles as the Gram reality check
    MatC gram = T.adjoint() * T;
    for (int a = 0; a < m.k; ++a)
      for (int b = 0; b < m.k; ++b)
        rep.gram_imag = std::max(rep.gram_imag, std::abs(gram(a, b).imag()));
    // explicit bracket through P,Q derivatives
    MatC dQ = std::sqrt(2.0) * T.real().cast<cplx>();
    MatC dP = std::sqrt(2.0) * T.imag().cast<cplx>();
    for (int a = 0; a < m.k; ++a)
      for (int b = 0; b < m.k; ++b) {
        cplx br = (dP.col(a).transpose() * dQ.col(b) - dP.col(b).transpose() * dQ.col(a))(0);
        rep.isotropy_defect = std::max(rep.isotropy_defect, std::abs(br));
      }
    Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (gram + gram.adjoint()));
    rep.gram_min_eig = std::min(rep.gram_min_eig, es.eigenvalues()(0));
  }
  return rep;
}

// ===== germ frames ==========================================================

MatR germ_L(int modes, int k) {
  MatR L = MatR::Zero(modes, modes);
  for (int i = k; i < modes; ++i) L(i, i) = 1.0;
  return L;
}

GermFrame point_frame(const MatC& F, const MatC& G) {
  GermFrame g;
  g.modes = static_cast<int>(F.rows());
  g.k = 0;
  MatC Fc = F, Gc = G;
  g.F = [Fc](const std::vector<double>&) { return Fc; };
  g.G = [Gc](const std::vector<double>&) { return Gc; };
  return g;
}

GermFrame vacuum_point_frame(int modes) {
  return point_frame(MatC::Zero(modes, modes), MatC::Identity(modes, modes));
}

GermFrame squeezed_point_frame(const MatC& Msym) {
  const int D = static_cast<int>(Msym.rows());
  if (op_norm(Msym) >= 1.0)
    throw validation_error("squeezed frame: ratio matrix must be a strict contraction");
  if ((Msym - Msym.transpose()).norm() > 1e-12 * std::max(1.0, Msym.norm()))
    throw validation_error("squeezed frame: ratio matrix must be symmetric");
  // G = (E - M+M)^{-1/2} through the Hermitian square root
  Eigen::SelfAdjointEigenSolver<MatC> es(MatC::Identity(D, D) - Msym.adjoint() * Msym);
  MatC G = es.operatorInverseSqrt();
  return point_frame(Msym * G, G);
}

GermFrame circle_frame(const VecC& phi_tilde, const MatC& Ft, const MatC& Gt) {
  const int D = static_cast<int>(phi_tilde.size());
  if ((Ft.col(0) - kI * phi_tilde).norm() > 1e-10 * std::max(1.0, phi_tilde.norm()) ||
      (Gt.col(0) + kI * phi_tilde.conjugate()).norm() > 1e-10 * std::max(1.0, phi_tilde.norm()))
    throw validation_error("circle frame: first columns must be the chart tangents");
  GermFrame g;
  g.modes = D;
  g.k = 1;
  MatC F0 = Ft, G0 = Gt;
  g.F = [F0](const std::vector<double>& tau) -> MatC {
    return F0 * std::exp(kI * tau[0]);
  };
  g.G = [G0](const std::vector<double>& tau) -> MatC {
    return G0 * std::exp(-kI * tau[0]);
  };
  g.loop_gamma = {std::vector<double>(D, 0.0)};
  return g;
}

// Hermitian-orthonormal basis of the orthocomplement of v (columns 1..D-1 of
// a unitary completing v/|v|)
static MatC orthocomplement(const VecC& v) {
  const int D = static_cast<int>(v.size());
  Eigen::HouseholderQR<MatC> qr(v);
  MatC Q = qr.householderQ() * MatC::Identity(D, D);
  // first column of Q spans v up to phase; the rest span the complement
  return Q.rightCols(D - 1);
}

GermFrame circle_base_frame(const VecC& phi_tilde) {
  const int D = static_cast<int>(phi_tilde.size());
  if (phi_tilde.norm() == 0.0)
    throw validation_error("circle frame: phi_tilde must be nonzero");
  MatC Ft = MatC::Zero(D, D), Gt = MatC::Zero(D, D);
  Ft.col(0) = kI * phi_tilde;
  Gt.col(0) = -kI * phi_tilde.conjugate();
  if (D > 1) {
    // transverse block: Hermitian ONB of the bilinear orthocomplement of
    // phi_tilde, i.e. the Hermitian orthocomplement of conj(phi_tilde)
    Gt.rightCols(D - 1) = orthocomplement(phi_tilde.conjugate());
  }
  return circle_frame(phi_tilde, Ft, Gt);
}

GermFrame squeezed_circle_frame(const VecC& phi_tilde, double squeeze) {
  const int D = static_cast<int>(phi_tilde.size());
  if (phi_tilde.norm() == 0.0)
    throw validation_error("circle frame: phi_tilde must be nonzero");
  MatC Ft = MatC::Zero(D, D), Gt = MatC::Zero(D, D);
  Ft.col(0) = kI * phi_tilde;
  Gt.col(0) = -kI * phi_tilde.conjugate();
  if (D > 1) {
    MatC U = orthocomplement(phi_tilde.conjugate());
    Gt.rightCols(D - 1) = std::cosh(squeeze) * U;
    Ft.rightCols(D - 1) = std::sinh(squeeze) * U.conjugate();
  }
  return circle_frame(phi_tilde, Ft, Gt);
}

GermFrame stationary_circle_frame(const VecC& phi_tilde, double Omega,
                                  const VecR& beta, const MatC& Ft, const MatC& Gt) {
  const int D = static_cast<int>(phi_tilde.size());
  if (Omega == 0.0) throw validation_error("stationary circle frame: Omega must be nonzero");
  if (beta.size() != D) throw validation_error("stationary circle frame: beta size mismatch");
  if ((Ft.col(0) - kI * phi_tilde).norm() > 1e-10 * std::max(1.0, phi_tilde.norm()) ||
      (Gt.col(0) + kI * phi_tilde.conjugate()).norm() > 1e-10 * std::max(1.0, phi_tilde.norm()))
    throw validation_error("stationary circle frame: first columns must be the chart tangents");
  GermFrame g;
  g.modes = D;
  g.k = 1;
  MatC F0 = Ft, G0 = Gt;
  VecR b = beta;
  g.F = [F0, b, Omega, D](const std::vector<double>& tau) -> MatC {
    MatC out(D, D);
    for (int l = 0; l < D; ++l)
      out.col(l) = F0.col(l) * std::exp(-kI * (b(l) / Omega - 1.0) * tau[0]);
    return out;
  };
  g.G = [G0, b, Omega, D](const std::vector<double>& tau) -> MatC {
    MatC out(D, D);
    for (int l = 0; l < D; ++l)
      out.col(l) = G0.col(l) * std::exp(-kI * (b(l) / Omega + 1.0) * tau[0]);
    return out;
  };
  // around the loop column l returns times exp(-2 pi i beta_l / Omega)
  std::vector<double> gamma(D);
  for (int l = 0; l < D; ++l) gamma[l] = 2.0 * kPi * b(l) / Omega;
  g.loop_gamma = {gamma};
  return g;
}

GermFrame torus2_base_frame(const VecC& phi_tilde, const std::vector<int>& axis_of_mode) {
  const int D = static_cast<int>(phi_tilde.size());
  if (static_cast<int>(axis_of_mode.size()) != D)
    throw validation_error("torus2 frame: axis map has wrong length");
  std::vector<std::vector<int>> group(2);
  for (int j = 0; j < D; ++j) group[axis_of_mode[j]].push_back(j);
  if (group[0].empty() || group[1].empty())
    throw validation_error("torus2 frame: each axis needs at least one mode");

  // per group: tangent column + Hermitian ONB of the in-group bilinear
  // orthocomplement of phi_tilde
  std::vector<MatC> trans(2);
  for (int gidx = 0; gidx < 2; ++gidx) {
    const auto& modes_g = group[gidx];
    const int n = static_cast<int>(modes_g.size());
    VecC v(n);
    for (int p = 0; p < n; ++p) v(p) = std::conj(phi_tilde(modes_g[p]));
    if (v.norm() == 0.0)
      throw validation_error("torus2 frame: phi_tilde must be nonzero on each axis");
    trans[gidx] = (n > 1) ? orthocomplement(v) : MatC(n, 0);
  }

  GermFrame g;
  g.modes = D;
  g.k = 2;
  VecC pt = phi_tilde;
  std::vector<int> ax = axis_of_mode;
  std::vector<std::vector<int>> grp = group;
  std::vector<MatC> tr = trans;

  auto build = [pt, ax, grp, tr, D](const std::vector<double>& tau, bool wantF) -> MatC {
    MatC out = MatC::Zero(D, D);
    // tangent columns a = 0, 1
    for (int a = 0; a < 2; ++a) {
      cplx ph = std::exp(kI * tau[a]);
      for (int j : grp[a]) {
        if (wantF)
          out(j, a) = kI * pt(j) * ph;
        else
          out(j, a) = -kI * std::conj(pt(j)) * std::conj(ph);
      }
    }
    // transverse columns: group 0 block first, then group 1
    int col = 2;
    for (int gidx = 0; gidx < 2; ++gidx) {
      cplx ph = std::exp(-kI * tau[gidx]);
      for (int c = 0; c < tr[gidx].cols(); ++c, ++col) {
        if (wantF) continue;  // F vanishes on transverse columns
        for (int p = 0; p < static_cast<int>(grp[gidx].size()); ++p)
          out(grp[gidx][p], col) = tr[gidx](p, c) * ph;
      }
    }
    return out;
  };
  g.F = [build](const std::vector<double>& tau) { return build(tau, true); };
  g.G = [build](const std::vector<double>& tau) { return build(tau, false); };
  g.loop_gamma = {std::vector<double>(D, 0.0), std::vector<double>(D, 0.0)};
  return g;
}

// ===== germ validation ======================================================

bool GermReport::ok(const Tolerances& tol) const {
  const double t = analytic ? tol.analytic : tol.fd;
  return tangent_defect <= t && symmetry_defect <= t && normalization_defect <= t &&
         gmin > 0.0 && monodromy_unitarity <= t && monodromy_consistency <= t;
}

GermReport validate_germ(const IsotropicManifold& m, const GermFrame& g,
                         int samples_per_axis) {
  if (g.modes != m.modes || g.k != m.k)
    throw validation_error("validate_germ: frame does not match the manifold");
  GermReport rep;
  rep.analytic = m.has_analytic_tangent();
  rep.gmin = std::numeric_limits<double>::infinity();
  const MatR L = germ_L(m.modes, m.k);

  for (const auto& tau : sample_grid(m, std::max(1, samples_per_axis))) {
    MatC F = g.F(tau), G = g.G(tau);
    if (m.k > 0) {
      MatC T = m.tangent(tau);
      rep.tangent_defect = std::max(rep.tangent_defect,
                                    (F.leftCols(m.k) - T).cwiseAbs().maxCoeff());
      rep.tangent_defect = std::max(rep.tangent_defect,
                                    (G.leftCols(m.k) - T.conjugate()).cwiseAbs().maxCoeff());
    }
    rep.symmetry_defect =
        std::max(rep.symmetry_defect, (F.transpose() * G - G.transpose() * F).norm());
    rep.normalization_defect = std::max(
        rep.normalization_defect,
        (G.adjoint() * G - F.adjoint() * F - L.cast<cplx>()).norm());
    rep.gmin = std::min(rep.gmin, min_singular_value(G));
  }

  // monodromy around each fundamental loop, lifted path from tau = 0
  for (int axis = 0; axis < m.k; ++axis) {
    std::vector<double> t0(m.k, 0.0), t1(m.k, 0.0);
    t1[axis] = m.period[axis];
    MatC G0 = g.G(t0), G1 = g.G(t1), F0 = g.F(t0), F1 = g.F(t1);
    MatC A = G0.partialPivLu().solve(G1);
    rep.monodromy_unitarity = std::max(
        rep.monodromy_unitarity,
        (A.adjoint() * A - MatC::Identity(m.modes, m.modes)).norm());
    rep.monodromy_consistency =
        std::max(rep.monodromy_consistency, (F1 - F0 * A).norm());
  }
  return rep;
}

// ===== transverse Gaussian matrix ==========================================

MMatrixResult build_M(const IsotropicManifold& m, const GermFrame& g,
                      const std::vector<double>& tau) {
  MatC F = g.F(tau), G = g.G(tau);
  MatC M = F * G.partialPivLu().inverse();
  if (m.k > 0) {
    MatC T = m.tangent(tau);
    MatC gram = T.adjoint() * T;  // real on isotropic charts
    MatR W = gram.real().inverse();
    M -= T * W.cast<cplx>() * T.transpose();
  }
  MMatrixResult res;
  res.asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  res.M = 0.5 * (M + M.transpose());
  return res;
}

double measure_density(const IsotropicManifold& m, const std::vector<double>& tau) {
  if (m.k == 0) return 1.0;
  MatC T = m.tangent(tau);
  MatC gram = T.adjoint() * T;
  return std::sqrt(std::abs(gram.real().determinant()));
}

// ===== rank-k determinant identity =========================================

cplx rank_update_det(const std::vector<VecC>& y, const std::vector<VecC>& z,
                     double tol) {
  if (y.size() != z.size()) throw validation_error("rank_update_det: size mismatch");
  const int k = static_cast<int>(y.size());
  if (k == 0) return cplx(1.0);
  const int D = static_cast<int>(y[0].size());
  MatC K(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) K(a, b) = (y[a].transpose() * z[b])(0);
  cplx small = (MatC::Identity(k, k) - K).determinant();

  MatC R = MatC::Identity(D, D);
  for (int c = 0; c < k; ++c) R -= y[c] * z[c].transpose();
  cplx dense = R.determinant();

  if (std::abs(small - dense) > tol * std::max(1.0, std::abs(dense)))
    throw validation_error("rank_update_det: low-rank and dense determinants disagree");
  return small;
}

// ===== gap bound ============================================================

double gap_bound(const IsotropicManifold& m, const GermFrame& g,
                 const std::vector<double>& tau) {
  MatC G = g.G(tau);
  MatC M = build_M(m, g, tau).M;
  const int D = g.modes;
  MatC EmMM = MatC::Identity(D, D) - M.adjoint() * M;
  MatC Y = G.adjoint() * EmMM * G - germ_L(D, g.k).cast<cplx>();
  MatC LY = germ_L(D, g.k).cast<cplx>() + 0.5 * (Y + Y.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(LY);
  return es.eigenvalues()(0);
}

// ===== quantization =========================================================

namespace {

// Simpson segment of int phi . d(conj phi) between two chart points that
// differ only along one axis; the tangent supplies d(conj phi)/dtau
cplx path_segment(const IsotropicManifold& m, const std::vector<double>& ta,
                  const std::vector<double>& tb, int axis) {
  auto f = [&](const std::vector<double>& tt) -> cplx {
    VecC p = m.phi_at(tt);
    VecC d = m.tangent(tt).col(axis);
    return (p.transpose() * d.conjugate())(0);
  };
  std::vector<double> mid = ta;
  mid[axis] = 0.5 * (ta[axis] + tb[axis]);
  double h = tb[axis] - ta[axis];
  return h / 6.0 * (f(ta) + 4.0 * f(mid) + f(tb));
}

}  // namespace

double loop_action(const IsotropicManifold& m, double eps, int axis, int npts) {
  if (axis < 0 || axis >= m.k) throw validation_error("loop_action: axis out of range");
  if (eps <= 0.0) throw validation_error("loop_action: eps must be positive");
  // S = (i / 2 pi eps) \oint phi . d(conj phi), Simpson along the loop
  cplx acc = 0.0;
  std::vector<double> ta(m.k, 0.0), tb(m.k, 0.0);
  for (int j = 1; j <= npts; ++j) {
    ta[axis] = m.period[axis] * static_cast<double>(j - 1) / npts;
    tb[axis] = m.period[axis] * static_cast<double>(j) / npts;
    acc += path_segment(m, ta, tb, axis);
  }
  cplx S = kI * acc / (2.0 * kPi * eps);
  return S.real();
}

double quantization_defect(const IsotropicManifold& m, double eps, int axis,
                           const std::vector<double>& gamma,
                           const std::vector<int>& nu, int npts) {
  double offset = 0.0;
  if (!nu.empty()) {
    if (gamma.size() != nu.size())
      throw validation_error("quantization_defect: gamma/nu size mismatch");
    for (std::size_t i = 0; i < nu.size(); ++i) offset += gamma[i] * nu[i];
    offset /= 2.0 * kPi;
  }
  return dist_to_integer_lattice(loop_action(m, eps, axis, npts), offset);
}

TauGrid make_tau_grid(const IsotropicManifold& m, int pts_per_axis) {
  if (pts_per_axis < 2 && m.k > 0)
    throw validation_error("make_tau_grid: need at least 2 points per axis");
  TauGrid g;
  g.k = m.k;
  if (m.k == 0) {
    g.pts = {};
    g.nodes = {std::vector<double>{}};
    g.cell = 1.0;
    g.phase = {cplx(0.0)};
    return g;
  }
  g.pts.assign(m.k, pts_per_axis);
  g.cell = 1.0;
  std::vector<double> step(m.k);
  for (int a = 0; a < m.k; ++a) {
    step[a] = m.period[a] / pts_per_axis;
    g.cell *= step[a];
  }

  long total = 1;
  for (int a = 0; a < m.k; ++a) total *= pts_per_axis;
  g.nodes.resize(total);
  std::vector<int> idx(m.k, 0);
  for (long i = 0; i < total; ++i) {
    std::vector<double> tau(m.k);
    for (int a = 0; a < m.k; ++a) tau[a] = idx[a] * step[a];
    g.nodes[i] = tau;
    for (int a = m.k - 1; a >= 0; --a) {
      if (++idx[a] < pts_per_axis) break;
      idx[a] = 0;
    }
  }

  // stride of axis a in the row-major layout
  std::vector<long> stride(m.k, 1);
  for (int a = m.k - 2; a >= 0; --a) stride[a] = stride[a + 1] * pts_per_axis;

  // phase via the axis-ordered path: the last leg of the path to a node runs
  // along its last nonzero axis, so the predecessor is always already done
  g.phase.assign(total, cplx(0.0));
  for (long i = 1; i < total; ++i) {
    long rem = i;
    int last = -1;
    for (int a = 0; a < m.k; ++a) {
      long ia = rem / stride[a];
      rem %= stride[a];
      if (ia > 0) last = a;
    }
    long prev = i - stride[last];
    g.phase[i] = g.phase[prev] + path_segment(m, g.nodes[prev], g.nodes[i], last);
  }

  g.loop_total.assign(m.k, cplx(0.0));
  for (int a = 0; a < m.k; ++a) {
    cplx acc = 0.0;
    std::vector<double> ta(m.k, 0.0), tb(m.k, 0.0);
    for (int j = 1; j <= pts_per_axis; ++j) {
      ta[a] = (j - 1) * step[a];
      tb[a] = (j == pts_per_axis) ? m.period[a] : j * step[a];
      acc += path_segment(m, ta, tb, a);
    }
    g.loop_total[a] = acc;
  }
  return g;
}

}  // namespace germflow
