#include "germflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace germflow {

double residual_norm(const HamiltonianCoeffs& h, double eps,
                     const std::function<FockState(double)>& psi_at, double t,
                     double dt, double* norm_out) {
  if (eps <= 0.0) throw validation_error("residual: eps must be positive");
  if (dt <= 0.0) throw validation_error("residual: dt must be positive");
  FockState psi = psi_at(t);
  double n2 = psi.norm2();
  if (n2 == 0.0) throw validation_error("residual: state vanishes");
  if (norm_out) *norm_out = std::sqrt(n2);
  FockState hpsi = apply_hamiltonian(h, psi, eps);
  double E = std::real(inner_product(psi, hpsi)) / (eps * n2);

  FockState plus = psi_at(t + dt);
  FockState minus = psi_at(t - dt);
  plus *= std::exp(kI * E * dt);
  minus *= std::exp(-kI * E * dt);

  FockState res(psi.trunc());
  res.axpy(kI / (2.0 * dt), plus);
  res.axpy(-kI / (2.0 * dt), minus);
  res.axpy(-1.0 / eps, hpsi);
  res.axpy(E, psi);
  return res.norm() / std::sqrt(n2);
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                        double* residual) {
  if (x.size() != y.size() || x.size() < 2)
    throw validation_error("slope fit: need at least two points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0)
      throw validation_error("slope fit: needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw validation_error("slope fit: degenerate abscissae");
  double slope = (n * sxy - sx * sy) / denom;
  double inter = (sy - slope * sx) / n;
  if (residual) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(ly[i] - slope * lx[i] - inter));
    *residual = worst;
  }
  return slope;
}

ResidualReport epsilon_scan(const HamiltonianCoeffs& h,
                            const std::function<FockState(double, double)>& psi,
                            const ScanConfig& cfg) {
  if (cfg.eps.empty() || cfg.times.empty())
    throw validation_error("epsilon scan: empty eps or time list");
  ResidualReport rep;
  rep.eps = cfg.eps;
  rep.times = cfg.times;
  rep.floor = cfg.floor;
  double nmin = 0.0, nmax = 0.0;
  for (double e : cfg.eps) {
    double dt = residual_dt(e);
    std::vector<double> rrow, nrow;
    double worst = 0.0;
    for (double t : cfg.times) {
      double nrm = 0.0;
      double r = residual_norm(
          h, e, [&](double s) { return psi(e, s); }, t, dt, &nrm);
      rrow.push_back(r);
      nrow.push_back(nrm);
      worst = std::max(worst, r);
      if (nmin == 0.0 || nrm < nmin) nmin = nrm;
      nmax = std::max(nmax, nrm);
    }
    rep.r.push_back(std::move(rrow));
    rep.norm.push_back(std::move(nrow));
    rep.r_max.push_back(worst);
  }
  rep.norm_ratio = nmin > 0.0 ? nmax / nmin : std::numeric_limits<double>::infinity();

  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    if (rep.r_max[i] > cfg.floor) {
      fx.push_back(rep.eps[i]);
      fy.push_back(rep.r_max[i]);
    }
  if (fx.size() >= 2) {
    rep.slope = fit_loglog_slope(fx, fy, &rep.fit_residual);
    rep.slope_fitted = true;
  }
  return rep;
}

StationaryModes stationary_modes(const HamiltonianCoeffs& h, const VecC& phi_t,
                                 double tol) {
  const int D = static_cast<int>(phi_t.size());
  if (h.modes != D) throw validation_error("stationary modes: mode mismatch");
  double rho = phi_t.squaredNorm();
  if (rho == 0.0) throw validation_error("stationary modes: phi must be nonzero");

  StationaryModes sm;
  sm.phi = phi_t;
  VecC grad = grad_conj(h, phi_t);
  sm.Omega = std::real((phi_t.adjoint() * grad)(0)) / rho;
  sm.phi_residual = (grad - sm.Omega * phi_t).norm();
  if (sm.phi_residual > tol * std::max(1.0, grad.norm()))
    throw validation_error("stationary modes: phi is not a winding direction, defect " +
                           std::to_string(sm.phi_residual));

  MatC pc = hess_pc(h, phi_t), pp = hess_pp(h, phi_t);
  MatC cc = hess_cc(h, phi_t), cp = hess_cp(h, phi_t);
  MatC K(2 * D, 2 * D);
  K.topLeftCorner(D, D) = pc - sm.Omega * MatC::Identity(D, D);
  K.topRightCorner(D, D) = pp;
  K.bottomLeftCorner(D, D) = -cc;
  K.bottomRightCorner(D, D) = -(cp - sm.Omega * MatC::Identity(D, D));

  Eigen::ComplexEigenSolver<MatC> es(K);
  if (es.info() != Eigen::Success)
    throw validation_error("stationary modes: eigensolver failed");

  // b = 0 is defective: the chart tangent t1 pairs with a radius partner t2
  // (K t2 = t1) into a Jordan block, and dense eigensolvers return heavily
  // polluted vectors inside that plane.  True transverse modes are
  // orthogonal to both under the indefinite pairing g1+g2 - f1+f2, so the
  // pair is projected out of every candidate before the branch filters.
  auto jdot = [D](const VecC& a, const VecC& b) {
    return ((a.head(D).adjoint() * b.head(D)) - (a.tail(D).adjoint() * b.tail(D)))(0);
  };
  VecC t1(2 * D);
  t1 << -kI * phi_t.conjugate(), kI * phi_t;
  VecC t2 = VecC::Zero(2 * D);
  cplx t12 = 0.0;
  {
    Eigen::CompleteOrthogonalDecomposition<MatC> cod(K);
    VecC cand = cod.solve(t1);
    if ((K * cand - t1).norm() <= 1e-6 * t1.norm()) {
      t2 = cand;
      t12 = jdot(t1, t2);
    }
  }
  const bool deflate = std::abs(t12) > 1e-10 * phi_t.norm() * t2.norm();

  struct Mode {
    double beta;
    VecC g, f;
  };
  std::vector<Mode> keep;
  double eig_res = 0.0;
  for (int l = 0; l < 2 * D; ++l) {
    cplx b = es.eigenvalues()(l);
    VecC v = es.eigenvectors().col(l);
    if (deflate) {
      cplx beta_c = jdot(t1, v) / t12;
      cplx alpha_c = (jdot(t2, v) - beta_c * jdot(t2, t2)) / std::conj(t12);
      v -= alpha_c * t1 + beta_c * t2;
    }
    VecC g = v.head(D), f = v.tail(D);
    double nrm = std::real((g.adjoint() * g)(0) - (f.adjoint() * f)(0));
    if (std::abs(b.imag()) > 1e-8 || nrm <= 1e-8) continue;
    double s = 1.0 / std::sqrt(nrm);
    g *= s;
    f *= s;
    VecC kv(2 * D);
    kv << g, f;
    eig_res = std::max(eig_res, (K * kv - b * kv).norm());
    keep.push_back({b.real(), std::move(g), std::move(f)});
  }
  if (static_cast<int>(keep.size()) != D - 1)
    throw validation_error("stationary modes: expected " + std::to_string(D - 1) +
                           " positive-branch modes, found " +
                           std::to_string(keep.size()));
  std::sort(keep.begin(), keep.end(),
            [](const Mode& a, const Mode& b) { return a.beta < b.beta; });

  sm.beta = VecR::Zero(D);
  sm.Ft = MatC::Zero(D, D);
  sm.Gt = MatC::Zero(D, D);
  sm.Ft.col(0) = kI * phi_t;
  sm.Gt.col(0) = -kI * phi_t.conjugate();
  for (int l = 1; l < D; ++l) {
    sm.beta(l) = keep[l - 1].beta;
    sm.Gt.col(l) = keep[l - 1].g;
    sm.Ft.col(l) = keep[l - 1].f;
  }
  sm.eigen_residual = eig_res;
  return sm;
}

GermFrame stationary_frame(const StationaryModes& sm) {
  return stationary_circle_frame(sm.phi, sm.Omega, sm.beta, sm.Ft, sm.Gt);
}

double stationary_energy(const HamiltonianCoeffs& h, const VecC& phi_t,
                         const MatC& Ft, const MatC& Gt, double eps,
                         const VecR* beta, const std::vector<int>* nu) {
  if (eps <= 0.0) throw validation_error("stationary energy: eps must be positive");
  cplx H = symbol_value(h, phi_t);
  if (std::abs(H.imag()) > 1e-9 * std::max(1.0, std::abs(H)))
    throw validation_error("stationary energy: symbol is not real at phi");
  MatC R = Gt.transpose().partialPivLu().solve(Ft.transpose()).transpose();
  MatC pp = hess_pp(h, phi_t), cc = hess_cc(h, phi_t);
  cplx corr = 0.25 * ((pp.array() * R.array()).sum() +
                      (cc.array() * R.conjugate().array()).sum());
  if (std::abs(corr.imag()) > 1e-8 * std::max(1.0, std::abs(corr)))
    throw validation_error("stationary energy: correction term is not real");
  double E = H.real() / eps + corr.real();
  if (beta && nu) {
    if (static_cast<int>(nu->size()) != static_cast<int>(beta->size()) - 1)
      throw validation_error("stationary energy: nu must cover the transverse columns");
    for (int a = 0; a < static_cast<int>(nu->size()); ++a)
      E += (*beta)(1 + a) * (*nu)[a];
  }
  return E;
}

QuantizedCircle quantize_circle(const HamiltonianCoeffs& h, const VecC& direction,
                                double eps, int N, const std::vector<int>& nu,
                                bool with_beta_offset, int iters, double tol) {
  if (std::abs(direction.norm() - 1.0) > 1e-10)
    throw validation_error("quantize circle: direction must be a unit vector");
  if (N <= 0) throw validation_error("quantize circle: N must be positive");
  if (eps <= 0.0) throw validation_error("quantize circle: eps must be positive");
  const int D = static_cast<int>(direction.size());
  if (!nu.empty() && static_cast<int>(nu.size()) != D - 1)
    throw validation_error("quantize circle: nu must list the transverse columns");

  double rho = eps * N;
  QuantizedCircle out;
  if (!with_beta_offset || nu.empty()) {
    out.rho = rho;
    out.modes = stationary_modes(h, std::sqrt(rho) * direction);
    return out;
  }
  for (int it = 0; it < iters; ++it) {
    StationaryModes sm = stationary_modes(h, std::sqrt(rho) * direction);
    double off = 0.0;
    for (int a = 0; a < static_cast<int>(nu.size()); ++a) off += sm.beta(1 + a) * nu[a];
    double next = eps * (N + off / sm.Omega);
    if (next <= 0.0)
      throw validation_error("quantize circle: iteration left the chart");
    double step = std::abs(next - rho);
    rho = next;
    if (step <= tol * std::max(1.0, rho)) {
      out.rho = rho;
      out.modes = stationary_modes(h, std::sqrt(rho) * direction);
      return out;
    }
  }
  throw validation_error("quantize circle: fixed point did not converge");
}

double heisenberg_defect(const HamiltonianCoeffs& h, const VecC& phi0,
                         const MatC& F0, const MatC& G0, int alpha,
                         const FockState& probe, double time, int steps) {
  if (steps < 1) throw validation_error("heisenberg defect: steps must be >= 1");
  double pn = probe.norm();
  if (pn == 0.0) throw validation_error("heisenberg defect: probe vanishes");
  double dt = time / steps;

  FlowState st_l = make_flow_state(phi0, F0, G0);
  FockState left = apply_linear(frame_ladder(F0, G0, alpha, GermLadderKind::kRaise),
                                probe);
  for (int i = 0; i < steps; ++i) st_l = heisenberg_step(h, st_l, left, dt);

  FlowState st_r = make_flow_state(phi0, F0, G0);
  FockState right = probe;
  for (int i = 0; i < steps; ++i) st_r = heisenberg_step(h, st_r, right, dt);
  right = apply_linear(
      frame_ladder(frame_F(st_r), frame_G(st_r), alpha, GermLadderKind::kRaise), right);

  left.axpy(-1.0, right);
  return left.norm() / pn;
}

FockState exact_evolve(const HamiltonianCoeffs& h, const FockState& psi0,
                       double time, double eps, std::size_t basis_cap) {
  const TruncationSpec& t = psi0.trunc();
  std::vector<Occ> basis = enumerate_basis(t);
  if (basis.size() > basis_cap)
    throw validation_error("exact evolve: basis too large for the dense solver");
  MatC H = dense_matrix(h, t, eps);
  double herm = (H - H.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10 * std::max(1.0, H.cwiseAbs().maxCoeff()))
    throw validation_error("exact evolve: operator matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (H + H.adjoint()));
  if (es.info() != Eigen::Success)
    throw validation_error("exact evolve: eigensolver failed");

  VecC v = VecC::Zero(basis.size());
  std::map<Occ, std::size_t> pos;
  for (std::size_t i = 0; i < basis.size(); ++i) pos[basis[i]] = i;
  for (const auto& [n, a] : psi0.amplitudes()) v(pos.at(n)) = a;

  VecC w = es.eigenvectors().adjoint() * v;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w(i) *= std::exp(-kI * es.eigenvalues()(i) * time / eps);
  v = es.eigenvectors() * w;

  FockState out(t);
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (v(i) != cplx(0.0)) out.accumulate(basis[i], v(i));
  return out;
}

double fidelity(const FockState& a, const FockState& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw validation_error("fidelity: zero state");
  return std::abs(inner_product(a, b)) / (na * nb);
}

}  // namespace germflow
