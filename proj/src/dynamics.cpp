#include "germflow/dynamics.hpp"

#include <cmath>
#include <string>

namespace germflow {

namespace {

struct Deriv {
  VecC phi;
  MatC Pi, Omega;
  cplx s_act, s_tr;
};

MatC right_divide(const MatC& F, const MatC& G) {  // F G^{-1}
  return G.transpose().partialPivLu().solve(F.transpose()).transpose();
}

Deriv flow_deriv(const HamiltonianCoeffs& h, const FlowState& st) {
  Deriv d;
  d.phi = -kI * grad_conj(h, st.phi);
  MatC pc = hess_pc(h, st.phi);
  MatC pp = hess_pp(h, st.phi);
  MatC cc = hess_cc(h, st.phi);
  MatC cp = hess_cp(h, st.phi);
  d.Pi = kI * (pc * st.Pi + pp * st.Omega);
  d.Omega = -kI * (cc * st.Pi + cp * st.Omega);
  d.s_act = (st.phi.transpose() * d.phi.conjugate())(0) -
            kI * symbol_value(h, st.phi);
  MatC R = right_divide(frame_F(st), frame_G(st));
  d.s_tr = (pp.array() * R.array()).sum() +
           (cc.array() * R.conjugate().array()).sum();
  return d;
}

FlowState nudged(const FlowState& st, const Deriv& d, double c) {
  FlowState out = st;
  out.t += c;
  out.phi += c * d.phi;
  out.Pi += c * d.Pi;
  out.Omega += c * d.Omega;
  out.s_act += c * d.s_act;
  out.s_tr += c * d.s_tr;
  return out;
}

void accumulate(FlowState& st, const Deriv& d, double c) {
  st.phi += c * d.phi;
  st.Pi += c * d.Pi;
  st.Omega += c * d.Omega;
  st.s_act += c * d.s_act;
  st.s_tr += c * d.s_tr;
}

bool finite(const FlowState& st) {
  return st.phi.allFinite() && st.Pi.allFinite() && st.Omega.allFinite() &&
         std::isfinite(st.s_act.real()) && std::isfinite(st.s_act.imag()) &&
         std::isfinite(st.s_tr.real()) && std::isfinite(st.s_tr.imag());
}

void rk4_step(const HamiltonianCoeffs& h, FlowState& st, double dt) {
  Deriv k1 = flow_deriv(h, st);
  Deriv k2 = flow_deriv(h, nudged(st, k1, dt / 2));
  Deriv k3 = flow_deriv(h, nudged(st, k2, dt / 2));
  Deriv k4 = flow_deriv(h, nudged(st, k3, dt));
  accumulate(st, k1, dt / 6);
  accumulate(st, k2, dt / 3);
  accumulate(st, k3, dt / 3);
  accumulate(st, k4, dt / 6);
  st.t += dt;
}

}  // namespace

FlowState make_flow_state(const VecC& phi0) {
  const int D = static_cast<int>(phi0.size());
  return make_flow_state(phi0, MatC::Zero(D, D), MatC::Identity(D, D));
}

FlowState make_flow_state(const VecC& phi0, const MatC& F0, const MatC& G0) {
  const int D = static_cast<int>(phi0.size());
  if (F0.rows() != D || G0.rows() != D || F0.cols() != G0.cols())
    throw validation_error("make_flow_state: frame dimension mismatch");
  FlowState st;
  st.phi = phi0;
  st.Pi = MatC::Identity(D, D);
  st.Omega = MatC::Zero(D, D);
  st.F0 = F0;
  st.G0 = G0;
  return st;
}

MatC frame_F(const FlowState& st) {
  return st.Omega * st.G0 + st.Pi.conjugate() * st.F0;
}

MatC frame_G(const FlowState& st) {
  return st.Pi * st.G0 + st.Omega.conjugate() * st.F0;
}

std::array<double, 4> symplectic_defects(const FlowState& st) {
  const int D = static_cast<int>(st.phi.size());
  MatC E = MatC::Identity(D, D);
  std::array<double, 4> d;
  d[0] = (st.Pi.adjoint() * st.Pi - st.Omega.adjoint() * st.Omega - E)
             .cwiseAbs()
             .maxCoeff();
  d[1] = (st.Omega.transpose() * st.Pi - st.Pi.transpose() * st.Omega)
             .cwiseAbs()
             .maxCoeff();
  d[2] = (st.Pi * st.Pi.adjoint() - st.Omega.conjugate() * st.Omega.transpose() - E)
             .cwiseAbs()
             .maxCoeff();
  d[3] = (st.Omega * st.Pi.adjoint() - st.Pi.conjugate() * st.Omega.transpose())
             .cwiseAbs()
             .maxCoeff();
  return d;
}

double symplectic_defect(const FlowState& st) {
  std::array<double, 4> d = symplectic_defects(st);
  return std::max(std::max(d[0], d[1]), std::max(d[2], d[3]));
}

cplx transport_factor(const FlowState& st) {
  return std::exp(-kI / 4.0 * st.s_tr);
}

void advance(const HamiltonianCoeffs& h, FlowState& st, double t_target,
             int steps, double drift_tol) {
  if (steps < 1) throw validation_error("advance: steps must be >= 1");
  if (st.phi.size() != h.modes)
    throw validation_error("advance: mode count mismatch");
  const double dt = (t_target - st.t) / steps;
  if (dt == 0.0) return;
  for (int i = 0; i < steps; ++i) {
    rk4_step(h, st, dt);
    if (!finite(st))
      throw validation_error("advance: flow diverged at t = " +
                             std::to_string(st.t));
    double defect = symplectic_defect(st);
    if (defect > drift_tol)
      throw validation_error("advance: canonical defect " +
                             std::to_string(defect) + " at t = " +
                             std::to_string(st.t) + ", refine the step");
  }
}

std::vector<FlowState> sample_flow(const HamiltonianCoeffs& h, FlowState st,
                                   double t_target, int steps, int stores,
                                   double drift_tol) {
  if (stores < 1) throw validation_error("sample_flow: stores must be >= 1");
  if (steps < stores) steps = stores;
  std::vector<FlowState> out;
  out.reserve(stores + 1);
  out.push_back(st);
  const double t0 = st.t;
  int done = 0;
  for (int s = 1; s <= stores; ++s) {
    double tk = t0 + (t_target - t0) * s / stores;
    int upto = static_cast<int>(std::llround(double(steps) * s / stores));
    advance(h, st, tk, std::max(1, upto - done), drift_tol);
    done = upto;
    out.push_back(st);
  }
  return out;
}

FockState apply_quadratic_generator(const HamiltonianCoeffs& h, const VecC& phi,
                                    const FockState& s) {
  const int D = s.trunc().modes;
  if (phi.size() != D)
    throw validation_error("apply_quadratic_generator: dimension mismatch");
  MatC cc = hess_cc(h, phi);
  MatC cp = hess_cp(h, phi);
  MatC pp = hess_pp(h, phi);
  FockState out(s.trunc());
  for (int m = 0; m < D; ++m)
    for (int n = 0; n < D; ++n) {
      if (cc(m, n) != cplx(0.0))
        out.axpy(0.5 * cc(m, n), apply_create(apply_create(s, n), m));
      if (pp(m, n) != cplx(0.0))
        out.axpy(0.5 * pp(m, n), apply_destroy(apply_destroy(s, n), m));
      if (cp(m, n) != cplx(0.0))
        out.axpy(cp(m, n), apply_create(apply_destroy(s, n), m));
    }
  return out;
}

FlowState heisenberg_step(const HamiltonianCoeffs& h, const FlowState& st,
                          FockState& v, double dt) {
  auto vdot = [&](const VecC& phi, const FockState& w) {
    FockState d = apply_quadratic_generator(h, phi, w);
    d *= -kI;
    return d;
  };
  Deriv k1 = flow_deriv(h, st);
  FockState q1 = vdot(st.phi, v);

  FlowState s2 = nudged(st, k1, dt / 2);
  FockState v2 = v;
  v2.axpy(dt / 2, q1);
  FockState q2 = vdot(s2.phi, v2);

  Deriv k2 = flow_deriv(h, s2);
  FlowState s3 = nudged(st, k2, dt / 2);
  FockState v3 = v;
  v3.axpy(dt / 2, q2);
  FockState q3 = vdot(s3.phi, v3);

  Deriv k3 = flow_deriv(h, s3);
  FlowState s4 = nudged(st, k3, dt);
  FockState v4 = v;
  v4.axpy(dt, q3);
  FockState q4 = vdot(s4.phi, v4);

  Deriv k4 = flow_deriv(h, s4);
  FlowState out = st;
  accumulate(out, k1, dt / 6);
  accumulate(out, k2, dt / 3);
  accumulate(out, k3, dt / 3);
  accumulate(out, k4, dt / 6);
  out.t += dt;

  v.axpy(dt / 6, q1);
  v.axpy(dt / 3, q2);
  v.axpy(dt / 3, q3);
  v.axpy(dt / 6, q4);
  return out;
}

}  // namespace germflow
