#include <cmath>

#include "doctest.h"
#include "germflow/dynamics.hpp"
#include "helpers.hpp"

using namespace germflow;
using namespace germflow::testutil;

TEST_CASE("harmonic flow has the closed-form trajectory and trivial legs") {
  std::mt19937 gen(201);
  std::vector<double> omega{1.0, 2.5};
  HamiltonianCoeffs h = harmonic_hamiltonian(omega);
  VecC phi0 = rand_vec(2, gen);
  MatC F0 = MatC::Zero(2, 2), G0 = MatC::Identity(2, 2);
  FlowState st = make_flow_state(phi0, F0, G0);
  const double tf = 0.7;
  advance(h, st, tf, 700);

  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(st.phi(j) - phi0(j) * std::exp(-kI * omega[j] * tf)) < 1e-10);
    CHECK(std::abs(st.Pi(j, j) - std::exp(kI * omega[j] * tf)) < 1e-10);
  }
  CHECK(st.Omega.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(st.s_act) < 1e-10);  // time leg cancels mode by mode
  CHECK(std::abs(st.s_tr) < 1e-12);
  CHECK(std::abs(transport_factor(st) - cplx(1.0)) < 1e-12);

  MatC Ft = frame_F(st), Gt = frame_G(st);
  CHECK((Ft).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < 2; ++j)
    CHECK(std::abs(Gt(j, j) - std::exp(kI * omega[j] * tf)) < 1e-10);
}

TEST_CASE("empty generator leaves the flow state fixed") {
  HamiltonianCoeffs h;
  h.modes = 2;
  VecC phi0(2);
  phi0 << cplx(0.3, 0.1), cplx(-0.2, 0.5);
  FlowState st = make_flow_state(phi0);
  advance(h, st, 1.0, 10);
  CHECK((st.phi - phi0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((st.Pi - MatC::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(st.s_act) < 1e-15);
}

TEST_CASE("canonical pairings survive a quartic flow") {
  std::mt19937 gen(211);
  HamiltonianCoeffs h = number_conserving_hamiltonian(2, 314);
  FlowState st = make_flow_state(rand_vec(2, gen));
  advance(h, st, 0.5, 500);
  auto d = symplectic_defects(st);
  for (double v : d) CHECK(v < 1e-9);
  CHECK(std::abs(std::abs(transport_factor(st)) - 1.0) < 1e-10);
  CHECK(std::abs(st.s_tr.imag()) < 1e-10);
}

TEST_CASE("transported point frames keep the germ conditions") {
  std::mt19937 gen(223);
  HamiltonianCoeffs h = quartic_pair_hamiltonian(2, 1.0, 0.8);
  MatC Msym = rand_sym_contraction(2, 0.5, gen);
  GermFrame start = squeezed_point_frame(Msym);
  FlowState st = make_flow_state(rand_vec(2, gen), start.F_at({}), start.G_at({}));
  advance(h, st, 0.6, 600);
  Tolerances tol;
  GermReport rep = validate_germ(point_manifold(st.phi),
                                 point_frame(frame_F(st), frame_G(st)));
  CHECK(rep.ok(tol));
}

TEST_CASE("transported ratio matrix solves the Riccati flow") {
  std::mt19937 gen(227);
  HamiltonianCoeffs h = number_conserving_hamiltonian(2, 2718);
  VecC phi0 = 0.8 * rand_vec(2, gen);
  MatC Msym = rand_sym_contraction(2, 0.4, gen);
  GermFrame start = squeezed_point_frame(Msym);

  auto ratio_at = [&](double tt) -> MatC {
    FlowState st = make_flow_state(phi0, start.F_at({}), start.G_at({}));
    advance(h, st, tt, 400);
    MatC G = frame_G(st);
    return G.transpose().partialPivLu().solve(frame_F(st).transpose()).transpose();
  };

  const double t0 = 0.3, dstep = 1e-4;
  MatC dM = (ratio_at(t0 + dstep) - ratio_at(t0 - dstep)) / (2.0 * dstep);

  FlowState st = make_flow_state(phi0, start.F_at({}), start.G_at({}));
  advance(h, st, t0, 400);
  MatC G = frame_G(st);
  MatC M = G.transpose().partialPivLu().solve(frame_F(st).transpose()).transpose();
  MatC rhs = hess_cc(h, st.phi) + hess_cp(h, st.phi) * M + M * hess_pc(h, st.phi) +
             M * hess_pp(h, st.phi) * M;
  CHECK((kI * dM - rhs).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("flow sampler lands on the requested grid") {
  std::mt19937 gen(229);
  HamiltonianCoeffs h = quartic_pair_hamiltonian(2, 0.7, 0.4);
  FlowState st = make_flow_state(rand_vec(2, gen));
  auto rows = sample_flow(h, st, 1.0, 100, 4);
  REQUIRE(rows.size() == 5);
  for (int i = 0; i <= 4; ++i) CHECK(rows[i].t == doctest::Approx(0.25 * i));
  FlowState direct = st;
  advance(h, direct, 1.0, 100);
  CHECK((rows.back().phi - direct.phi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coarse stepping on a stiff flow trips the drift guard") {
  std::mt19937 gen(233);
  HamiltonianCoeffs h = quartic_pair_hamiltonian(2, 1.0, 10.0);
  FlowState st = make_flow_state(1.5 * rand_vec(2, gen));
  CHECK_THROWS_AS(advance(h, st, 2.0, 1), validation_error);
}

TEST_CASE("fluctuation generator agrees with the quadratic quantization") {
  std::mt19937 gen(239);
  HamiltonianCoeffs h;
  h.modes = 2;
  auto put = [&](int m, int n) {
    SymbolBlock b = SymbolBlock::zero(2, m, n);
    for (auto& c : b.c) c = rand_c(gen);
    h.blocks[{m, n}] = std::move(b);
  };
  put(1, 1);
  put(2, 0);
  put(0, 2);
  symmetrize(h);

  TruncationSpec t{2, 6};
  FockState s = rand_state(t, gen);
  FockState a = apply_quadratic_generator(h, rand_vec(2, gen), s);
  FockState b = apply_hamiltonian(h, s, 1.0);
  a.axpy(-1.0, b);
  CHECK(a.norm() < 1e-12 * b.norm());
}

TEST_CASE("joint stepper reproduces the classical flow and the phase law") {
  std::mt19937 gen(241);
  std::vector<double> omega{1.0, 1.7};
  HamiltonianCoeffs h = harmonic_hamiltonian(omega);
  VecC phi0 = rand_vec(2, gen);
  TruncationSpec t{2, 4};
  FockState v = rand_state(t, gen);
  FockState v0 = v;

  FlowState st = make_flow_state(phi0);
  const int steps = 400;  // top sector rotates at |omega.n| ~ 6.8; keep the
                          // accumulated RK4 phase error well under 1e-9
  const double tf = 0.5;
  for (int i = 0; i < steps; ++i) st = heisenberg_step(h, st, v, tf / steps);

  FlowState ref = make_flow_state(phi0);
  advance(h, ref, tf, steps);
  CHECK((st.phi - ref.phi).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(st.t == doctest::Approx(tf));

  // quadratic generator of the harmonic symbol is the number operator, so
  // every occupation amplitude just rotates
  for (const auto& [n, c] : v0.amplitudes()) {
    cplx expect = c * std::exp(-kI * (omega[0] * n[0] + omega[1] * n[1]) * tf);
    CHECK(std::abs(v.amplitude(n) - expect) < 1e-9);
  }
}
