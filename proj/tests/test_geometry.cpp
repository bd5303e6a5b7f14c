#include <cmath>

#include "doctest.h"
#include "germflow/geometry.hpp"
#include "helpers.hpp"

using namespace germflow;
using namespace germflow::testutil;

namespace {

// planar loop with analytic tangent and a closed-form line integral,
// phi = (a cos tau + i b sin tau)/sqrt(2)
IsotropicManifold ellipse_manifold(double a, double b) {
  IsotropicManifold m;
  m.modes = 1;
  m.k = 1;
  m.period = {2.0 * kPi};
  m.phi = [a, b](const std::vector<double>& tau) -> VecC {
    VecC v(1);
    v(0) = cplx(a * std::cos(tau[0]), b * std::sin(tau[0])) / std::sqrt(2.0);
    return v;
  };
  m.dphi = {[a, b](const std::vector<double>& tau) -> VecC {
    VecC v(1);
    v(0) = cplx(-a * std::sin(tau[0]), b * std::cos(tau[0])) / std::sqrt(2.0);
    return v;
  }};
  return m;
}

cplx ellipse_phase(double a, double b, double tau) {
  double re = (a * a * std::cos(tau) * std::cos(tau) +
               b * b * std::sin(tau) * std::sin(tau) - a * a) / 4.0;
  return cplx(re, -0.5 * a * b * tau);
}

}  // namespace

TEST_CASE("manifold validation accepts the built-in charts") {
  std::mt19937 gen(3);
  Tolerances tol;
  CHECK(validate_manifold(point_manifold(rand_vec(2, gen))).ok(tol));
  CHECK(validate_manifold(circle_manifold(rand_vec(3, gen))).ok(tol));
  CHECK(validate_manifold(torus2_manifold(rand_vec(3, gen), {0, 1, 1})).ok(tol));
  CHECK(validate_manifold(ellipse_manifold(1.1, 0.7)).ok(tol));
}

TEST_CASE("analytic and finite-difference tangents agree") {
  std::mt19937 gen(15);
  VecC pt = rand_vec(2, gen);
  IsotropicManifold m = circle_manifold(pt);
  IsotropicManifold fd = m;
  fd.dphi.clear();
  std::vector<double> tau{0.8};
  CHECK((m.tangent(tau) - fd.tangent(tau)).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("transverse projector matrix") {
  MatR L = germ_L(4, 1);
  CHECK(L(0, 0) == 0.0);
  CHECK(L(1, 1) == 1.0);
  CHECK(L(3, 3) == 1.0);
  CHECK(L.sum() == 3.0);
}

TEST_CASE("frame builders satisfy the germ conditions") {
  std::mt19937 gen(27);
  Tolerances tol;

  SUBCASE("vacuum point") {
    VecC phi0 = rand_vec(2, gen);
    CHECK(validate_germ(point_manifold(phi0), vacuum_point_frame(2)).ok(tol));
  }
  SUBCASE("squeezed point") {
    VecC phi0 = rand_vec(3, gen);
    MatC Msym = rand_sym_contraction(3, 0.6, gen);
    CHECK(validate_germ(point_manifold(phi0), squeezed_point_frame(Msym)).ok(tol));
  }
  SUBCASE("circle base and squeezed circle") {
    VecC pt = rand_vec(3, gen);
    IsotropicManifold m = circle_manifold(pt);
    CHECK(validate_germ(m, circle_base_frame(pt)).ok(tol));
    CHECK(validate_germ(m, squeezed_circle_frame(pt, 0.45)).ok(tol));
  }
  SUBCASE("random circle frames") {
    for (int rep = 0; rep < 5; ++rep) {
      VecC pt = rand_vec(2 + rep % 3, gen);
      CHECK(validate_germ(circle_manifold(pt), rand_circle_germ(pt, gen)).ok(tol));
    }
  }
  SUBCASE("torus") {
    VecC pt = rand_vec(4, gen);
    std::vector<int> ax{0, 0, 1, 1};
    CHECK(validate_germ(torus2_manifold(pt, ax), torus2_base_frame(pt, ax)).ok(tol));
  }
}

TEST_CASE("squeezed point frame reproduces its ratio matrix") {
  std::mt19937 gen(33);
  MatC Msym = rand_sym_contraction(3, 0.7, gen);
  GermFrame g = squeezed_point_frame(Msym);
  IsotropicManifold m = point_manifold(VecC::Zero(3));
  MMatrixResult r = build_M(m, g, {});
  CHECK(r.asym < 1e-12);
  CHECK((r.M - Msym).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(squeezed_point_frame(rand_sym_contraction(3, 1.3, gen)),
                  validation_error);
}

TEST_CASE("transverse matrix annihilates the conjugate tangents") {
  std::mt19937 gen(39);
  for (int rep = 0; rep < 8; ++rep) {
    VecC pt = rand_vec(2 + rep % 3, gen);
    IsotropicManifold m = circle_manifold(pt);
    GermFrame g = rand_circle_germ(pt, gen);
    std::vector<double> tau{0.3 + 0.4 * rep};
    MMatrixResult r = build_M(m, g, tau);
    CHECK(r.asym < 1e-10);
    CHECK(op_norm(r.M) < 1.0);
    MatC T = m.tangent(tau);
    CHECK((r.M * T.conjugate()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(gap_bound(m, g, tau) > 0.0);
  }
}

TEST_CASE("base circle frame has a vanishing transverse matrix") {
  std::mt19937 gen(41);
  VecC pt = rand_vec(3, gen);
  MMatrixResult r = build_M(circle_manifold(pt), circle_base_frame(pt), {0.7});
  CHECK(r.M.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("squeezed circle frame has the expected transverse strength") {
  std::mt19937 gen(47);
  VecC pt = rand_vec(3, gen);
  const double s = 0.4;
  GermFrame g = squeezed_circle_frame(pt, s);
  MMatrixResult r = build_M(circle_manifold(pt), g, {0.0});
  CHECK(std::abs(op_norm(r.M) - std::tanh(s)) < 1e-10);
  REQUIRE(g.loop_gamma.size() == 1);
  for (double gph : g.loop_gamma[0]) CHECK(gph == 0.0);
}

TEST_CASE("gap bound of the base circle frame is min(rho, 1)") {
  VecC pt(2);
  pt << cplx(0.8, 0.0), cplx(0.0, 0.0);
  pt *= 1.0;  // rho = 0.64
  IsotropicManifold m = circle_manifold(pt);
  double gap = gap_bound(m, circle_base_frame(pt), {0.0});
  CHECK(gap == doctest::Approx(0.64).epsilon(1e-8));
}

TEST_CASE("measure density of the circle is |phi|") {
  std::mt19937 gen(51);
  VecC pt = rand_vec(3, gen);
  CHECK(measure_density(circle_manifold(pt), {1.1}) ==
        doctest::Approx(pt.norm()).epsilon(1e-10));
}

TEST_CASE("rank-k determinant identity against a dense evaluation") {
  std::mt19937 gen(57);
  for (int rep = 0; rep < 20; ++rep) {
    int D = 2 + rep % 7;
    int k = 1 + rep % 3;
    std::vector<VecC> y, z;
    for (int c = 0; c < k; ++c) {
      y.push_back(0.5 * rand_vec(D, gen));
      z.push_back(0.5 * rand_vec(D, gen));
    }
    cplx low = rank_update_det(y, z);
    MatC R = MatC::Identity(D, D);
    for (int c = 0; c < k; ++c) R -= y[c] * z[c].transpose();
    CHECK(std::abs(low - R.determinant()) < 1e-12 * std::max(1.0, std::abs(low)));
  }
}

TEST_CASE("loop action of the circle is rho over eps") {
  std::mt19937 gen(61);
  VecC pt = rand_vec(2, gen);
  double rho = pt.squaredNorm();
  IsotropicManifold m = circle_manifold(pt);
  for (double eps : {1.0, 0.25, 0.1})
    CHECK(loop_action(m, eps, 0) == doctest::Approx(rho / eps).epsilon(1e-12));
}

TEST_CASE("quantization defect measures the lattice distance") {
  VecC pt(2);
  pt << cplx(1.0, 0.0), cplx(0.0, 0.0);  // rho = 1
  IsotropicManifold m = circle_manifold(pt);
  CHECK(quantization_defect(m, 0.25, 0) < 1e-12);          // S = 4
  CHECK(quantization_defect(m, 0.8, 0) ==
        doctest::Approx(0.25).epsilon(1e-10));              // S = 1.25
  std::vector<double> gamma{kPi / 2.0};
  std::vector<int> nu{1};
  CHECK(quantization_defect(m, 0.8, 0, gamma, nu) < 1e-12);  // offset 0.25
  CHECK_THROWS_AS(quantization_defect(m, 0.8, 0, {}, nu), validation_error);
}

TEST_CASE("tau grid accumulates the closed-form line integral") {
  const double a = 1.1, b = 0.7;
  IsotropicManifold m = ellipse_manifold(a, b);
  TauGrid grid = make_tau_grid(m, 256);
  REQUIRE(grid.nodes.size() == 256);
  CHECK(grid.cell == doctest::Approx(2.0 * kPi / 256));
  for (std::size_t i = 0; i < grid.nodes.size(); i += 37) {
    cplx expect = ellipse_phase(a, b, grid.nodes[i][0]);
    CHECK(std::abs(grid.phase[i] - expect) < 1e-6);
  }
  CHECK(std::abs(grid.loop_total[0] - cplx(0.0, -kPi * a * b)) < 1e-6);
  // the loop action it induces: Re(i * loop / 2 pi eps) = a b / (2 eps)
  CHECK(loop_action(m, 0.5, 0, 512) == doctest::Approx(a * b).epsilon(1e-9));
}

TEST_CASE("torus grid threads phases consistently along both axes") {
  std::mt19937 gen(63);
  VecC pt = rand_vec(3, gen);
  std::vector<int> ax{0, 1, 1};
  IsotropicManifold m = torus2_manifold(pt, ax);
  TauGrid grid = make_tau_grid(m, 8);
  REQUIRE(grid.nodes.size() == 64);
  // phi . d conj phi is constant along each axis, so every node phase is a
  // linear combination of the per-axis loop integrals
  double rho0 = std::norm(pt(0));
  double rho1 = std::norm(pt(1)) + std::norm(pt(2));
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    cplx expect = -kI * (rho0 * grid.nodes[i][0] + rho1 * grid.nodes[i][1]);
    CHECK(std::abs(grid.phase[i] - expect) < 1e-12);
  }
  CHECK(std::abs(grid.loop_total[0] + kI * 2.0 * kPi * rho0) < 1e-12);
  CHECK(std::abs(grid.loop_total[1] + kI * 2.0 * kPi * rho1) < 1e-12);
}

TEST_CASE("stationary-style frames carry their monodromy phases") {
  VecC pt(2);
  pt << cplx(0.9, 0.0), cplx(0.3, 0.2);
  VecR beta(2);
  beta << 0.0, 1.7;
  MatC Ft = MatC::Zero(2, 2), Gt = MatC::Zero(2, 2);
  Ft.col(0) = kI * pt;
  Gt.col(0) = -kI * pt.conjugate();
  // transverse column: bilinear orthocomplement, no squeezing
  Eigen::HouseholderQR<MatC> qr(pt.conjugate());
  Gt.col(1) = (qr.householderQ() * MatC::Identity(2, 2)).col(1);
  GermFrame g = stationary_circle_frame(pt, 2.0, beta, Ft, Gt);
  Tolerances tol;
  CHECK(validate_germ(circle_manifold(pt), g).ok(tol));
  REQUIRE(g.loop_gamma.size() == 1);
  CHECK(g.loop_gamma[0][0] == doctest::Approx(0.0));
  CHECK(g.loop_gamma[0][1] == doctest::Approx(2.0 * kPi * 1.7 / 2.0));
}
