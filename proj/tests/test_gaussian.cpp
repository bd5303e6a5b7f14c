#include <cmath>

#include "doctest.h"
#include "germflow/gaussian.hpp"
#include "helpers.hpp"

using namespace germflow;
using namespace germflow::testutil;

namespace {

FockState project_below(const FockState& s, int smax) {
  FockState out(s.trunc());
  for (int N = 0; N <= smax; ++N) out += s.sector_project(N);
  return out;
}

double rel_diff(const FockState& a, const FockState& b) {
  FockState d = a;
  d.axpy(-1.0, b);
  return d.norm() / std::max(1e-300, b.norm());
}

}  // namespace

TEST_CASE("coherent amplitudes follow the Poisson formula") {
  VecC phi(2);
  phi << cplx(0.4, -0.2), cplx(-0.1, 0.3);
  const double eps = 0.5;
  GaussianData gd{eps, phi, MatC::Zero(2, 2), 0.0};
  TruncationSpec t{2, 6};
  FockState s = build_gaussian(gd, t, GaussianMode::kRecursion);
  double pref = std::exp(-phi.squaredNorm() / eps);
  for (const Occ& n : enumerate_basis(t)) {
    cplx expect = pref;
    for (int j = 0; j < 2; ++j)
      expect *= std::pow(phi(j) / std::sqrt(eps), n[j]) /
                std::sqrt(std::tgamma(n[j] + 1.0));
    CHECK(std::abs(s.amplitude(n) - expect) < 1e-13);
  }
  CHECK(s.lost2() > 0.0);  // tail estimate beyond the cap
}

TEST_CASE("the three constructions agree on random data") {
  std::mt19937 gen(101);
  for (int rep = 0; rep < 6; ++rep) {
    int D = 1 + rep % 3;
    TruncationSpec t{D, 8 - 2 * (D - 1)};
    VecC a = rand_vec(D, gen);
    MatC M = rand_sym_contraction(D, 0.3 + 0.1 * rep, gen);
    FockState rec = gaussian_from_exponent(a, M, cplx(0.1, -0.2), t,
                                           GaussianMode::kRecursion);
    FockState ser = gaussian_from_exponent(a, M, cplx(0.1, -0.2), t,
                                           GaussianMode::kSeries);
    FockState ora = gaussian_from_exponent(a, M, cplx(0.1, -0.2), t,
                                           GaussianMode::kOracle);
    CHECK(rel_diff(rec, ora) < 1e-12);
    CHECK(rel_diff(ser, ora) < 1e-12);
  }
}

TEST_CASE("squeezed vacuum norm matches the determinant formula") {
  SUBCASE("one mode, deep truncation") {
    MatC M(1, 1);
    M(0, 0) = cplx(0.35, 0.35);
    TruncationSpec t{1, 40};
    FockState s = gaussian_from_exponent(VecC::Zero(1), M, 0.0, t,
                                         GaussianMode::kRecursion);
    double expect = std::pow(1.0 - std::norm(M(0, 0)), -0.25);
    CHECK(s.norm() == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("two modes") {
    std::mt19937 gen(107);
    MatC M = rand_sym_contraction(2, 0.4, gen);
    TruncationSpec t{2, 24};
    FockState s = gaussian_from_exponent(VecC::Zero(2), M, 0.0, t,
                                         GaussianMode::kRecursion);
    MatC E = MatC::Identity(2, 2);
    double expect = std::pow(std::abs((E - M.adjoint() * M).determinant()), -0.25);
    CHECK(s.norm() == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("in-cap amplitudes are exact even under aggressive truncation") {
  VecC phi(1);
  phi << cplx(0.9, 0.4);
  GaussianData gd{0.3, phi, MatC::Zero(1, 1), 0.0};
  FockState tight = build_gaussian(gd, {1, 3}, GaussianMode::kRecursion);
  FockState wide = build_gaussian(gd, {1, 24}, GaussianMode::kRecursion);
  for (const Occ& n : enumerate_basis({1, 3}))
    CHECK(std::abs(tight.amplitude(n) - wide.amplitude(n)) < 1e-15);
}

TEST_CASE("gaussian construction rejects malformed data") {
  MatC bad(2, 2);
  bad << 0.0, 0.3, -0.3, 0.0;  // antisymmetric
  CHECK_THROWS_AS(gaussian_from_exponent(VecC::Zero(2), bad, 0.0, {2, 4},
                                         GaussianMode::kRecursion),
                  validation_error);
  std::mt19937 gen(113);
  GaussianData over{1.0, rand_vec(2, gen), rand_sym_contraction(2, 1.2, gen), 0.0};
  CHECK_THROWS_AS(build_gaussian(over, {2, 4}), validation_error);
  CHECK_THROWS_AS(gaussian_from_exponent(VecC::Zero(2), MatC::Zero(2, 2),
                                         cplx(800.0, 0.0), {2, 4},
                                         GaussianMode::kRecursion),
                  validation_error);
}

TEST_CASE("germ ladders close the transverse commutation relations") {
  std::mt19937 gen(127);
  const int D = 3;
  VecC pt = rand_vec(D, gen);
  IsotropicManifold m = circle_manifold(pt);
  GermFrame g = rand_circle_germ(pt, gen);
  std::vector<double> tau{0.9};
  const double eps = 0.4;
  TruncationSpec t{D, 6};
  FockState probe = project_below(rand_state(t, gen), 4);  // headroom of two

  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      LinearLadder low = germ_ladder(g, m, tau, eps, a, GermLadderKind::kLower);
      LinearLadder rai = germ_ladder(g, m, tau, eps, b, GermLadderKind::kRaise);
      FockState comm = apply_linear(low, apply_linear(rai, probe));
      comm.axpy(-1.0, apply_linear(rai, apply_linear(low, probe)));
      comm = project_below(comm, 4);
      double expect = (a == b && a >= 1) ? 1.0 : 0.0;  // L_{ba}, tangent col 0
      comm.axpy(-expect, probe);
      CHECK(comm.norm() < 1e-10 * probe.norm());
    }
}

TEST_CASE("lowering ladders annihilate the matched Gaussian") {
  std::mt19937 gen(131);
  const int D = 2;
  MatC Msym = rand_sym_contraction(D, 0.5, gen);
  VecC phi0 = 0.5 * rand_vec(D, gen);
  IsotropicManifold m = point_manifold(phi0);
  GermFrame g = squeezed_point_frame(Msym);
  const double eps = 0.6;
  TruncationSpec t{D, 10};
  FockState Phi = build_gaussian({eps, phi0, Msym, 0.0}, t);
  for (int a = 0; a < D; ++a) {
    FockState killed = apply_linear(germ_ladder(g, m, {}, eps, a,
                                                GermLadderKind::kLower), Phi);
    CHECK(project_below(killed, 8).norm() < 1e-10 * Phi.norm());
  }
}

TEST_CASE("polynomial ladder calculus matches the operator action") {
  std::mt19937 gen(137);
  const int D = 2;
  VecC pt = rand_vec(D, gen);
  IsotropicManifold m = circle_manifold(pt);
  GermFrame g = rand_circle_germ(pt, gen);
  std::vector<double> tau{1.3};
  const double eps = 0.5;
  TruncationSpec t{D, 10};

  VecC phi = m.phi_at(tau);
  MatC F = g.F_at(tau), G = g.G_at(tau);
  MatC M = build_M(m, g, tau).M;
  FockState Phi = build_gaussian({eps, phi, M, 0.0}, t);
  VecC shift = phi.conjugate() / std::sqrt(eps);
  const int alpha = 1;  // transverse column

  SUBCASE("single raise") {
    FockState op = apply_linear(germ_ladder(g, m, tau, eps, alpha,
                                            GermLadderKind::kRaise), Phi);
    VecC v = G.conjugate().col(alpha) - M * F.conjugate().col(alpha);
    CreationPoly p = ladder_on_poly(CreationPoly::one(D), v,
                                    -F.conjugate().col(alpha));
    FockState poly = apply_creation_poly(p, shift, Phi);
    CHECK(rel_diff(project_below(op, 9), project_below(poly, 9)) < 1e-12);
  }
  SUBCASE("double raise") {
    LinearLadder raise = germ_ladder(g, m, tau, eps, alpha, GermLadderKind::kRaise);
    FockState op = apply_linear(raise, apply_linear(raise, Phi));
    VecC v = G.conjugate().col(alpha) - M * F.conjugate().col(alpha);
    VecC w = -F.conjugate().col(alpha);
    CreationPoly p = ladder_on_poly(ladder_on_poly(CreationPoly::one(D), v, w), v, w);
    FockState poly = apply_creation_poly(p, shift, Phi);
    CHECK(rel_diff(project_below(op, 8), project_below(poly, 8)) < 1e-11);
  }
}

TEST_CASE("displacement implementations agree and build coherent states") {
  std::mt19937 gen(139);
  TruncationSpec t{2, 20};
  VecC u = 0.3 * rand_vec(2, gen);

  FockState vac = FockState::vacuum(t);
  FockState coh = displace(u, vac);
  double pref = std::exp(-0.5 * u.squaredNorm());
  for (const Occ& n : enumerate_basis({2, 5})) {
    cplx expect = pref;
    for (int j = 0; j < 2; ++j)
      expect *= std::pow(u(j), n[j]) / std::sqrt(std::tgamma(n[j] + 1.0));
    CHECK(std::abs(coh.amplitude(n) - expect) < 1e-13);
  }

  FockState mid = project_below(rand_state({2, 4}, gen), 4);
  FockState a(t);
  for (const auto& [n, c] : mid.amplitudes()) a.accumulate(n, c);
  CHECK(rel_diff(displace(u, a), displace_expm(u, a)) < 1e-10);
}

TEST_CASE("point-chart overlaps need no small-parameter limit") {
  std::mt19937 gen(149);
  const int D = 2;
  VecC phi0 = 0.5 * rand_vec(D, gen);
  IsotropicManifold m = point_manifold(phi0);
  MatC Dm = rand_sym_contraction(D, 0.25, gen);

  CreationPoly p1 = CreationPoly::one(D);
  p1.terms[{1, 0}] = cplx(0.7, 0.1);
  CreationPoly p2 = CreationPoly::one(D);
  p2.terms[{1, 1}] = cplx(-0.2, 0.4);

  OverlapSymbol y;
  y.D = [Dm](const std::vector<double>&) { return Dm; };
  y.P1 = [p1](const std::vector<double>&) { return p1; };
  y.P2 = [p2](const std::vector<double>&) { return p2; };

  // the identity is exact for a point chart; the tolerance only covers the
  // Fock truncation tail, which shrinks like ||D||^(nmax/2)
  TruncationSpec t{D, 48};
  OverlapLimit rhs = overlap_rhs(y, m, t, 1, 2);
  for (double eps : {1.0, 0.37}) {
    cplx lhs = overlap_lhs(y, m, eps, t, 1);
    CHECK(std::abs(lhs - rhs.value) < 1e-10 * std::max(1.0, std::abs(rhs.value)));
  }
}
