#include <sstream>

#include "doctest.h"
#include "germflow/fock.hpp"
#include "helpers.hpp"

using namespace germflow;
using namespace germflow::testutil;

TEST_CASE("basis enumeration is complete, capped and sorted") {
  TruncationSpec t{3, 4};
  auto basis = enumerate_basis(t);
  CHECK(basis.size() == 35);  // C(4+3,3)
  CHECK(std::is_sorted(basis.begin(), basis.end()));
  for (const Occ& n : basis) {
    CHECK(n.size() == 3);
    CHECK(occ_total(n) <= 4);
  }
  CHECK(std::adjacent_find(basis.begin(), basis.end()) == basis.end());
}

TEST_CASE("ladder matrix elements") {
  TruncationSpec t{2, 6};
  FockState s = FockState::basis(t, {2, 1});
  FockState up = apply_create(s, 0);
  CHECK(std::abs(up.amplitude({3, 1}) - std::sqrt(3.0)) < 1e-15);
  CHECK(up.amplitudes().size() == 1);
  FockState dn = apply_destroy(s, 1);
  CHECK(std::abs(dn.amplitude({2, 0}) - 1.0) < 1e-15);
  FockState dn0 = apply_destroy(FockState::basis(t, {0, 1}), 0);
  CHECK(dn0.amplitudes().empty());
}

TEST_CASE("creation and annihilation are mutual adjoints on the kept space") {
  std::mt19937 gen(11);
  TruncationSpec t{2, 5};
  FockState f = rand_state(t, gen);
  FockState g = rand_state(t, gen);
  for (int mode = 0; mode < 2; ++mode) {
    cplx lhs = inner_product(f, apply_create(g, mode));
    cplx rhs = inner_product(apply_destroy(f, mode), g);
    CHECK(std::abs(lhs - rhs) < 1e-13);
  }
}

TEST_CASE("canonical commutator holds strictly below the cap") {
  TruncationSpec t{3, 5};
  for (const Occ& n : enumerate_basis({3, 4})) {  // headroom of one quantum
    FockState s = FockState::basis(t, n);
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) {
        FockState comm = apply_destroy(apply_create(s, l), j);
        comm.axpy(-1.0, apply_create(apply_destroy(s, j), l));
        comm.axpy(j == l ? -1.0 : 0.0, s);
        CHECK(comm.norm() < 1e-14);
      }
  }
}

TEST_CASE("truncation routes weight into the lost ledger") {
  TruncationSpec t{2, 3};
  FockState s(t);
  s.accumulate({2, 2}, cplx(0.6, -0.8));  // total 4 > nmax
  CHECK(s.amplitudes().empty());
  CHECK(s.lost2() == doctest::Approx(1.0));

  FockState top = FockState::basis(t, {3, 0});
  FockState up = apply_create(top, 0);
  CHECK(up.amplitudes().empty());
  CHECK(up.lost2() == doctest::Approx(4.0));  // |sqrt(4)|^2

  FockState acc(t);
  acc.axpy(cplx(0.0, 0.5), up);
  CHECK(acc.lost2() == doctest::Approx(1.0));
  acc *= 2.0;
  CHECK(acc.lost2() == doctest::Approx(4.0));
}

TEST_CASE("sector decomposition partitions the norm") {
  std::mt19937 gen(7);
  TruncationSpec t{2, 4};
  FockState s = rand_state(t, gen);
  double total = 0.0;
  FockState rebuilt(t);
  for (const auto& [N, w2] : s.sector_norm2()) {
    total += w2;
    FockState p = s.sector_project(N);
    CHECK(p.norm2() == doctest::Approx(w2));
    rebuilt += p;
  }
  CHECK(total == doctest::Approx(s.norm2()));
  rebuilt.axpy(-1.0, s);
  CHECK(rebuilt.norm() < 1e-14);
}

TEST_CASE("sector tensor carries the multinomial weight") {
  TruncationSpec t{2, 3};
  FockState s(t);
  s.accumulate({1, 1}, cplx(1.0));
  SectorTensor T = tensor_from_sector(s, 2);
  CHECK(std::abs(T.at({0, 1}) - cplx(1.0 / std::sqrt(2.0))) < 1e-14);
  CHECK(std::abs(T.at({1, 0}) - cplx(1.0 / std::sqrt(2.0))) < 1e-14);
  CHECK(std::abs(T.at({0, 0})) == 0.0);
}

TEST_CASE("tensor round trip reproduces the sector") {
  std::mt19937 gen(23);
  TruncationSpec t{3, 4};
  FockState s = rand_state(t, gen);
  for (int N = 0; N <= 4; ++N) {
    FockState back = state_from_tensor(t, tensor_from_sector(s, N));
    back.axpy(-1.0, s.sector_project(N));
    CHECK(back.norm() < 1e-12);
  }
}

TEST_CASE("asymmetric tensors are rejected") {
  SectorTensor T = SectorTensor::zero(2, 2);
  T.at({0, 1}) = 1.0;
  T.at({1, 0}) = 0.5;
  CHECK_THROWS_AS(state_from_tensor({2, 4}, T), validation_error);
}

TEST_CASE("plain-text serialization round-trips exactly") {
  std::mt19937 gen(31);
  TruncationSpec t{2, 5};
  FockState s = rand_state(t, gen);
  s.add_lost2(0.123456789012345678);
  std::stringstream ss;
  write_state(ss, s);
  FockState r = read_state(ss);
  REQUIRE(r.trunc() == s.trunc());
  CHECK(r.lost2() == s.lost2());
  REQUIRE(r.amplitudes().size() == s.amplitudes().size());
  for (const auto& [n, a] : s.amplitudes()) CHECK(r.amplitude(n) == a);
}

TEST_CASE("inner product is conjugate-linear in the first slot") {
  std::mt19937 gen(43);
  TruncationSpec t{2, 3};
  FockState f = rand_state(t, gen);
  FockState g = rand_state(t, gen);
  cplx alpha(0.3, -0.7);
  FockState fa(t);
  fa.axpy(alpha, f);
  CHECK(std::abs(inner_product(fa, g) - std::conj(alpha) * inner_product(f, g)) < 1e-13);
  FockState ga(t);
  ga.axpy(alpha, g);
  CHECK(std::abs(inner_product(f, ga) - alpha * inner_product(f, g)) < 1e-13);
  CHECK(std::abs(inner_product(f, g) - std::conj(inner_product(g, f))) < 1e-14);
}
