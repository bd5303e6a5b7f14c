#include "germflow/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace germflow {

void TruncationSpec::check() const {
  if (modes < 1) throw validation_error("truncation: modes must be >= 1");
  if (nmax < 0) throw validation_error("truncation: nmax must be >= 0");
}

int occ_total(const Occ& n) {
  int s = 0;
  for (int v : n) s += v;
  return s;
}

static void check_occ(const TruncationSpec& t, const Occ& n) {
  if (static_cast<int>(n.size()) != t.modes)
    throw validation_error("occupation vector has wrong mode count");
  for (int v : n)
    if (v < 0) throw validation_error("negative occupation number");
}

static void enumerate_rec(const TruncationSpec& t, Occ& cur, int mode, int left,
                          std::vector<Occ>& out) {
  if (mode == t.modes - 1) {
    for (int v = 0; v <= left; ++v) {
      cur[mode] = v;
      out.push_back(cur);
    }
    return;
  }
  for (int v = 0; v <= left; ++v) {
    cur[mode] = v;
    enumerate_rec(t, cur, mode + 1, left - v, out);
  }
}

std::vector<Occ> enumerate_basis(const TruncationSpec& t) {
  t.check();
  std::vector<Occ> out;
  Occ cur(t.modes, 0);
  enumerate_rec(t, cur, 0, t.nmax, out);
  std::sort(out.begin(), out.end());
  return out;
}

FockState FockState::vacuum(TruncationSpec t) {
  FockState s(t);
  s.amp_[Occ(t.modes, 0)] = 1.0;
  return s;
}

FockState FockState::basis(TruncationSpec t, const Occ& n) {
  FockState s(t);
  check_occ(t, n);
  if (occ_total(n) > t.nmax)
    throw validation_error("basis occupation exceeds nmax");
  s.amp_[n] = 1.0;
  return s;
}

cplx FockState::amplitude(const Occ& n) const {
  auto it = amp_.find(n);
  return it == amp_.end() ? cplx(0.0) : it->second;
}

void FockState::accumulate(const Occ& n, cplx a) {
  check_occ(trunc_, n);
  if (a == cplx(0.0)) return;
  if (occ_total(n) > trunc_.nmax) {
    lost2_ += std::norm(a);
    return;
  }
  amp_[n] += a;
}

FockState& FockState::operator*=(cplx s) {
  for (auto& [n, a] : amp_) a *= s;
  lost2_ *= std::norm(s);
  return *this;
}

FockState& FockState::axpy(cplx s, const FockState& other) {
  if (!(other.trunc_ == trunc_))
    throw validation_error("axpy: truncation mismatch");
  for (const auto& [n, a] : other.amp_) amp_[n] += s * a;
  lost2_ += std::norm(s) * other.lost2_;
  return *this;
}

double FockState::norm2() const {
  double s = 0.0;
  for (const auto& [n, a] : amp_) s += std::norm(a);
  return s;
}

void FockState::prune(double eps) {
  for (auto it = amp_.begin(); it != amp_.end();) {
    if (std::abs(it->second) <= eps)
      it = amp_.erase(it);
    else
      ++it;
  }
}

std::map<int, double> FockState::sector_norm2() const {
  std::map<int, double> out;
  for (const auto& [n, a] : amp_) out[occ_total(n)] += std::norm(a);
  return out;
}

FockState FockState::sector_project(int N) const {
  FockState out(trunc_);
  for (const auto& [n, a] : amp_)
    if (occ_total(n) == N) out.amp_[n] = a;
  return out;
}

cplx inner_product(const FockState& f, const FockState& g) {
  if (!(f.trunc() == g.trunc()))
    throw validation_error("inner_product: truncation mismatch");
  // iterate over the smaller map
  const auto& a = f.amplitudes();
  const auto& b = g.amplitudes();
  cplx s = 0.0;
  if (a.size() <= b.size()) {
    for (const auto& [n, fa] : a) {
      auto it = b.find(n);
      if (it != b.end()) s += std::conj(fa) * it->second;
    }
  } else {
    for (const auto& [n, gb] : b) {
      auto it = a.find(n);
      if (it != a.end()) s += std::conj(it->second) * gb;
    }
  }
  return s;
}

FockState apply_create(const FockState& s, int mode) {
  if (mode < 0 || mode >= s.trunc().modes)
    throw validation_error("apply_create: mode out of range");
  FockState out(s.trunc());
  out.add_lost2(s.lost2());
  for (const auto& [n, a] : s.amplitudes()) {
    Occ m = n;
    m[mode] += 1;
    out.accumulate(m, a * std::sqrt(static_cast<double>(m[mode])));
  }
  return out;
}

FockState apply_destroy(const FockState& s, int mode) {
  if (mode < 0 || mode >= s.trunc().modes)
    throw validation_error("apply_destroy: mode out of range");
  FockState out(s.trunc());
  out.add_lost2(s.lost2());
  for (const auto& [n, a] : s.amplitudes()) {
    if (n[mode] == 0) continue;
    Occ m = n;
    m[mode] -= 1;
    out.accumulate(m, a * std::sqrt(static_cast<double>(n[mode])));
  }
  return out;
}

FockState apply_ladder(const FockState& s, int mode, Ladder which) {
  return which == Ladder::create ? apply_create(s, mode) : apply_destroy(s, mode);
}

SectorTensor SectorTensor::zero(int modes, int order) {
  SectorTensor t;
  t.modes = modes;
  t.order = order;
  std::size_t sz = 1;
  for (int i = 0; i < order; ++i) sz *= static_cast<std::size_t>(modes);
  t.c.assign(sz, cplx(0.0));
  return t;
}

std::size_t SectorTensor::index(const std::vector<int>& word) const {
  if (static_cast<int>(word.size()) != order)
    throw validation_error("sector tensor: word length mismatch");
  std::size_t idx = 0;
  for (int i : word) {
    if (i < 0 || i >= modes) throw validation_error("sector tensor: mode out of range");
    idx = idx * static_cast<std::size_t>(modes) + static_cast<std::size_t>(i);
  }
  return idx;
}

static Occ occ_of_word(int modes, const std::vector<int>& word) {
  Occ n(modes, 0);
  for (int i : word) n[i] += 1;
  return n;
}

// sqrt(N! / prod n_j!) computed through lgamma to stay overflow-safe
static double multinomial_sqrt(const Occ& n) {
  double lg = std::lgamma(static_cast<double>(occ_total(n)) + 1.0);
  for (int v : n) lg -= std::lgamma(static_cast<double>(v) + 1.0);
  return std::exp(0.5 * lg);
}

static void for_each_word(int modes, int order,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> word(order, 0);
  while (true) {
    fn(word);
    int p = order - 1;
    while (p >= 0 && word[p] == modes - 1) {
      word[p] = 0;
      --p;
    }
    if (p < 0) break;
    ++word[p];
  }
}

SectorTensor tensor_from_sector(const FockState& s, int N) {
  if (N < 0 || N > s.trunc().nmax)
    throw validation_error("tensor_from_sector: sector out of range");
  SectorTensor t = SectorTensor::zero(s.trunc().modes, N);
  if (N == 0) {
    t.c[0] = s.amplitude(Occ(s.trunc().modes, 0));
    return t;
  }
  for_each_word(t.modes, t.order, [&](const std::vector<int>& word) {
    Occ n = occ_of_word(t.modes, word);
    cplx a = s.amplitude(n);
    if (a != cplx(0.0)) t.at(word) = a / multinomial_sqrt(n);
  });
  return t;
}

FockState state_from_tensor(const TruncationSpec& t, const SectorTensor& T,
                            double symmetry_tol) {
  if (T.modes != t.modes) throw validation_error("state_from_tensor: mode mismatch");
  if (T.order > t.nmax) throw validation_error("state_from_tensor: sector beyond nmax");
  FockState out(t);
  if (T.order == 0) {
    out.accumulate(Occ(t.modes, 0), T.c[0]);
    return out;
  }
  double scale = 0.0;
  for (const cplx& v : T.c) scale = std::max(scale, std::abs(v));
  for_each_word(T.modes, T.order, [&](const std::vector<int>& word) {
    // symmetry check against the sorted representative
    std::vector<int> rep = word;
    std::sort(rep.begin(), rep.end());
    cplx v = T.at(word);
    cplx vr = T.at(rep);
    if (std::abs(v - vr) > symmetry_tol * std::max(1.0, scale))
      throw validation_error("state_from_tensor: tensor is not symmetric");
    if (word == rep && v != cplx(0.0)) {
      Occ n = occ_of_word(T.modes, word);
      out.accumulate(n, v * multinomial_sqrt(n));
    }
  });
  return out;
}

void write_state(std::ostream& os, const FockState& s) {
  os << "germflow-fockstate v1\n";
  os << "modes " << s.trunc().modes << " nmax " << s.trunc().nmax
     << " lost2 ";
  {
    std::ostringstream tmp;
    tmp.precision(16);
    tmp << std::scientific << s.lost2();
    os << tmp.str() << "\n";
  }
  os.precision(16);
  os << std::scientific;
  for (const auto& [n, a] : s.amplitudes()) {
    for (int v : n) os << v << ' ';
    os << a.real() << ' ' << a.imag() << '\n';
  }
}

FockState read_state(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "germflow-fockstate v1")
    throw validation_error("read_state: unknown header: " + header);
  std::string kw1, kw2, kw3;
  TruncationSpec t;
  double lost2 = 0.0;
  is >> kw1 >> t.modes >> kw2 >> t.nmax >> kw3 >> lost2;
  if (kw1 != "modes" || kw2 != "nmax" || kw3 != "lost2")
    throw validation_error("read_state: malformed size line");
  FockState s(t);
  s.add_lost2(lost2);
  Occ n(t.modes, 0);
  double re = 0.0, im = 0.0;
  while (true) {
    for (int i = 0; i < t.modes; ++i)
      if (!(is >> n[i])) return s;
    if (!(is >> re >> im)) throw validation_error("read_state: truncated record");
    s.accumulate(n, cplx(re, im));
  }
}

}  // namespace germflow
