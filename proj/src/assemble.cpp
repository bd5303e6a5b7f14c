#include "germflow/assemble.hpp"

#include <cmath>
#include <string>

namespace germflow {

namespace {

// transverse Gaussian matrix and metric factors from explicit frame matrices
// (the tangent block is read off the first k columns of F)
struct NodeGeometry {
  MatC M;
  double density = 1.0;        // sqrt det Re(T+T)
  double sqrt_abs_det_g = 1.0; // |det G|^{1/2} = (det G+G)^{1/4}
  double asym = 0.0;
};

NodeGeometry node_geometry(const MatC& F, const MatC& G, int k) {
  NodeGeometry out;
  MatC M = F * G.partialPivLu().inverse();
  if (k > 0) {
    MatC T = F.leftCols(k);
    MatC gram = T.adjoint() * T;
    out.density = std::sqrt(std::abs(gram.real().determinant()));
    MatR W = gram.real().inverse();
    M -= T * W.cast<cplx>() * T.transpose();
  }
  out.asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  out.M = 0.5 * (M + M.transpose());
  out.sqrt_abs_det_g = std::sqrt(std::abs(G.partialPivLu().determinant()));
  return out;
}

void poly_axpy(CreationPoly& acc, cplx s, const CreationPoly& p) {
  for (const auto& [n, c] : p.terms) acc.terms[n] += s * c;
}

// product of germ raising operators over the listed transverse columns,
// reduced to the shifted-creation polynomial ring for a Gaussian with
// matrix M:  raise column c acts as  p -> ((conj G - M conj F)_c . X) p
//                                          - conj(F)_c . grad p
CreationPoly raise_product(const MatC& F, const MatC& G, const MatC& M, int k,
                           const std::vector<int>& alphas, cplx coeff) {
  const int D = static_cast<int>(F.rows());
  MatC V = G.conjugate() - M * F.conjugate();
  CreationPoly p = CreationPoly::one(D);
  p *= coeff;
  for (int a : alphas) {
    if (a < 0 || a >= D - k)
      throw validation_error("assemble: transverse column index out of range");
    p = ladder_on_poly(p, V.col(k + a), -F.col(k + a).conjugate());
  }
  return p;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

void check_spec(const AssemblySpec& spec) {
  const int D = spec.manifold.modes;
  const int k = spec.manifold.k;
  if (spec.eps <= 0.0) throw validation_error("assemble: eps must be positive");
  if (spec.frame.modes != D || spec.frame.k != k)
    throw validation_error("assemble: frame does not match the chart");
  if (!spec.nu.empty() && static_cast<int>(spec.nu.size()) != D - k)
    throw validation_error("assemble: nu must list one power per transverse column");
  for (int v : spec.nu)
    if (v < 0) throw validation_error("assemble: negative excitation power");
  bool excited = false;
  for (int v : spec.nu) excited |= v > 0;
  if (!spec.families.empty() && excited)
    throw validation_error("assemble: families and nonzero nu are mutually exclusive");
  for (const auto& e : spec.families)
    if (static_cast<int>(e.alphas.size()) > 4)
      throw validation_error("assemble: family excitation order is capped at 4");
}

void check_quantization(const AssemblySpec& spec) {
  const auto& m = spec.manifold;
  const int k = m.k;
  const int D = m.modes;
  for (int axis = 0; axis < k; ++axis) {
    std::vector<double> gamma(D - k, 0.0);
    if (axis < static_cast<int>(spec.frame.loop_gamma.size())) {
      const auto& full = spec.frame.loop_gamma[axis];
      if (static_cast<int>(full.size()) != D)
        throw validation_error("assemble: loop_gamma must list one phase per column");
      for (int a = 0; a < D - k; ++a) gamma[a] = full[k + a];
    }
    if (!spec.families.empty()) {
      // sums of excitation families are single-valued only when every
      // transverse monodromy phase vanishes (mod 2 pi)
      for (int a = 0; a < D - k; ++a) {
        double frac = dist_to_integer_lattice(gamma[a] / (2.0 * kPi), 0.0);
        if (frac * 2.0 * kPi > spec.quantization_tol)
          throw validation_error(
              "assemble: excitation families need vanishing monodromy phases, "
              "column " + std::to_string(a) + " has gamma = " + std::to_string(gamma[a]));
      }
    }
    std::vector<int> nu = spec.nu.empty() ? std::vector<int>(D - k, 0) : spec.nu;
    double defect = quantization_defect(m, spec.eps, axis, gamma, nu);
    if (defect > spec.quantization_tol)
      throw quantization_error("quantization defect " + std::to_string(defect) +
                               " on axis " + std::to_string(axis) +
                               " exceeds tolerance " +
                               std::to_string(spec.quantization_tol));
  }
}

std::size_t locate_origin(const TauGrid& grid, const std::vector<double>& tau0,
                          const std::vector<double>& period) {
  if (tau0.empty()) return 0;
  if (tau0.size() != static_cast<std::size_t>(grid.k))
    throw validation_error("assemble: tau0 has wrong dimension");
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    bool hit = true;
    for (int a = 0; a < grid.k; ++a)
      hit &= std::abs(grid.nodes[i][a] - tau0[a]) <= 1e-9 * period[a];
    if (hit) return i;
  }
  throw validation_error("assemble: tau0 must lie on the quadrature grid");
}

AssembledVector assemble_impl(const AssemblySpec& spec, const HamiltonianCoeffs* h,
                              double time, int steps, const TruncationSpec& t,
                              int pts) {
  check_spec(spec);
  const auto& m = spec.manifold;
  const int D = m.modes;
  const int k = m.k;
  if (t.modes != D) throw validation_error("assemble: truncation mode mismatch");
  check_quantization(spec);

  TauGrid grid = make_tau_grid(m, std::max(pts, k > 0 ? 2 : 1));
  std::size_t i0 = locate_origin(grid, spec.tau0, m.period);
  std::vector<double> tau0 = grid.nodes[i0];
  cplx g0 = origin_constant(m.phi_at(tau0));

  const double rt = std::sqrt(spec.eps);
  const double measure = grid.cell / (std::pow(2.0 * kPi, 0.5 * k) *
                                      std::pow(spec.eps, 0.25 * k));

  FockState acc(t);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const auto& tau = grid.nodes[i];
    VecC phi = m.phi_at(tau);
    MatC F = spec.frame.F_at(tau);
    MatC G = spec.frame.G_at(tau);
    cplx log_num = g0 + grid.phase[i] - grid.phase[i0];
    cplx transport = 1.0;
    if (h != nullptr) {
      FlowState st = make_flow_state(phi, F, G);
      advance(*h, st, time, steps);
      phi = st.phi;
      MatC Ft = frame_F(st), Gt = frame_G(st);
      F.swap(Ft);
      G.swap(Gt);
      log_num += st.s_act;
      transport = transport_factor(st);
    }
    NodeGeometry ng = node_geometry(F, G, k);
    if (ng.asym > 1e-6)
      throw validation_error("assemble: transverse matrix asymmetry " +
                             std::to_string(ng.asym));
    cplx weight = transport * measure * ng.density / ng.sqrt_abs_det_g;

    // excitation content as a polynomial in the shifted creation symbols;
    // the scalar amplitude f is the order-zero coefficient in both variants
    CreationPoly poly = CreationPoly::one(D);
    poly *= spec.f ? spec.f(tau) : cplx(1.0);
    if (!spec.families.empty()) {
      for (const auto& e : spec.families) {
        cplx c = e.coeff(tau) / std::sqrt(factorial(static_cast<int>(e.alphas.size())));
        poly_axpy(poly, 1.0, raise_product(F, G, ng.M, k, e.alphas, c));
      }
    } else if (!spec.nu.empty()) {
      MatC V = G.conjugate() - ng.M * F.conjugate();
      for (int a = 0; a < static_cast<int>(spec.nu.size()); ++a)
        for (int rep = 0; rep < spec.nu[a]; ++rep)
          poly = ladder_on_poly(poly, V.col(k + a), -F.col(k + a).conjugate());
    }
    if (poly.terms.empty()) continue;

    GaussianData gd{spec.eps, phi, ng.M, log_num / spec.eps};
    FockState base = build_gaussian(gd, t, GaussianMode::kRecursion);
    FockState node = apply_creation_poly(poly, phi.conjugate() / rt, base);
    acc.axpy(weight, node);
  }

  AssembledVector out;
  out.state = std::move(acc);
  out.eps = spec.eps;
  out.tau_pts = k > 0 ? grid.pts[0] : 1;
  out.quad_error = 0.0;
  out.truncation_loss = out.state.lost2();
  out.particle_number = m.phi_at(tau0).squaredNorm() / spec.eps;
  return out;
}

AssembledVector assemble_refined(const AssemblySpec& spec, const HamiltonianCoeffs* h,
                                 double time, int steps, const TruncationSpec& t) {
  AssembledVector cur = assemble_impl(spec, h, time, steps, t, spec.tau_pts);
  if (spec.manifold.k == 0 || spec.max_doublings <= 0) return cur;
  int pts = spec.tau_pts;
  for (int d = 0; d < spec.max_doublings; ++d) {
    pts *= 2;
    AssembledVector next = assemble_impl(spec, h, time, steps, t, pts);
    FockState diff = next.state;
    diff.axpy(-1.0, cur.state);
    double err = diff.norm() / std::max(1.0, next.state.norm());
    cur = std::move(next);
    cur.quad_error = err;
    if (err <= spec.quad_tol) return cur;
  }
  throw validation_error("assemble: quadrature error " +
                         std::to_string(cur.quad_error) +
                         " did not reach tolerance " + std::to_string(spec.quad_tol) +
                         " within the refinement budget");
}

}  // namespace

AssembledVector assemble_fixed(const AssemblySpec& spec, const TruncationSpec& t,
                               int pts) {
  return assemble_impl(spec, nullptr, 0.0, 0, t, pts);
}

AssembledVector assemble(const AssemblySpec& spec, const TruncationSpec& t) {
  return assemble_refined(spec, nullptr, 0.0, 0, t);
}

AssembledVector assemble_evolved_fixed(const AssemblySpec& spec,
                                       const HamiltonianCoeffs& h, double time,
                                       int steps, const TruncationSpec& t,
                                       int pts) {
  return assemble_impl(spec, &h, time, steps, t, pts);
}

AssembledVector assemble_evolved(const AssemblySpec& spec,
                                 const HamiltonianCoeffs& h, double time,
                                 int steps, const TruncationSpec& t) {
  return assemble_refined(spec, &h, time, steps, t);
}

SectorTensor circle_sector_tensor(const VecC& phi_t, const MatC& Mt, int N,
                                  cplx scale, double eps, int max_order) {
  if (N < 0) throw validation_error("circle sector: negative order");
  if (N > max_order)
    throw validation_error("circle sector: order above the exact-enumeration cap");
  const int D = static_cast<int>(phi_t.size());
  if (Mt.rows() != D || Mt.cols() != D)
    throw validation_error("circle sector: matrix size mismatch");
  TruncationSpec t{D, N};
  FockState g = gaussian_from_exponent(phi_t, eps * Mt, 0.0, t, GaussianMode::kOracle);
  SectorTensor T = tensor_from_sector(g.sector_project(N), N);
  cplx s = scale * std::sqrt(factorial(N));
  for (auto& c : T.c) c *= s;
  return T;
}

}  // namespace germflow
