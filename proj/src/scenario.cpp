#include "germflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace germflow {

namespace {

VecC parse_cvec(const json& j) {
  if (!j.is_array()) throw validation_error("scenario: expected an array of [re, im]");
  VecC v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (!e.is_array() || e.size() != 2)
      throw validation_error("scenario: complex entries are [re, im] pairs");
    v(i) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

MatC parse_cmat(const json& j) {
  if (!j.is_array() || j.empty())
    throw validation_error("scenario: expected a nonempty array of rows");
  const std::size_t rows = j.size();
  VecC first = parse_cvec(j[0]);
  MatC m(rows, first.size());
  m.row(0) = first.transpose();
  for (std::size_t r = 1; r < rows; ++r) {
    VecC row = parse_cvec(j[r]);
    if (row.size() != m.cols())
      throw validation_error("scenario: ragged complex matrix");
    m.row(r) = row.transpose();
  }
  return m;
}

HamiltonianCoeffs parse_hamiltonian(const json& j, int modes) {
  if (!j.contains("family"))
    throw validation_error("scenario: hamiltonian needs a family name");
  std::string family = j.at("family").get<std::string>();
  if (family == "harmonic") {
    std::vector<double> omega = j.at("omega").get<std::vector<double>>();
    if (static_cast<int>(omega.size()) != modes)
      throw validation_error("scenario: omega list does not match the mode count");
    return harmonic_hamiltonian(omega);
  }
  if (family == "quartic_pair")
    return quartic_pair_hamiltonian(modes, j.at("T").get<double>(),
                                    j.at("V").get<double>());
  if (family == "number_conserving")
    return number_conserving_hamiltonian(modes, j.at("seed").get<unsigned>());
  if (family == "inline") {
    HamiltonianCoeffs h;
    h.modes = modes;
    for (const json& b : j.at("blocks")) {
      int m = b.at("m").get<int>();
      int n = b.at("n").get<int>();
      SymbolBlock blk = SymbolBlock::zero(modes, m, n);
      VecC c = parse_cvec(b.at("c"));
      if (static_cast<std::size_t>(c.size()) != blk.c.size())
        throw validation_error("scenario: inline block has wrong coefficient count");
      for (Eigen::Index i = 0; i < c.size(); ++i) blk.c[i] = c(i);
      h.blocks[{m, n}] = std::move(blk);
    }
    double defect = hermiticity_defect(h);
    symmetrize(h);
    if (defect > 1e-8)
      throw validation_error("scenario: inline hamiltonian is not hermitian, defect " +
                             std::to_string(defect));
    return h;
  }
  throw validation_error("scenario: unknown hamiltonian family '" + family + "'");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("scenario: config does not parse: ") + e.what());
  }

  Scenario s;
  s.raw = j;
  s.name = j.at("name").get<std::string>();
  s.trunc.modes = j.at("truncation").at("modes").get<int>();
  s.trunc.nmax = j.at("truncation").at("nmax").get<int>();
  s.trunc.check();

  s.h = parse_hamiltonian(j.at("hamiltonian"), s.trunc.modes);

  const json& m = j.at("manifold");
  s.manifold_family = m.at("family").get<std::string>();
  s.phi = parse_cvec(m.at("phi"));
  if (static_cast<int>(s.phi.size()) != s.trunc.modes)
    throw validation_error("scenario: manifold phi does not match the mode count");
  if (s.manifold_family == "torus2")
    s.axis_of_mode = m.at("axis_of_mode").get<std::vector<int>>();
  else if (s.manifold_family != "point" && s.manifold_family != "circle")
    throw validation_error("scenario: unknown manifold family '" + s.manifold_family + "'");

  if (j.contains("germ")) {
    const json& g = j.at("germ");
    s.germ_init = g.value("init", std::string("vacuum"));
    s.squeeze = g.value("squeeze", 0.0);
    if (g.contains("msym")) s.msym = parse_cmat(g.at("msym"));
    if (g.contains("F")) s.F0 = parse_cmat(g.at("F"));
    if (g.contains("G")) s.G0 = parse_cmat(g.at("G"));
  } else if (s.manifold_family != "point") {
    s.germ_init = "base";
  }

  s.eps = j.at("eps").get<std::vector<double>>();
  if (s.eps.empty()) throw validation_error("scenario: eps list is empty");
  std::set<double> uniq(s.eps.begin(), s.eps.end());
  if (uniq.size() != s.eps.size())
    throw validation_error("scenario: eps values must be distinct");
  for (double e : s.eps)
    if (e <= 0.0) throw validation_error("scenario: eps values must be positive");

  if (j.contains("times")) s.times = j.at("times").get<std::vector<double>>();
  s.steps_per_unit = j.value("steps_per_unit_time", 2000);
  if (s.steps_per_unit < 1)
    throw validation_error("scenario: steps_per_unit_time must be >= 1");

  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    s.quad.tau_pts = q.value("tau_pts", 64);
    s.quad.max_doublings = q.value("max_doublings", 3);
    s.quad.quad_tol = q.value("quad_tol", 1e-8);
  }
  if (j.contains("excitations")) s.nu = j.at("excitations").get<std::vector<int>>();
  s.quanta = j.value("quanta", 0);

  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    s.quantization_tol = t.value("quantization", s.quantization_tol);
    s.drift_tol = t.value("drift", s.drift_tol);
    s.residual_floor = t.value("floor", s.residual_floor);
    s.quad.quad_tol = t.value("quad", s.quad.quad_tol);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("scenario: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& s) { return s.raw.dump(2) + "\n"; }

void apply_tol_overrides(Scenario& s, const std::string& overrides) {
  std::stringstream ss(overrides);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw validation_error("tol override '" + item + "' is not key=value");
    std::string key = item.substr(0, eq);
    double val = std::stod(item.substr(eq + 1));
    if (key == "quantization")
      s.quantization_tol = val;
    else if (key == "quad")
      s.quad.quad_tol = val;
    else if (key == "drift")
      s.drift_tol = val;
    else if (key == "floor")
      s.residual_floor = val;
    else
      throw validation_error("unknown tol override key '" + key + "'");
  }
}

IsotropicManifold scenario_manifold(const Scenario& s) {
  if (s.manifold_family == "point") return point_manifold(s.phi);
  if (s.manifold_family == "circle") return circle_manifold(s.phi);
  return torus2_manifold(s.phi, s.axis_of_mode);
}

GermFrame scenario_frame(const Scenario& s, const IsotropicManifold& m) {
  const int D = s.trunc.modes;
  if (m.k == 0) {
    if (s.germ_init == "vacuum") return vacuum_point_frame(D);
    if (s.germ_init == "squeezed") {
      if (s.msym.rows() > 0) return squeezed_point_frame(s.msym);
      return squeezed_point_frame(std::tanh(s.squeeze) * MatC::Identity(D, D));
    }
    if (s.germ_init == "inline") return point_frame(s.F0, s.G0);
    throw validation_error("scenario: germ init '" + s.germ_init +
                           "' is not valid for a point chart");
  }
  if (s.manifold_family == "circle") {
    if (s.germ_init == "base" || s.germ_init == "vacuum")
      return circle_base_frame(s.phi);
    if (s.germ_init == "squeezed") return squeezed_circle_frame(s.phi, s.squeeze);
    if (s.germ_init == "stationary")
      return stationary_frame(stationary_modes(s.h, s.phi));
    if (s.germ_init == "inline") return circle_frame(s.phi, s.F0, s.G0);
    throw validation_error("scenario: germ init '" + s.germ_init +
                           "' is not valid for a circle chart");
  }
  if (s.germ_init == "base" || s.germ_init == "vacuum")
    return torus2_base_frame(s.phi, s.axis_of_mode);
  throw validation_error("scenario: germ init '" + s.germ_init +
                         "' is not valid for a torus chart");
}

AssemblySpec scenario_assembly(const Scenario& s, double eps) {
  AssemblySpec spec;
  spec.manifold = scenario_manifold(s);
  spec.frame = scenario_frame(s, spec.manifold);
  spec.eps = eps;
  spec.nu = s.nu;
  spec.tau_pts = s.quad.tau_pts;
  spec.max_doublings = s.quad.max_doublings;
  spec.quad_tol = s.quad.quad_tol;
  spec.quantization_tol = s.quantization_tol;
  return spec;
}

std::function<FockState(double)> scenario_time_source(const Scenario& s,
                                                      double eps, int pts) {
  AssemblySpec spec = scenario_assembly(s, eps);
  HamiltonianCoeffs h = s.h;
  TruncationSpec trunc = s.trunc;
  int spu = s.steps_per_unit;
  return [spec, h, trunc, spu, pts](double t) -> FockState {
    if (t == 0.0) return assemble_fixed(spec, trunc, pts).state;
    int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) * spu)));
    return assemble_evolved_fixed(spec, h, t, steps, trunc, pts).state;
  };
}

ValidationResult run_validate(const Scenario& s) {
  ValidationResult out;
  IsotropicManifold m = scenario_manifold(s);
  GermFrame g = scenario_frame(s, m);
  out.manifold = validate_manifold(m);
  out.germ = validate_germ(m, g);
  Tolerances tol;
  bool quant_ok = true;
  for (double e : s.eps) {
    for (int axis = 0; axis < m.k; ++axis) {
      std::vector<double> gamma(m.modes - m.k, 0.0);
      if (axis < static_cast<int>(g.loop_gamma.size()))
        for (int a = 0; a < m.modes - m.k; ++a) gamma[a] = g.loop_gamma[axis][m.k + a];
      std::vector<int> nu =
          s.nu.empty() ? std::vector<int>(m.modes - m.k, 0) : s.nu;
      double d = quantization_defect(m, e, axis, gamma, nu);
      out.quantization.push_back(d);
      quant_ok = quant_ok && d <= s.quantization_tol;
    }
  }
  out.ok = out.manifold.ok(tol) && out.germ.ok(tol) && quant_ok;
  return out;
}

std::vector<EvolveRow> run_evolve(const Scenario& s) {
  if (s.times.empty())
    throw validation_error("evolve: scenario lists no times");
  std::vector<double> times = s.times;
  std::sort(times.begin(), times.end());
  if (times.front() < 0.0)
    throw validation_error("evolve: negative times are not supported here");

  IsotropicManifold m = scenario_manifold(s);
  GermFrame g = scenario_frame(s, m);
  std::vector<double> tau0(m.k, 0.0);
  FlowState st = make_flow_state(m.phi_at(tau0), g.F_at(tau0), g.G_at(tau0));

  std::vector<EvolveRow> rows;
  for (double t : times) {
    if (t > st.t) {
      int steps = std::max(1, static_cast<int>(std::ceil((t - st.t) * s.steps_per_unit)));
      advance(s.h, st, t, steps, s.drift_tol);
    }
    EvolveRow row;
    row.t = st.t;
    row.phi = st.phi;
    row.defects = symplectic_defects(st);
    row.action = st.s_act;
    row.transport = transport_factor(st);
    rows.push_back(std::move(row));
  }
  return rows;
}

ResidualReport run_residual_scan(const Scenario& s) {
  if (s.times.empty())
    throw validation_error("residual scan: scenario lists no times");
  std::map<double, std::function<FockState(double)>> sources;
  for (double e : s.eps) sources[e] = scenario_time_source(s, e, s.quad.tau_pts);
  ScanConfig cfg;
  cfg.eps = s.eps;
  cfg.times = s.times;
  cfg.floor = s.residual_floor;
  return epsilon_scan(s.h, [&sources](double e, double t) { return sources.at(e)(t); },
                      cfg);
}

std::vector<StationaryRow> run_stationary(const Scenario& s, bool with_residual) {
  if (s.manifold_family != "circle")
    throw validation_error("stationary: needs a circle scenario");
  if (s.quanta < 1)
    throw validation_error("stationary: scenario must set quanta >= 1");
  const int D = s.trunc.modes;
  VecC dir = s.phi / s.phi.norm();
  std::vector<int> nu = s.nu.empty() ? std::vector<int>(D - 1, 0) : s.nu;

  std::vector<StationaryRow> rows;
  for (double e : s.eps) {
    QuantizedCircle q4 = quantize_circle(s.h, dir, e, s.quanta, nu, true);
    QuantizedCircle q5 = quantize_circle(s.h, dir, e, s.quanta, nu, false);
    StationaryRow row;
    row.eps = e;
    row.rho4 = q4.rho;
    row.rho5 = q5.rho;
    row.e4 = stationary_energy(s.h, q4.modes.phi, q4.modes.Ft, q4.modes.Gt, e);
    row.e5 = stationary_energy(s.h, q5.modes.phi, q5.modes.Ft, q5.modes.Gt, e,
                               &q5.modes.beta, &nu);
    row.ediff = std::abs(row.e4 - row.e5);
    if (with_residual) {
      AssemblySpec spec;
      spec.manifold = circle_manifold(q4.modes.phi);
      spec.frame = stationary_frame(q4.modes);
      spec.eps = e;
      spec.nu = nu;
      spec.tau_pts = s.quad.tau_pts;
      spec.max_doublings = s.quad.max_doublings;
      spec.quad_tol = s.quad.quad_tol;
      spec.quantization_tol = s.quantization_tol;
      AssembledVector av = assemble(spec, s.trunc);
      double n2 = av.state.norm2();
      if (n2 == 0.0) throw validation_error("stationary: assembled state vanishes");
      FockState res = apply_hamiltonian(s.h, av.state, e);
      res *= 1.0 / e;
      res.axpy(-row.e4, av.state);
      row.residual = res.norm() / std::sqrt(n2);
      row.norm = std::sqrt(n2);
    }
    rows.push_back(row);
  }
  return rows;
}

Example2Result run_example2(const Scenario& s) {
  if (s.manifold_family != "circle")
    throw validation_error("example2: needs a circle scenario");
  Example2Result r;
  r.eps = s.eps.front();
  double rho = s.phi.squaredNorm();
  r.N = s.quanta > 0 ? s.quanta : static_cast<int>(std::llround(rho / r.eps));
  if (r.N < 1 || r.N > s.trunc.nmax)
    throw validation_error("example2: sector outside the truncation");

  AssemblySpec spec = scenario_assembly(s, r.eps);
  spec.nu.clear();
  AssembledVector coarse = assemble_fixed(spec, s.trunc, s.quad.tau_pts);
  AssembledVector fine = assemble_fixed(spec, s.trunc, 2 * s.quad.tau_pts);
  FockState diff = fine.state;
  diff.axpy(-1.0, coarse.state);
  r.quad_error = diff.norm();
  r.tau_pts = coarse.tau_pts;

  FockState sec = coarse.state.sector_project(r.N);
  double off2 = coarse.state.norm2() - sec.norm2();
  r.off_sector = std::sqrt(std::max(0.0, off2));
  r.assembled = tensor_from_sector(sec, r.N);

  MMatrixResult mm = build_M(spec.manifold, spec.frame, std::vector<double>(1, 0.0));
  r.closed = circle_sector_tensor(s.phi, mm.M, r.N, 1.0, r.eps);

  std::size_t imax = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < r.closed.c.size(); ++i)
    if (std::abs(r.closed.c[i]) > best) {
      best = std::abs(r.closed.c[i]);
      imax = i;
    }
  if (best <= 0.0) throw validation_error("example2: closed form vanishes");
  r.scale = r.assembled.c[imax] / r.closed.c[imax];
  double ref = 0.0;
  for (const cplx& v : r.closed.c) ref = std::max(ref, std::abs(r.scale * v));
  double dev = 0.0;
  for (std::size_t i = 0; i < r.closed.c.size(); ++i)
    dev = std::max(dev, std::abs(r.assembled.c[i] - r.scale * r.closed.c[i]));
  r.max_rel_dev = ref > 0.0 ? dev / ref : dev;
  return r;
}

}  // namespace germflow
