#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "germflow/scenario.hpp"

namespace fs = std::filesystem;
using namespace germflow;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CommonArgs {
  std::string scenario_path;
  std::string outdir = ".";
  int grid_scale = 1;
  bool deterministic = false;
  std::string tol_overrides;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--scenario", a.scenario_path, "scenario config file (JSON)")
      ->required();
  cmd->add_option("--out", a.outdir, "output directory");
  cmd->add_option("--grid-scale", a.grid_scale,
                  "multiply the quadrature resolution by this factor");
  cmd->add_flag("--deterministic", a.deterministic,
                "single-writer, fixed-order reductions (always on; recorded in output)");
  cmd->add_option("--tol-overrides", a.tol_overrides,
                  "comma list key=val; keys: quantization, quad, drift, floor");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw validation_error("cannot write '" + p.string() + "'");
  out << text;
}

void write_json_file(const fs::path& p, const json& j) {
  write_text(p, j.dump(2) + "\n");
}

void write_failure(const fs::path& outdir, const std::string& code,
                   const std::string& message) {
  json f{{"schema", "germflow.failure/1"}, {"code", code}, {"message", message}};
  std::error_code ec;
  fs::create_directories(outdir, ec);
  write_json_file(outdir / "failure.json", f);
}

Scenario prepare(const CommonArgs& a) {
  Scenario s = load_scenario(a.scenario_path);
  if (!a.tol_overrides.empty()) apply_tol_overrides(s, a.tol_overrides);
  if (a.grid_scale < 1) throw validation_error("--grid-scale must be >= 1");
  s.quad.tau_pts *= a.grid_scale;
  return s;
}

json base_summary(const char* schema, const Scenario& s, const CommonArgs& a) {
  return json{{"schema", schema}, {"name", s.name}, {"deterministic", a.deterministic}};
}

int cmd_validate(const CommonArgs& a) {
  Scenario s = prepare(a);
  ValidationResult v = run_validate(s);
  json out = base_summary("germflow.validate/1", s, a);
  out["manifold"] = {{"isotropy_defect", v.manifold.isotropy_defect},
                     {"gram_min_eig", v.manifold.gram_min_eig},
                     {"gram_imag", v.manifold.gram_imag},
                     {"analytic", v.manifold.analytic}};
  out["germ"] = {{"tangent_defect", v.germ.tangent_defect},
                 {"symmetry_defect", v.germ.symmetry_defect},
                 {"normalization_defect", v.germ.normalization_defect},
                 {"gmin", v.germ.gmin},
                 {"monodromy_unitarity", v.germ.monodromy_unitarity},
                 {"monodromy_consistency", v.germ.monodromy_consistency},
                 {"analytic", v.germ.analytic}};
  out["quantization_defects"] = v.quantization;
  out["ok"] = v.ok;
  write_json_file(fs::path(a.outdir) / "validate.json", out);
  if (!v.ok) {
    write_failure(a.outdir, "tolerance", "validation defects exceed tolerances");
    return 1;
  }
  return 0;
}

int cmd_assemble(const CommonArgs& a) {
  Scenario s = prepare(a);
  json out = base_summary("germflow.assemble/1", s, a);
  json entries = json::array();
  for (std::size_t i = 0; i < s.eps.size(); ++i) {
    AssembledVector av = assemble(scenario_assembly(s, s.eps[i]), s.trunc);
    std::string fname = "assemble_state_" + std::to_string(i) + ".txt";
    std::ofstream st(fs::path(a.outdir) / fname, std::ios::binary);
    write_state(st, av.state);
    entries.push_back({{"eps", av.eps},
                       {"tau_pts", av.tau_pts},
                       {"quad_error", av.quad_error},
                       {"truncation_loss", av.truncation_loss},
                       {"particle_number", av.particle_number},
                       {"norm", av.state.norm()},
                       {"state_file", fname}});
  }
  out["entries"] = entries;
  write_json_file(fs::path(a.outdir) / "assemble.json", out);
  return 0;
}

int cmd_evolve(const CommonArgs& a) {
  Scenario s = prepare(a);
  std::vector<EvolveRow> rows = run_evolve(s);
  std::string csv = "t";
  for (int j = 0; j < s.trunc.modes; ++j)
    csv += ",phi" + std::to_string(j) + "_re,phi" + std::to_string(j) + "_im";
  csv +=
      ",defect_normalization,defect_symmetry,defect_normalization_rev,"
      "defect_symmetry_rev,action_re,action_im,transport_re,transport_im\n";
  double worst = 0.0;
  for (const EvolveRow& r : rows) {
    csv += fmt(r.t);
    for (int j = 0; j < s.trunc.modes; ++j)
      csv += "," + fmt(r.phi(j).real()) + "," + fmt(r.phi(j).imag());
    for (double d : r.defects) {
      csv += "," + fmt(d);
      worst = std::max(worst, d);
    }
    csv += "," + fmt(r.action.real()) + "," + fmt(r.action.imag());
    csv += "," + fmt(r.transport.real()) + "," + fmt(r.transport.imag());
    csv += "\n";
  }
  write_text(fs::path(a.outdir) / "evolve.csv", csv);
  json out = base_summary("germflow.evolve/1", s, a);
  out["rows"] = rows.size();
  out["max_defect"] = worst;
  out["drift_tol"] = s.drift_tol;
  out["ok"] = worst <= s.drift_tol;
  write_json_file(fs::path(a.outdir) / "evolve.json", out);
  if (worst > s.drift_tol) {
    write_failure(a.outdir, "tolerance", "canonical defect above drift tolerance");
    return 1;
  }
  return 0;
}

int cmd_residual_scan(const CommonArgs& a) {
  Scenario s = prepare(a);
  ResidualReport rep = run_residual_scan(s);
  std::string csv = "eps,t,r,norm\n";
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    for (std::size_t j = 0; j < rep.times.size(); ++j)
      csv += fmt(rep.eps[i]) + "," + fmt(rep.times[j]) + "," + fmt(rep.r[i][j]) +
             "," + fmt(rep.norm[i][j]) + "\n";
  write_text(fs::path(a.outdir) / "residual_scan.csv", csv);

  bool floor_clean = true;
  for (double r : rep.r_max) floor_clean = floor_clean && r <= rep.floor;
  bool norms_ok = rep.norm_ratio < 2.0;
  bool pass = norms_ok && (floor_clean || (rep.slope_fitted && rep.slope >= 0.4));

  json out = base_summary("germflow.residual-scan/1", s, a);
  out["slope_fitted"] = rep.slope_fitted;
  out["slope"] = rep.slope_fitted ? json(rep.slope) : json();
  out["fit_residual"] = rep.slope_fitted ? json(rep.fit_residual) : json();
  out["floor"] = rep.floor;
  out["floor_clean"] = floor_clean;
  out["norm_ratio"] = rep.norm_ratio;
  out["r_max"] = rep.r_max;
  out["eps"] = rep.eps;
  out["pass"] = pass;
  write_json_file(fs::path(a.outdir) / "residual_scan.json", out);
  if (!pass) {
    write_failure(a.outdir, "tolerance", "residual scan criteria not met");
    return 1;
  }
  return 0;
}

int cmd_stationary(const CommonArgs& a) {
  Scenario s = prepare(a);
  std::vector<StationaryRow> rows = run_stationary(s, true);
  std::string csv = "eps,rho4,rho5,e4,e5,ediff,residual,norm\n";
  for (const StationaryRow& r : rows)
    csv += fmt(r.eps) + "," + fmt(r.rho4) + "," + fmt(r.rho5) + "," + fmt(r.e4) +
           "," + fmt(r.e5) + "," + fmt(r.ediff) + "," + fmt(r.residual) + "," +
           fmt(r.norm) + "\n";
  write_text(fs::path(a.outdir) / "stationary.csv", csv);

  std::vector<StationaryRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const StationaryRow& x, const StationaryRow& y) { return x.eps > y.eps; });
  bool resid_dec = true;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    resid_dec = resid_dec && sorted[i].residual <= sorted[i - 1].residual;
  json out = base_summary("germflow.stationary/1", s, a);
  bool slope_ok = true;
  if (rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const StationaryRow& r : rows) {
      xs.push_back(r.eps);
      ys.push_back(r.ediff);
    }
    double fit_res = 0.0;
    double slope = fit_loglog_slope(xs, ys, &fit_res);
    out["ediff_slope"] = slope;
    out["ediff_fit_residual"] = fit_res;
    slope_ok = std::abs(slope - 1.0) <= 0.2;
  }
  out["residual_decreasing"] = resid_dec;
  bool pass = slope_ok && resid_dec;
  out["pass"] = pass;
  write_json_file(fs::path(a.outdir) / "stationary.json", out);
  if (!pass) {
    write_failure(a.outdir, "tolerance", "stationary energy criteria not met");
    return 1;
  }
  return 0;
}

int cmd_example2(const CommonArgs& a) {
  Scenario s = prepare(a);
  Example2Result r = run_example2(s);
  std::string csv = "occupation,assembled_re,assembled_im,closed_re,closed_im,abs_dev\n";
  TruncationSpec sect{s.trunc.modes, r.N};
  for (const Occ& n : enumerate_basis(sect)) {
    if (occ_total(n) != r.N) continue;
    std::vector<int> word;
    for (int j = 0; j < s.trunc.modes; ++j)
      for (int c = 0; c < n[j]; ++c) word.push_back(j);
    cplx va = r.assembled.at(word);
    cplx vc = r.scale * r.closed.at(word);
    std::string occ;
    for (int j = 0; j < s.trunc.modes; ++j) {
      if (j) occ += " ";
      occ += std::to_string(n[j]);
    }
    csv += occ + "," + fmt(va.real()) + "," + fmt(va.imag()) + "," + fmt(vc.real()) +
           "," + fmt(vc.imag()) + "," + fmt(std::abs(va - vc)) + "\n";
  }
  write_text(fs::path(a.outdir) / "example2.csv", csv);

  bool pass = r.max_rel_dev <= 1e-6 &&
              r.off_sector <= std::max(r.quad_error, 1e-12);
  json out = base_summary("germflow.example2/1", s, a);
  out["N"] = r.N;
  out["eps"] = r.eps;
  out["tau_pts"] = r.tau_pts;
  out["quad_error"] = r.quad_error;
  out["off_sector"] = r.off_sector;
  out["scale"] = {r.scale.real(), r.scale.imag()};
  out["max_rel_dev"] = r.max_rel_dev;
  out["pass"] = pass;
  write_json_file(fs::path(a.outdir) / "example2.json", out);
  if (!pass) {
    write_failure(a.outdir, "tolerance", "closed-form sector comparison failed");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isotropic-manifold semiclassics in truncated Fock space"};
  app.require_subcommand(1);

  CommonArgs args[6];
  CLI::App* sub[6];
  const char* names[6] = {"validate",      "assemble",   "evolve",
                          "residual-scan", "stationary", "example2"};
  const char* descs[6] = {
      "check chart, germ and quantization defects",
      "build the quadrature state for every eps and serialize it",
      "integrate the classical flow and emit the trajectory table",
      "residual of the scaled Schroedinger equation over the eps ladder",
      "quantized stationary energies, both radius conventions",
      "assembled circle sector against the closed-form tensor"};
  for (int i = 0; i < 6; ++i) {
    sub[i] = app.add_subcommand(names[i], descs[i]);
    add_common(sub[i], args[i]);
  }

  CLI11_PARSE(app, argc, argv);

  int which = -1;
  for (int i = 0; i < 6; ++i)
    if (sub[i]->parsed()) which = i;
  if (which < 0) {
    std::cerr << app.help() << "\n";
    return 2;
  }
  const CommonArgs& a = args[which];

  std::error_code ec;
  fs::create_directories(a.outdir, ec);

  Scenario probe;
  try {
    probe = load_scenario(a.scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_failure(a.outdir, "config", e.what());
    return 2;
  }
  (void)probe;

  try {
    switch (which) {
      case 0: return cmd_validate(a);
      case 1: return cmd_assemble(a);
      case 2: return cmd_evolve(a);
      case 3: return cmd_residual_scan(a);
      case 4: return cmd_stationary(a);
      case 5: return cmd_example2(a);
    }
  } catch (const quantization_error& e) {
    std::cerr << "quantization failure: " << e.what() << "\n";
    write_failure(a.outdir, "quantization", e.what());
    return 1;
  } catch (const validation_error& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    write_failure(a.outdir, "validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    write_failure(a.outdir, "internal", e.what());
    return 3;
  }
  return 2;
}
