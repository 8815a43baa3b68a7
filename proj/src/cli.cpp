#include "nmkl/cli.hpp"

#include "nmkl/checkpoint.hpp"
#include "nmkl/config.hpp"
#include "nmkl/landau.hpp"
#include "nmkl/spectral.hpp"
#include "nmkl/study.hpp"
#include "nmkl/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

namespace nmkl {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string out;
  std::string epsilon;
  bool quick = false;
  bool seedless = true;
};

RunConfig resolve(const Common& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.epsilon.empty()) c.epsilon = parse_epsilon_list(o.epsilon);
  c.seedless = o.seedless;
  if (o.quick) {
    // Smoke-sized run: coarse grid and a ten-step horizon.
    c.N = 8;
    c.t_final = 10 * c.dt;
    c.delta1 = std::max(c.delta1, c.t_final);
    c.checkpoints = std::min(c.checkpoints, 2);
  }
  validate(c);
  return c;
}

double relative_mass_drift(const Trajectory& tr) {
  const double m0 = conserved_moments(tr.samples.front().u).mass;
  double worst = 0.0;
  for (const auto& s : tr.samples) worst = std::max(worst, std::abs(conserved_moments(s.u).mass - m0) / m0);
  return worst;
}

int report_trajectory(const Trajectory& tr, const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path dir(c.output_dir);
  write_file_atomic((dir / (tr.name + ".csv")).string(), trajectory_csv(tr, c.tol_neg));
  const double drift = relative_mass_drift(tr);
  out << tr.name << ": " << tr.samples.size() - 1 << " checkpoints, relative mass drift " << drift
      << ", runtime " << tr.runtime_s << " s\n";
  for (const auto& w : tr.warnings) out << "  warning: " << w << "\n";
  int code = 0;
  if (tr.aborted) {
    err << tr.name << ": aborted: " << tr.error << "\n";
    code = 1;
  }
  if (drift > 1e-8) {
    err << tr.name << ": mass drift " << drift << " above 1e-8\n";
    code = 1;
  }
  return code;
}

int cmd_verify(const Common& o, std::ostream& out) {
  const auto results = run_verify_suite({o.quick, 7}, nullptr);
  out << format_table(results);
  const bool ok = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
  out << (ok ? "all checks passed\n" : "some checks failed\n");
  return ok ? 0 : 1;
}

int cmd_landau(const Common& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(o);
  const Trajectory tr = run_landau_trajectory(c, (fs::path(c.output_dir) / "checkpoints").string());
  return report_trajectory(tr, c, out, err);
}

int cmd_nonmarkov(const Common& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(o);
  int code = 0;
  for (double eps : c.epsilon) {
    const Trajectory tr = run_nonmarkov_trajectory(c, eps, (fs::path(c.output_dir) / "checkpoints").string());
    code = std::max(code, report_trajectory(tr, c, out, err));
  }
  return code;
}

int cmd_converge(const Common& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(o);
  StudyOptions so;
  so.checkpoint_dir = (fs::path(c.output_dir) / "checkpoints").string();
  const ConvergenceReport rep = run_convergence_study(c, so);
  write_file_atomic((fs::path(c.output_dir) / "convergence.csv").string(), csv_text(rep));
  emit_plot_data(rep, (fs::path(c.output_dir) / "plot").string());

  out << "landau reference: " << rep.landau_runtime_s << " s\n";
  const auto md = rep.max_distance();
  int code = 0;
  for (std::size_t e = 0; e < rep.runs.size(); ++e) {
    const EpsilonRun& r = rep.runs[e];
    out << "eps = " << r.epsilon << ": max moment distance at t = " << rep.times.back() << " is "
        << md[e].back() << ", runtime " << r.runtime_s << " s\n";
    for (const auto& w : r.warnings) out << "  warning: " << w << "\n";
    if (r.aborted) {
      err << "eps = " << r.epsilon << ": aborted: " << r.error << "\n";
      code = 1;
    }
  }
  for (const auto& f : rep.flags) {
    out << "flag: " << f << "\n";
    if (f.find("mass distance") != std::string::npos) code = 1;
  }
  out << "wrote " << (fs::path(c.output_dir) / "convergence.csv").string() << "\n";
  return code;
}

int cmd_diagnostics(const Common& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(o);
  const fs::path dir = fs::path(c.output_dir) / "checkpoints";
  if (!fs::is_directory(dir)) {
    err << "diagnostics: no stored runs under " << dir.string() << "\n";
    return 1;
  }
  std::map<std::string, std::map<std::string, fs::path>> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const auto us = name.rfind('_');
    if (entry.path().extension() != ".nmkl" || us == std::string::npos) continue;
    runs[name.substr(0, us)][name] = entry.path();
  }
  if (runs.empty()) {
    err << "diagnostics: no checkpoints in " << dir.string() << "\n";
    return 1;
  }
  std::ostringstream rep;
  int code = 0;
  const std::vector<Cplx> zs{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 2.0}};
  for (const auto& [run, files] : runs) {
    std::vector<Checkpoint> cps;
    for (const auto& [_, p] : files) cps.push_back(load_checkpoint(p.string()));
    rep << "run " << run << "\n";
    for (const auto& cp : cps) {
      const Moments m = conserved_moments(cp.u);
      rep << "  t = " << cp.t << "  mass = " << m.mass << "  energy = " << m.energy
          << "  H2_lambda = " << weighted_sobolev_norm(cp.u, WeightKind::lambda, 2) << "\n";
    }
    Field last = cps.back().u;
    const double mx = last.values().abs().maxCoeff();
    last.values() = last.values().max(0.0);
    const CoercivityReport co = coercivity_check(last, zs, 25, 1);
    rep << "  coercivity min eigenvalue (final state, negative part clipped at "
        << (mx > 0 ? -cps.back().u.values().minCoeff() / mx : 0.0) << " relative) = " << co.min_eigenvalue << "\n";
    if (co.min_eigenvalue < -1e-10) code = 1;

    // Dissipation of the stored history under the smooth window kappa(2t/T).
    bool uniform = cps.size() >= 3;
    const double dts = uniform ? cps[1].t - cps[0].t : 0.0;
    for (std::size_t k = 1; uniform && k < cps.size(); ++k)
      uniform = std::abs(cps[k].t - cps[k - 1].t - dts) <= 1e-9 * std::max(1.0, cps[k].t);
    if (uniform && dts > 0.0) {
      const double T = cps.back().t;
      FieldHistory h{dts, {}};
      for (const auto& cp : cps) {
        Field f = cp.u;
        f.values() *= kappa(2.0 * cp.t / T);
        h.frames.push_back(std::move(f));
      }
      try {
        const DissipationValue d = dissipation(h, 0, c.epsilon.front(), c.A, c.gamma, OmegaWindow{200.0, 50, 16, 1.0});
        rep << "  windowed dissipation D^0 (eps = " << c.epsilon.front() << ") = " << d.value << " (tail " << d.tail
            << ")\n";
        if (!(d.value >= 0.0)) code = 1;
      } catch (const std::exception& e) {
        rep << "  windowed dissipation unavailable: " << e.what() << "\n";
      }
    }
  }
  write_file_atomic((fs::path(c.output_dir) / "diagnostics.txt").string(), rep.str());
  out << rep.str();
  return code;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nmkl: non-Markovian Landau limit solver and checks"};
  app.require_subcommand(1);
  Common o;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "key = value configuration file");
    s->add_option("--out", o.out, "output directory (overrides output.dir)");
    s->add_option("--epsilon", o.epsilon, "comma-separated epsilon list override");
    s->add_flag("--quick", o.quick, "reduced sample counts or a smoke-sized run");
    s->add_flag("--seedless,!--seeded", o.seedless, "deterministic sampling (default)");
  };
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"verify", "landau", "nonmarkov", "converge", "diagnostics"}) {
    static const std::map<std::string, std::string> help = {
        {"verify", "kernel identity, memory kernel and coercivity checks"},
        {"landau", "single Landau trajectory"},
        {"nonmarkov", "non-Markovian trajectories for each epsilon"},
        {"converge", "epsilon sweep against the Landau reference"},
        {"diagnostics", "norms, coercivity and dissipation of stored runs"}};
    subs[name] = app.add_subcommand(name, help.at(name));
    add_common(subs[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (subs["verify"]->parsed()) return cmd_verify(o, out);
    if (subs["landau"]->parsed()) return cmd_landau(o, out, err);
    if (subs["nonmarkov"]->parsed()) return cmd_nonmarkov(o, out, err);
    if (subs["converge"]->parsed()) return cmd_converge(o, out, err);
    if (subs["diagnostics"]->parsed()) return cmd_diagnostics(o, out, err);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace nmkl
