#include "nmkl/study.hpp"

#include "nmkl/checkpoint.hpp"
#include "nmkl/landau.hpp"
#include "nmkl/nonmarkov.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>

namespace nmkl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

std::string eps_tag(double eps) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "eps%g", eps);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void save_sample(const std::string& dir, const std::string& name, std::size_t k, const Field& u,
                 double t) {
  if (dir.empty()) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03zu.nmkl", k);
  save_checkpoint(u, t, (std::filesystem::path(dir) / (name + buf)).string());
}

}  // namespace

const std::array<GaussianProbe, 3>& gaussian_probes() {
  static const std::array<GaussianProbe, 3> probes{{
      {Vec3(0.0, 0.0, 0.0), 1.0},
      {Vec3(1.0, 0.0, 0.0), 0.7},
      {Vec3(-0.5, 1.0, 0.5), 1.5},
  }};
  return probes;
}

double MomentDistances::max_moment() const {
  double m = std::max({mass, momentum, energy});
  for (double g : gauss) m = std::max(m, g);
  return m;
}

MomentDistances moment_distances(const Field& a, const Field& b) {
  if (a.grid() != b.grid()) throw std::invalid_argument("moment_distances: grid mismatch");
  const VelocityGrid& g = a.grid();
  const auto& probes = gaussian_probes();
  double mass = 0.0, energy = 0.0, l2 = 0.0;
  Vec3 mom = Vec3::Zero();
  std::array<double, 3> gs{};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = a[i] - b[i];
    const Vec3 v = g.node(i);
    mass += d;
    mom += d * v;
    energy += d * v.squaredNorm();
    for (int p = 0; p < 3; ++p) {
      const double s = probes[p].width;
      gs[p] += d * std::exp(-(v - probes[p].center).squaredNorm() / (2.0 * s * s));
    }
    l2 += weight_value(WeightKind::lambda, v) * d * d;
  }
  const double h3 = g.cell_volume();
  MomentDistances out;
  out.mass = std::abs(mass * h3);
  out.momentum = (mom * h3).cwiseAbs().maxCoeff();
  out.energy = std::abs(energy * h3);
  for (int p = 0; p < 3; ++p) out.gauss[p] = std::abs(gs[p] * h3);
  out.l2w = std::sqrt(l2 * h3);
  return out;
}

std::vector<int> checkpoint_steps(const RunConfig& c) {
  const double T = c.compare_until();
  const double s = T / c.dt;
  const long total = std::lround(s);
  if (total < 1 || std::abs(s - total) > 1e-9 * s)
    throw ConfigError("config: the comparison horizon must be a multiple of time.dt");
  std::vector<int> steps;
  for (int j = 1; j <= c.checkpoints; ++j) {
    const int k = int(std::lround(double(j) * total / c.checkpoints));
    if (k > 0 && (steps.empty() || k > steps.back())) steps.push_back(k);
  }
  return steps;
}

Field initial_field(const RunConfig& c) {
  const VelocityGrid grid(c.L, c.N);
  InitialData id{c.sigma_sq, c.m0, c.delta2, c.v0};
  Field u = id.sample(grid);
  u.mark_density();
  return u;
}

namespace {

// Shared stepping loop; `advance` performs one dt step of the current state.
template <typename State, typename Advance, typename Get>
Trajectory run_trajectory(const RunConfig& c, const std::string& name, State state,
                          Advance&& advance, Get&& field_of, const std::string& dir,
                          std::ostream* log) {
  Trajectory tr;
  tr.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> steps = checkpoint_steps(c);
  tr.samples.push_back({0.0, field_of(state)});
  save_sample(dir, name, 0, field_of(state), 0.0);
  int done = 0;
  try {
    for (std::size_t j = 0; j < steps.size(); ++j) {
      for (; done < steps[j]; ++done) state = advance(state);
      const double t = steps[j] * c.dt;
      tr.samples.push_back({t, field_of(state)});
      save_sample(dir, name, j + 1, field_of(state), t);
      if (log) *log << name << ": t = " << t << "\n";
    }
  } catch (const std::exception& e) {
    tr.aborted = true;
    tr.error = e.what();
    if (log) *log << name << ": aborted: " << e.what() << "\n";
  }
  tr.runtime_s = seconds_since(t0);
  return tr;
}

}  // namespace

Trajectory run_landau_trajectory(const RunConfig& c, const std::string& dir, std::ostream* log) {
  validate(c);
  const Field u0 = initial_field(c);
  const LandauOperator op(u0.grid(), c.Lambda);
  return run_trajectory(
      c, "landau", LandauState{0.0, u0, std::nullopt},
      [&](const LandauState& s) { return step_landau(op, s, c.dt, nullptr, c.tol_neg); },
      [](const LandauState& s) { return s.u; }, dir, log);
}

Trajectory run_nonmarkov_trajectory(const RunConfig& c, double eps, const std::string& dir,
                                    std::ostream* log) {
  validate(c);
  const Field u0 = initial_field(c);
  NonMarkovParams p;
  p.eps = eps;
  p.dt = c.dt;
  p.gamma = c.gamma;
  p.tol_mem = c.tol_mem;
  p.dt_factor = c.dt_factor;
  p.tol_neg = c.tol_neg;
  const std::string name = eps_tag(eps);
  std::unique_ptr<NonMarkovSolver> solver;
  try {
    solver = std::make_unique<NonMarkovSolver>(u0.grid(), p);
  } catch (const std::exception& e) {
    Trajectory tr;
    tr.name = name;
    tr.samples.push_back({0.0, u0});
    tr.aborted = true;
    tr.error = e.what();
    return tr;
  }
  std::vector<std::string> warnings;
  Trajectory tr = run_trajectory(
      c, name, solver->initial_state(u0),
      [&](const NonMarkovState& s) {
        NonMarkovState next = solver->step(s, c.dt);
        warnings = next.warnings;
        return next;
      },
      [](const NonMarkovState& s) { return s.u; }, dir, log);
  tr.warnings = std::move(warnings);
  return tr;
}

std::vector<std::vector<double>> ConvergenceReport::max_distance() const {
  std::vector<std::vector<double>> out(runs.size(), std::vector<double>(times.size(), kNaN));
  for (std::size_t e = 0; e < runs.size(); ++e)
    for (std::size_t j = 0; j < times.size(); ++j) {
      const std::size_t r = e * times.size() + j;
      if (r < rows.size()) out[e][j] = rows[r].d.max_moment();
    }
  return out;
}

ConvergenceReport run_convergence_study(const RunConfig& c, const StudyOptions& opt) {
  validate(c);
  ConvergenceReport rep;
  rep.config = c;
  for (int s : checkpoint_steps(c)) rep.times.push_back(s * c.dt);

  const Trajectory ref = run_landau_trajectory(c, opt.checkpoint_dir, opt.log);
  rep.landau_runtime_s = ref.runtime_s;
  if (ref.aborted) throw std::runtime_error("landau reference run aborted: " + ref.error);

  for (double eps : c.epsilon) {
    const Trajectory tr = run_nonmarkov_trajectory(c, eps, opt.checkpoint_dir, opt.log);
    EpsilonRun run{eps, tr.aborted, tr.error, tr.warnings, tr.runtime_s};
    for (std::size_t j = 0; j < rep.times.size(); ++j) {
      ReportRow row;
      row.t = rep.times[j];
      row.epsilon = eps;
      if (j + 1 < tr.samples.size()) {
        const Field& u = tr.samples[j + 1].u;
        const Moments m = conserved_moments(u);
        row.mass = m.mass;
        row.momentum = m.momentum;
        row.energy = m.energy;
        try {
          row.entropy = entropy(u, c.tol_neg);
        } catch (const std::exception& e) {
          row.entropy = kNaN;
          run.warnings.push_back(std::string("t=") + fmt(row.t) + ": " + e.what());
        }
        row.d = moment_distances(u, ref.samples[j + 1].u);
        if (row.d.mass > 1e-8) {
          std::ostringstream f;
          f << eps_tag(eps) << " t=" << row.t << ": mass distance " << row.d.mass << " above 1e-8";
          rep.flags.push_back(f.str());
        }
      } else {
        row.mass = row.energy = row.entropy = kNaN;
        row.momentum = Vec3::Constant(kNaN);
        row.d.mass = row.d.momentum = row.d.energy = row.d.l2w = kNaN;
        row.d.gauss = {kNaN, kNaN, kNaN};
      }
      rep.rows.push_back(row);
    }
    rep.runs.push_back(std::move(run));
  }

  const auto md = rep.max_distance();
  for (std::size_t j = 0; j < rep.times.size(); ++j)
    for (std::size_t e = 1; e < md.size(); ++e)
      if (md[e][j] > md[e - 1][j]) {
        std::ostringstream f;
        f << "t=" << rep.times[j] << ": max moment distance rises from " << md[e - 1][j] << " at "
          << eps_tag(c.epsilon[e - 1]) << " to " << md[e][j] << " at " << eps_tag(c.epsilon[e]);
        rep.flags.push_back(f.str());
      }
  return rep;
}

std::string csv_header() {
  return "t,epsilon,mass,mom_x,mom_y,mom_z,energy,entropy,d_mass,d_mom,d_energy,"
         "d_gauss1,d_gauss2,d_gauss3,l2w_dist\n";
}

std::string csv_text(const ConvergenceReport& r) {
  std::string out = csv_header();
  for (const auto& row : r.rows) {
    const double vals[] = {row.t,          row.epsilon,    row.mass,       row.momentum(0),
                           row.momentum(1), row.momentum(2), row.energy,   row.entropy,
                           row.d.mass,     row.d.momentum, row.d.energy,   row.d.gauss[0],
                           row.d.gauss[1], row.d.gauss[2], row.d.l2w};
    for (std::size_t i = 0; i < std::size(vals); ++i) out += (i ? "," : "") + fmt(vals[i]);
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const Trajectory& tr, double tol_neg) {
  std::string out = "t,mass,mom_x,mom_y,mom_z,energy,entropy\n";
  for (const auto& s : tr.samples) {
    const Moments m = conserved_moments(s.u);
    double h = kNaN;
    try {
      h = entropy(s.u, tol_neg);
    } catch (const std::exception&) {
    }
    const double vals[] = {s.t, m.mass, m.momentum(0), m.momentum(1), m.momentum(2), m.energy, h};
    for (std::size_t i = 0; i < std::size(vals); ++i) out += (i ? "," : "") + fmt(vals[i]);
    out += "\n";
  }
  return out;
}

std::vector<std::string> emit_plot_data(const ConvergenceReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("emit_plot_data: cannot create '" + dir + "'");

  using Get = std::function<double(const ReportRow&)>;
  const std::vector<std::pair<std::string, Get>> metrics = {
      {"mass", [](const ReportRow& x) { return x.mass; }},
      {"energy", [](const ReportRow& x) { return x.energy; }},
      {"entropy", [](const ReportRow& x) { return x.entropy; }},
      {"d_mass", [](const ReportRow& x) { return x.d.mass; }},
      {"d_mom", [](const ReportRow& x) { return x.d.momentum; }},
      {"d_energy", [](const ReportRow& x) { return x.d.energy; }},
      {"d_gauss1", [](const ReportRow& x) { return x.d.gauss[0]; }},
      {"d_gauss2", [](const ReportRow& x) { return x.d.gauss[1]; }},
      {"d_gauss3", [](const ReportRow& x) { return x.d.gauss[2]; }},
      {"l2w_dist", [](const ReportRow& x) { return x.d.l2w; }},
      {"max_moment", [](const ReportRow& x) { return x.d.max_moment(); }},
  };

  std::string header;
  {
    std::istringstream cfg(to_text(r.config));
    std::string line;
    while (std::getline(cfg, line)) {
      const auto eq = line.find(" = ");
      header += "# " + line.substr(0, eq) + " " + line.substr(eq + 3) + "\n";
    }
  }
  std::vector<std::string> paths;
  for (const auto& [name, get] : metrics) {
    std::string body = "# metric " + name + "\n# columns epsilon t value\n" + header;
    for (const auto& row : r.rows) body += fmt(row.epsilon) + " " + fmt(row.t) + " " + fmt(get(row)) + "\n";
    const std::string path = (fs::path(dir) / (name + ".dat")).string();
    write_file_atomic(path, body);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace nmkl
