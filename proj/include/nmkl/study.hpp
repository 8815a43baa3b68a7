#pragma once

#include "nmkl/config.hpp"
#include "nmkl/grid.hpp"

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace nmkl {

// Gaussian test functions exp(-|v - c|^2 / (2 s^2)) used as weak-* probes.
struct GaussianProbe {
  Vec3 center;
  double width;
};
const std::array<GaussianProbe, 3>& gaussian_probes();

struct MomentDistances {
  double mass = 0.0;
  double momentum = 0.0;  // max over the three components
  double energy = 0.0;    // psi = |v|^2
  std::array<double, 3> gauss{};
  double l2w = 0.0;  // weight lambda = e^{|v|}

  double max_moment() const;
};

MomentDistances moment_distances(const Field& a, const Field& b);

struct TrajectorySample {
  double t;
  Field u;
};

struct Trajectory {
  std::string name;
  std::vector<TrajectorySample> samples;  // t = 0 and every checkpoint time reached
  bool aborted = false;
  std::string error;
  std::vector<std::string> warnings;
  double runtime_s = 0.0;
};

// Step indices of the report times in (0, compare_until()]; throws ConfigError
// when compare_until() is not a multiple of dt.
std::vector<int> checkpoint_steps(const RunConfig& c);

Field initial_field(const RunConfig& c);

// Checkpoints are written to checkpoint_dir as <name>_<k>.nmkl when it is non-empty.
Trajectory run_landau_trajectory(const RunConfig& c, const std::string& checkpoint_dir = "",
                                 std::ostream* log = nullptr);
Trajectory run_nonmarkov_trajectory(const RunConfig& c, double eps,
                                    const std::string& checkpoint_dir = "",
                                    std::ostream* log = nullptr);

struct ReportRow {
  double t = 0.0;
  double epsilon = 0.0;
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
  double energy = 0.0;
  double entropy = 0.0;
  MomentDistances d;
};

struct EpsilonRun {
  double epsilon = 0.0;
  bool aborted = false;
  std::string error;
  std::vector<std::string> warnings;
  double runtime_s = 0.0;
};

struct ConvergenceReport {
  RunConfig config;
  std::vector<double> times;
  std::vector<ReportRow> rows;  // epsilon-major, times ascending
  std::vector<EpsilonRun> runs;
  std::vector<std::string> flags;  // non-monotone distances, drift above bounds
  double landau_runtime_s = 0.0;

  // max_moment at each time for every epsilon, [eps][time].
  std::vector<std::vector<double>> max_distance() const;
};

struct StudyOptions {
  std::string checkpoint_dir;
  std::ostream* log = nullptr;
};

ConvergenceReport run_convergence_study(const RunConfig& c, const StudyOptions& opt = {});

std::string csv_header();
std::string csv_text(const ConvergenceReport& r);
std::string trajectory_csv(const Trajectory& tr, double tol_neg);

// One "<metric>.dat" per metric with "# key value" headers and rows
// "epsilon t value"; returns the written paths in a fixed order.
std::vector<std::string> emit_plot_data(const ConvergenceReport& r, const std::string& dir);

}  // namespace nmkl
