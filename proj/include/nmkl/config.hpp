#pragma once

#include "nmkl/grid.hpp"
#include "nmkl/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmkl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double L = 6.0;
  int N = 16;

  double sigma_sq = 1.0;
  double m0 = 1.0;
  double delta2 = 0.1;
  V0Kind v0 = V0Kind::exp;

  double Lambda = kKernelScale;

  std::vector<double> epsilon{0.4, 0.2, 0.1};
  double gamma = 0.0;
  double tol_mem = 1e-8;

  double dt = 2e-3;
  double dt_factor = 0.2;
  double t_final = 0.1;
  double delta1 = 0.1;

  double A = 2.0;
  double quad_tol = 1e-8;
  double tol_neg = 1e-2;
  int checkpoints = 5;

  std::string output_dir = "out";
  bool seedless = true;

  // Latest time at which solutions are compared.
  double compare_until() const { return std::min(t_final, delta1); }
};

// Flat "key = value" lines with dotted keys; '#' starts a comment.
// Unknown keys and malformed values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Throws ConfigError naming the first violated constraint.
void validate(const RunConfig& c);

// Canonical key = value rendering; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);

std::vector<double> parse_epsilon_list(const std::string& csv);

}  // namespace nmkl
