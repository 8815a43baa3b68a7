#pragma once

#include "nmkl/grid.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace nmkl {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;  // observed error or minimum
  double bound = 0.0;
  std::string detail;
};

struct VerifyOptions {
  bool quick = false;
  std::uint64_t seed = 7;
};

// Deterministic sample sets: Re z in (0, 5], |v| in [0.1, 8] for the identity,
// t in [0, 3], |w| in [0.1, 5] for the memory kernel.
std::vector<std::pair<Cplx, Vec3>> identity_samples(std::size_t count, std::uint64_t seed);
std::vector<std::pair<double, Vec3>> memory_kernel_samples(std::size_t count, std::uint64_t seed);
// Re z >= 0 samples, including the imaginary axis and z = 0.
std::vector<Cplx> coercivity_z_samples(std::size_t count, std::uint64_t seed);

// Max relative entrywise error between the trapezoid Laplace transform of
// t -> memory_kernel(t, w) and (M1+M2)(z, w).
double memory_laplace_error(Cplx z, const Vec3& w);

// |int_0^inf e_w . K(t, w) e_w dt| by adaptive quadrature.
double parallel_cancellation(const Vec3& w);

std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt = {}, std::ostream* progress = nullptr);

std::string format_table(const std::vector<CheckResult>& results);

}  // namespace nmkl
