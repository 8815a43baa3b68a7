#pragma once

#include "nmkl/fft.hpp"
#include "nmkl/grid.hpp"
#include "nmkl/kernels.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace nmkl {

struct Moments {
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
  double energy = 0.0;  // (1/2) int |v|^2 u
};

Moments conserved_moments(const Field& u);

// int u log u with 0 log 0 = 0; throws below -tol_neg * max|u|.
double entropy(const Field& u, double tol_neg = 1e-2);

// Landau collision operator with kernel a(w) = Lambda/|w| P_w^perp.
class LandauOperator {
 public:
  explicit LandauOperator(const VelocityGrid& grid, double Lambda = kKernelScale);

  const VelocityGrid& grid() const { return conv_.grid(); }
  double Lambda() const { return Lambda_; }
  const PaddedConvolver& convolver() const { return conv_; }

  MatrixField kbar(const Field& u) const;
  VectorField pbar(const Field& u) const;
  VectorField flux(const Field& u) const;  // kbar grad u - pbar u
  Field rhs(const Field& u) const;

 private:
  double Lambda_;
  PaddedConvolver conv_;
  std::vector<Spectrum> table_;
};

MatrixField kbar(const Field& u, double Lambda = kKernelScale);
VectorField pbar(const Field& u, double Lambda = kKernelScale);
Field landau_rhs(const Field& u, double Lambda = kKernelScale);

struct LandauState {
  double t = 0.0;
  Field u;
  std::optional<Field> rhs;  // cached landau_rhs(u)
};

struct StepRecord {
  double t;
  double mass;
  double energy;
  double entropy;
};

// Thrown when a step produces non-finite values; carries the last good state.
class SolverAbort : public std::runtime_error {
 public:
  SolverAbort(const std::string& what, double t, Field last_good)
      : std::runtime_error(what), t_(t), last_(std::move(last_good)) {}
  double time() const { return t_; }
  const Field& last_good() const { return last_; }

 private:
  double t_;
  Field last_;
};

// One classical RK4 step; appends a record when `log` is given.
LandauState step_landau(const LandauOperator& op, const LandauState& state, double dt,
                        std::vector<StepRecord>* log = nullptr, double tol_neg = 1e-2);

}  // namespace nmkl
