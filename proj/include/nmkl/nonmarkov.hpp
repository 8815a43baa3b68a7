#pragma once

#include "nmkl/fft.hpp"
#include "nmkl/grid.hpp"
#include "nmkl/kernels.hpp"

#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace nmkl {

struct KernelSplit {
  Mat3 transverse;
  Mat3 parallel;
};

// transverse = (pi^2/4) e^{-|w|t} P^perp, parallel = (pi^2/4) e^{-|w|t}(1-|w|t) P.
// At w = 0 the isotropic averages (2/3 and 1/3 of (pi^2/4) I) are used.
KernelSplit split_memory_components(double t, const Vec3& w);

// b(t,r) = e^{-tr}/r^2 + t/r - 1/r^2, evaluated without cancellation.
double b_function(double t, double r);

// A past state with its mollified gradient and padded spectra.
struct Snapshot {
  Field u;
  VectorField grad;
  Spectrum u_hat;
  std::array<Spectrum, 3> grad_hat;
};

std::shared_ptr<const Snapshot> make_snapshot(const PaddedConvolver& conv, const Field& u,
                                              double gamma);

struct HistoryEntry {
  double s;
  std::shared_ptr<const Snapshot> snap;
};

class HistoryBuffer {
 public:
  HistoryBuffer(double dt, std::size_t horizon) : dt_(dt), horizon_(horizon) {
    if (!(dt > 0.0)) throw std::invalid_argument("HistoryBuffer: dt must be positive");
    if (horizon < 1) throw std::invalid_argument("HistoryBuffer: horizon must be >= 1");
  }

  double dt() const { return dt_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<HistoryEntry>& entries() const { return entries_; }
  const HistoryEntry& back() const { return entries_.back(); }
  const HistoryEntry& front() const { return entries_.front(); }

  void append(double s, std::shared_ptr<const Snapshot> snap);
  void drop_oldest() { entries_.pop_front(); }

 private:
  double dt_;
  std::size_t horizon_;
  std::deque<HistoryEntry> entries_;
};

// Memory-kernel spectra at lags j dt/eps, built on demand and kept while the
// byte budget allows; beyond it they are rebuilt per use.
class MemoryKernelCache {
 public:
  MemoryKernelCache(const VelocityGrid& grid, double dt, double eps,
                    std::size_t budget_bytes = std::size_t(512) << 20);

  const PaddedConvolver& convolver() const { return conv_; }
  double dt() const { return dt_; }
  double eps() const { return eps_; }
  // Max over grid offsets of |K(j dt/eps, w)| / (pi^2/4), origin cell included.
  double weight(int j);
  std::shared_ptr<const std::vector<Spectrum>> lag(int j);

 private:
  PaddedConvolver conv_;
  double dt_;
  double eps_;
  std::size_t budget_;
  std::size_t used_ = 0;
  std::map<int, std::shared_ptr<const std::vector<Spectrum>>> spectra_;
  std::map<int, double> weights_;
};

// Trapezoid weights over consecutive entries spanning [s_first, t].
std::vector<double> trapezoid_weights(std::size_t count, double dt);

// (1/eps) sum_k w_k (K_k * u_k) grad u_k, K_k = memory_kernel((t-s_k)/eps, .).
VectorField memory_K_apply(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                           std::vector<double> weights = {});
// (1/eps) sum_k w_k (K_k * grad u_k) u_k.
VectorField memory_P_apply(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                           std::vector<double> weights = {});
// K part minus P part, sharing the per-lag work.
VectorField memory_flux(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                        std::vector<double> weights = {});

struct NonMarkovParams {
  double eps = 0.2;
  double dt = 2e-3;
  double gamma = 0.0;
  double tol_mem = 1e-8;
  double dt_factor = 0.2;
  std::size_t horizon = 1u << 20;
  std::size_t cache_bytes = std::size_t(512) << 20;
  double tol_neg = 1e-2;
};

struct NonMarkovState {
  double t = 0.0;
  double eps = 0.0;
  double gamma = 0.0;
  Field u;
  HistoryBuffer history;
  Field rhs;  // right-hand side at t with the current history
  std::vector<std::string> warnings;
};

class NonMarkovSolver {
 public:
  NonMarkovSolver(const VelocityGrid& grid, const NonMarkovParams& params);

  const NonMarkovParams& params() const { return params_; }
  MemoryKernelCache& kernels() { return cache_; }
  NonMarkovState initial_state(const Field& u0);
  // One Heun step. The history sum at t+dt over past entries is shared by the
  // predictor and corrector evaluations.
  NonMarkovState step(const NonMarkovState& state, double dt);

 private:
  void prune(NonMarkovState& s);
  NonMarkovParams params_;
  MemoryKernelCache cache_;
};

NonMarkovState step_nonmarkov(NonMarkovSolver& solver, const NonMarkovState& state, double dt);

struct BoundaryLayerEval {
  double t = 0.0;
  Field B;
  VectorField flux;
  double scale = 0.0;  // max |div((G*u0) grad u0)|, the size of one half of the flux
};

// B = div B_F with B_F = (G*u0) grad u0 - (G*grad u0) u0 and
// G(w) = (pi^2/4) b(t,|w|/eps)/eps P_w^perp.
BoundaryLayerEval boundary_layer_B(double t, const InitialData& u0, const VelocityGrid& grid,
                                   double eps);
BoundaryLayerEval boundary_layer_B(double t, const Field& u0, double eps);

}  // namespace nmkl
