#include "nmkl/nonmarkov.hpp"

#include "nmkl/landau.hpp"

#include <cmath>
#include <sstream>

namespace nmkl {

KernelSplit split_memory_components(double t, const Vec3& w) {
  if (!(t >= 0.0)) throw std::invalid_argument("split_memory_components: t must be >= 0");
  const double r = w.norm();
  if (r == 0.0) {
    return {kKernelScale * (2.0 / 3.0) * Mat3::Identity(), kKernelScale * (1.0 / 3.0) * Mat3::Identity()};
  }
  const double x = r * t;
  const double e = kKernelScale * std::exp(-x);
  return {e * transverse_projector(w), e * (1.0 - x) * parallel_projector(w)};
}

double b_function(double t, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("b_function: r must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("b_function: t must be >= 0");
  const double x = t * r;
  double g;  // e^{-x} - 1 + x
  if (x < 0.1) {
    double term = x * x / 2.0;
    g = 0.0;
    for (int k = 2; k < 14; ++k) {
      g += term;
      term *= -x / (k + 1);
    }
  } else {
    g = std::expm1(-x) + x;
  }
  return g / (r * r);
}

std::shared_ptr<const Snapshot> make_snapshot(const PaddedConvolver& conv, const Field& u,
                                              double gamma) {
  auto s = std::make_shared<Snapshot>(Snapshot{u, mollified_gradient(u, gamma), {}, {}});
  s->u_hat = conv.transform(u.values());
  for (int d = 0; d < 3; ++d) s->grad_hat[d] = conv.transform(s->grad.comp[d]);
  return s;
}

void HistoryBuffer::append(double s, std::shared_ptr<const Snapshot> snap) {
  if (!entries_.empty()) {
    const double gap = s - entries_.back().s;
    if (std::abs(gap - dt_) > 1e-9 * std::max(1.0, std::abs(s)))
      throw std::invalid_argument("HistoryBuffer: entries must be spaced by dt");
  }
  entries_.push_back({s, std::move(snap)});
}

MemoryKernelCache::MemoryKernelCache(const VelocityGrid& grid, double dt, double eps,
                                     std::size_t budget_bytes)
    : conv_(grid), dt_(dt), eps_(eps), budget_(budget_bytes) {
  if (!(dt > 0.0) || !(eps > 0.0))
    throw std::invalid_argument("MemoryKernelCache: dt and eps must be positive");
}

std::shared_ptr<const std::vector<Spectrum>> MemoryKernelCache::lag(int j) {
  auto it = spectra_.find(j);
  if (it != spectra_.end()) return it->second;
  double org = 0.0, w = 0.0;
  auto spec = std::make_shared<const std::vector<Spectrum>>(
      kernel_spectra(conv_, {KernelId::memory}, j * dt_ / eps_, &org, &w));
  weights_[j] = w;
  const std::size_t bytes = spec->size() * std::size_t((*spec)[0].size()) * sizeof(Cplx);
  if (used_ + bytes <= budget_) {
    used_ += bytes;
    spectra_.emplace(j, spec);
  }
  return spec;
}

double MemoryKernelCache::weight(int j) {
  auto it = weights_.find(j);
  if (it != weights_.end()) return it->second;
  lag(j);
  return weights_.at(j);
}

std::vector<double> trapezoid_weights(std::size_t count, double dt) {
  std::vector<double> w(count, dt);
  if (count == 0) return w;
  if (count == 1) {
    w[0] = 0.0;
    return w;
  }
  w.front() = 0.5 * dt;
  w.back() = 0.5 * dt;
  return w;
}

namespace {

enum Parts { kPartK = 1, kPartP = 2 };

int lag_index(double t, double s, double dt) {
  const double x = (t - s) / dt;
  const long j = std::lround(x);
  if (j < 0 || std::abs(x - j) > 1e-6)
    throw std::invalid_argument("memory operator: history time not on the dt lattice of t");
  return int(j);
}

// Consecutive entries sharing one snapshot are folded into a single weighted
// kernel sum before the inverse transforms.
VectorField accumulate(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                       std::vector<double> weights, int parts) {
  const PaddedConvolver& conv = cache.convolver();
  VectorField F(conv.grid());
  const auto& e = history.entries();
  if (e.empty()) return F;
  if (weights.empty()) weights = trapezoid_weights(e.size(), history.dt());
  if (weights.size() != e.size()) throw std::invalid_argument("memory operator: weight count mismatch");

  std::size_t k = 0;
  while (k < e.size()) {
    const Snapshot* snap = e[k].snap.get();
    std::vector<Spectrum> S;
    for (; k < e.size() && e[k].snap.get() == snap; ++k) {
      if (weights[k] == 0.0) continue;
      auto K = cache.lag(lag_index(t, e[k].s, cache.dt()));
      if (S.empty()) {
        S.resize(6);
        for (int c = 0; c < 6; ++c) S[c] = (*K)[c] * weights[k];
      } else {
        for (int c = 0; c < 6; ++c) S[c] += (*K)[c] * weights[k];
      }
    }
    if (S.empty()) continue;
    if (parts & kPartK) {
      const MatrixField M = convolve_matrix(conv, S, snap->u_hat);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) F.comp[i] += M.comp[MatrixField::slot(i, j)] * snap->grad.comp[j];
    }
    if (parts & kPartP) {
      const VectorField P = convolve_rows(conv, S, snap->grad_hat);
      for (int i = 0; i < 3; ++i) F.comp[i] -= P.comp[i] * snap->u.values();
    }
  }
  for (auto& c : F.comp) c /= cache.eps();
  if (!(parts & kPartK))
    for (auto& c : F.comp) c = -c;
  return F;
}

}  // namespace

VectorField memory_K_apply(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                           std::vector<double> weights) {
  return accumulate(cache, history, t, std::move(weights), kPartK);
}

VectorField memory_P_apply(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                           std::vector<double> weights) {
  return accumulate(cache, history, t, std::move(weights), kPartP);
}

VectorField memory_flux(MemoryKernelCache& cache, const HistoryBuffer& history, double t,
                        std::vector<double> weights) {
  return accumulate(cache, history, t, std::move(weights), kPartK | kPartP);
}

NonMarkovSolver::NonMarkovSolver(const VelocityGrid& grid, const NonMarkovParams& params)
    : params_(params), cache_(grid, params.dt, params.eps, params.cache_bytes) {
  if (!(params.gamma >= 0.0)) throw std::invalid_argument("NonMarkovSolver: gamma must be >= 0");
  if (!(params.tol_mem > 0.0)) throw std::invalid_argument("NonMarkovSolver: tol_mem must be > 0");
  if (params.dt > params.eps * params.dt_factor * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "NonMarkovSolver: dt = " << params.dt << " too large for eps = " << params.eps
        << " (limit eps * dt_factor = " << params.eps * params.dt_factor << ")";
    throw std::invalid_argument(msg.str());
  }
}

NonMarkovState NonMarkovSolver::initial_state(const Field& u0) {
  HistoryBuffer h(params_.dt, params_.horizon);
  h.append(0.0, make_snapshot(cache_.convolver(), u0, params_.gamma));
  return NonMarkovState{0.0, params_.eps, params_.gamma, u0, std::move(h), Field(u0.grid()), {}};
}

void NonMarkovSolver::prune(NonMarkovState& s) {
  auto& h = s.history;
  while (h.size() > 1 &&
         cache_.weight(lag_index(s.t, h.front().s, params_.dt)) < params_.tol_mem)
    h.drop_oldest();
  while (h.size() > h.horizon()) {
    const double w = cache_.weight(lag_index(s.t, h.front().s, params_.dt));
    if (w >= params_.tol_mem) {
      std::ostringstream msg;
      msg << "t=" << s.t << ": horizon truncation dropped s=" << h.front().s
          << " with kernel weight " << w << " >= tol_mem";
      s.warnings.push_back(msg.str());
    }
    h.drop_oldest();
  }
}

NonMarkovState NonMarkovSolver::step(const NonMarkovState& s, double dt) {
  if (dt == 0.0) return s;
  if (std::abs(dt - params_.dt) > 1e-12 * params_.dt)
    throw std::invalid_argument("step_nonmarkov: dt must equal the history spacing");
  if (dt > s.eps * params_.dt_factor * (1.0 + 1e-12))
    throw std::invalid_argument("step_nonmarkov: dt too large for eps");
  const double t1 = s.t + dt;
  const PaddedConvolver& conv = cache_.convolver();

  std::vector<double> w = trapezoid_weights(s.history.size() + 1, dt);
  const double w_new = w.back();
  w.pop_back();
  const VectorField A = memory_flux(cache_, s.history, t1, w);

  auto with_current = [&](const std::shared_ptr<const Snapshot>& snap) {
    HistoryBuffer one(dt, 1);
    one.append(t1, snap);
    VectorField F = memory_flux(cache_, one, t1, {w_new});
    for (int d = 0; d < 3; ++d) F.comp[d] += A.comp[d];
    return divergence(F, params_.gamma);
  };

  Field ustar = s.u;
  ustar.values() += dt * s.rhs.values();
  const Field rstar = with_current(make_snapshot(conv, ustar, params_.gamma));

  Field u1 = s.u;
  u1.values() += 0.5 * dt * (s.rhs.values() + rstar.values());
  if (!u1.values().allFinite())
    throw SolverAbort("step_nonmarkov: non-finite values at t = " + std::to_string(t1), s.t, s.u);
  if (u1.is_density()) check_field(u1, params_.tol_neg, "step_nonmarkov");

  auto snap1 = make_snapshot(conv, u1, params_.gamma);
  NonMarkovState next{t1, s.eps, s.gamma, u1, s.history, with_current(snap1), s.warnings};
  next.history.append(t1, snap1);
  prune(next);
  return next;
}

NonMarkovState step_nonmarkov(NonMarkovSolver& solver, const NonMarkovState& state, double dt) {
  return solver.step(state, dt);
}

namespace {

BoundaryLayerEval boundary_layer_impl(double t, const Field& u0, const VectorField& g0, double eps) {
  if (!(t >= 0.0)) throw std::invalid_argument("boundary_layer_B: t must be >= 0");
  if (!(eps > 0.0)) throw std::invalid_argument("boundary_layer_B: eps must be positive");
  const VelocityGrid& grid = u0.grid();
  PaddedConvolver conv(grid);
  const int P = conv.padded();
  const double h = grid.spacing();
  std::vector<Eigen::ArrayXd> bufs(6, Eigen::ArrayXd::Zero(std::size_t(P) * P * P));
  if (t > 0.0) {
    const double org = (2.0 / 3.0) * kKernelScale / eps *
                       cube_average_radial([&](double r) { return b_function(t, r / eps); }, h);
    constexpr int kRow[6] = {0, 0, 0, 1, 1, 2};
    constexpr int kCol[6] = {0, 1, 2, 1, 2, 2};
    conv.for_each_offset([&](std::size_t i, const Vec3& w, bool origin) {
      if (origin) {
        bufs[0](i) = bufs[3](i) = bufs[5](i) = org;
        return;
      }
      const Mat3 G = (kKernelScale * b_function(t, w.norm() / eps) / eps) * transverse_projector(w);
      for (int c = 0; c < 6; ++c) bufs[c](i) = G(kRow[c], kCol[c]);
    });
  }
  std::vector<Spectrum> G;
  for (const auto& b : bufs) G.push_back(conv.transform_padded(b));

  const MatrixField Gu = convolve_matrix(conv, G, conv.transform(u0.values()));
  std::array<Spectrum, 3> gh;
  for (int d = 0; d < 3; ++d) gh[d] = conv.transform(g0.comp[d]);
  const VectorField Gg = convolve_rows(conv, G, gh);

  BoundaryLayerEval out{t, Field(grid), VectorField(grid), 0.0};
  VectorField half(grid);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) half.comp[i] += Gu.comp[MatrixField::slot(i, j)] * g0.comp[j];
    out.flux.comp[i] = half.comp[i] - Gg.comp[i] * u0.values();
  }
  out.B = divergence(out.flux);
  out.scale = divergence(half).values().abs().maxCoeff();
  return out;
}

}  // namespace

BoundaryLayerEval boundary_layer_B(double t, const InitialData& u0, const VelocityGrid& grid,
                                   double eps) {
  const Field u = Field::sample(grid, [&](const Vec3& v) { return u0.value(v); });
  VectorField g(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) g.set(i, u0.gradient(grid.node(i)));
  return boundary_layer_impl(t, u, g, eps);
}

BoundaryLayerEval boundary_layer_B(double t, const Field& u0, double eps) {
  return boundary_layer_impl(t, u0, mollified_gradient(u0, 0.0), eps);
}

}  // namespace nmkl
