#include "nmkl/landau.hpp"

#include <cmath>

namespace nmkl {

Moments conserved_moments(const Field& u) {
  const VelocityGrid& g = u.grid();
  Moments m;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 v = g.node(i);
    m.mass += u[i];
    m.momentum += u[i] * v;
    m.energy += 0.5 * v.squaredNorm() * u[i];
  }
  const double h3 = g.cell_volume();
  m.mass *= h3;
  m.momentum *= h3;
  m.energy *= h3;
  return m;
}

double entropy(const Field& u, double tol_neg) {
  const double scale = u.values().abs().maxCoeff();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = u[i];
    if (x < -tol_neg * scale)
      throw std::runtime_error("entropy: negative value " + std::to_string(x) + " at node " +
                               std::to_string(i));
    if (x > 0.0) acc += x * std::log(x);
  }
  return acc * u.grid().cell_volume();
}

LandauOperator::LandauOperator(const VelocityGrid& grid, double Lambda)
    : Lambda_(Lambda), conv_(grid) {
  if (!(Lambda > 0.0)) throw std::invalid_argument("LandauOperator: Lambda must be positive");
  table_ = kernel_spectra(conv_, {KernelId::landau, Lambda}, 0.0);
}

MatrixField LandauOperator::kbar(const Field& u) const {
  return convolve_matrix(conv_, table_, conv_.transform(u.values()));
}

VectorField LandauOperator::pbar(const Field& u) const {
  const VectorField g = mollified_gradient(u, 0.0);
  std::array<Spectrum, 3> gh;
  for (int d = 0; d < 3; ++d) gh[d] = conv_.transform(g.comp[d]);
  return convolve_rows(conv_, table_, gh);
}

VectorField LandauOperator::flux(const Field& u) const {
  const VectorField g = mollified_gradient(u, 0.0);
  const Spectrum uh = conv_.transform(u.values());
  std::array<Spectrum, 3> gh;
  for (int d = 0; d < 3; ++d) gh[d] = conv_.transform(g.comp[d]);
  const VectorField P = convolve_rows(conv_, table_, gh);
  const MatrixField K = convolve_matrix(conv_, table_, uh);
  VectorField F(u.grid());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) F.comp[i] += K.comp[MatrixField::slot(i, j)] * g.comp[j];
    F.comp[i] -= P.comp[i] * u.values();
  }
  return F;
}

Field LandauOperator::rhs(const Field& u) const { return divergence(flux(u)); }

MatrixField kbar(const Field& u, double Lambda) { return LandauOperator(u.grid(), Lambda).kbar(u); }
VectorField pbar(const Field& u, double Lambda) { return LandauOperator(u.grid(), Lambda).pbar(u); }
Field landau_rhs(const Field& u, double Lambda) { return LandauOperator(u.grid(), Lambda).rhs(u); }

LandauState step_landau(const LandauOperator& op, const LandauState& state, double dt,
                        std::vector<StepRecord>* log, double tol_neg) {
  if (!(dt >= 0.0)) throw std::invalid_argument("step_landau: dt must be >= 0");
  if (dt == 0.0) return state;
  const Field& u = state.u;
  const Field k1 = state.rhs ? *state.rhs : op.rhs(u);
  Field y = u;
  y.values() = u.values() + 0.5 * dt * k1.values();
  const Field k2 = op.rhs(y);
  y.values() = u.values() + 0.5 * dt * k2.values();
  const Field k3 = op.rhs(y);
  y.values() = u.values() + dt * k3.values();
  const Field k4 = op.rhs(y);
  LandauState next{state.t + dt, u, std::nullopt};
  next.u.values() += (dt / 6.0) * (k1.values() + 2.0 * k2.values() + 2.0 * k3.values() + k4.values());
  if (!next.u.values().allFinite())
    throw SolverAbort("step_landau: non-finite values at t = " + std::to_string(next.t), state.t,
                      state.u);
  next.u.mark_density(u.is_density());
  if (next.u.is_density()) check_field(next.u, tol_neg, "step_landau");
  next.rhs = op.rhs(next.u);
  if (log) {
    const Moments m = conserved_moments(next.u);
    log->push_back({next.t, m.mass, m.energy, entropy(next.u, tol_neg)});
  }
  return next;
}

}  // namespace nmkl
