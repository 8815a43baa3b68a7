#include "nmkl/grid.hpp"

#include "nmkl/fft.hpp"

#include <cmath>
#include <sstream>

namespace nmkl {

VelocityGrid::VelocityGrid(double half_width, int points_per_axis)
    : L_(half_width), n_(points_per_axis), h_(2.0 * half_width / points_per_axis) {
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw std::invalid_argument("grid: half width L must be positive");
  if (points_per_axis < 2 || points_per_axis % 2 != 0)
    throw std::invalid_argument("grid: points per axis must be even and at least 2, got " +
                                std::to_string(points_per_axis));
}

VelocityGrid build_grid(double L, int N) { return VelocityGrid(L, N); }

double integral(const Field& f) { return f.values().sum() * f.grid().cell_volume(); }

double l2_norm(const Field& f) {
  return std::sqrt(f.values().square().sum() * f.grid().cell_volume());
}

void check_field(const Field& f, double tol_neg, const std::string& context) {
  const auto& u = f.values();
  if (!u.allFinite()) throw std::runtime_error(context + ": non-finite value in field");
  if (!f.is_density()) return;
  Eigen::Index at = 0;
  const double lo = u.minCoeff(&at);
  const double scale = u.abs().maxCoeff();
  if (lo < -tol_neg * scale) {
    const Vec3 v = f.grid().node(std::size_t(at));
    std::ostringstream msg;
    msg << context << ": density value " << lo << " below tolerance at node " << at << " ("
        << v.x() << ", " << v.y() << ", " << v.z() << ")";
    throw std::runtime_error(msg.str());
  }
}

double weight_value(WeightKind kind, const Vec3& v) {
  const double r = v.norm();
  switch (kind) {
    case WeightKind::lambda: return std::exp(r);
    case WeightKind::lambda_tilde: return std::exp(r) / (1.0 + r);
    case WeightKind::unity: return 1.0;
  }
  return 1.0;
}

double kappa(double s) {
  const double a = std::abs(s);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double p = psi(2.0 - a);
  return p / (p + psi(a - 1.0));
}

double cutoff(double delta1, double s) {
  if (!(delta1 > 0.0)) throw std::invalid_argument("cutoff: delta1 must be positive");
  return kappa(s / delta1);
}

CutoffKappa::CutoffKappa(double delta1) : delta1_(delta1) {
  if (!(delta1 > 0.0)) throw std::invalid_argument("cutoff: delta1 must be positive");
}

double maxwellian_value(double sigma_sq, double m0, const Vec3& v) {
  const double norm = m0 / std::pow(2.0 * M_PI * sigma_sq, 1.5);
  return norm * std::exp(-v.squaredNorm() / (2.0 * sigma_sq));
}

Field maxwellian(double sigma_sq, double m0, const VelocityGrid& grid) {
  if (!(sigma_sq > 0.0) || !(m0 > 0.0))
    throw std::invalid_argument("maxwellian: sigma_sq and m0 must be positive");
  Field f = Field::sample(grid, [&](const Vec3& v) { return maxwellian_value(sigma_sq, m0, v); });
  f.mark_density();
  return f;
}

V0Kind parse_v0_kind(const std::string& name) {
  if (name == "exp") return V0Kind::exp;
  if (name == "bump") return V0Kind::bump;
  throw std::invalid_argument("unknown v0 kind '" + name + "' (expected exp or bump)");
}

std::string to_string(V0Kind kind) { return kind == V0Kind::exp ? "exp" : "bump"; }

namespace {
constexpr double kBumpRadius = 2.0;
}

double InitialData::perturbation(const Vec3& v) const {
  const double r = v.norm();
  if (v0 == V0Kind::exp) return std::exp(-r);
  const double rho = r * r / (kBumpRadius * kBumpRadius);
  return rho < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - rho)) : 0.0;
}

Vec3 InitialData::perturbation_gradient(const Vec3& v) const {
  const double r = v.norm();
  if (v0 == V0Kind::exp) return r > 0.0 ? Vec3(-std::exp(-r) * v / r) : Vec3::Zero();
  const double rho = r * r / (kBumpRadius * kBumpRadius);
  if (rho >= 1.0) return Vec3::Zero();
  const double f = std::exp(1.0 - 1.0 / (1.0 - rho));
  const double om = 1.0 - rho;
  return -f / (om * om) * (2.0 / (kBumpRadius * kBumpRadius)) * v;
}

double InitialData::value(const Vec3& v) const {
  return maxwellian_value(sigma_sq, m0, v) + delta2 * perturbation(v);
}

Vec3 InitialData::gradient(const Vec3& v) const {
  return -v / sigma_sq * maxwellian_value(sigma_sq, m0, v) + delta2 * perturbation_gradient(v);
}

Field InitialData::sample(const VelocityGrid& grid) const {
  return initial_data(grid, sigma_sq, m0, delta2, v0);
}

Field initial_data(const VelocityGrid& grid, double sigma_sq, double m0, double delta2, V0Kind v0) {
  InitialData d{sigma_sq, m0, delta2, v0};
  Field pert = Field::sample(grid, [&](const Vec3& v) { return d.perturbation(v); });
  return initial_data(grid, sigma_sq, m0, delta2, pert);
}

Field initial_data(const VelocityGrid& grid, double sigma_sq, double m0, double delta2,
                   const Field& v0, double bound) {
  if (!(delta2 >= 0.0)) throw std::invalid_argument("initial_data: delta2 must be nonnegative");
  if (v0.grid() != grid) throw std::invalid_argument("initial_data: v0 lives on another grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 v = grid.node(i);
    const double x = v0[i];
    if (!(x >= 0.0) || x > bound * std::exp(-0.5 * v.norm())) {
      std::ostringstream msg;
      msg << "initial_data: v0 = " << x << " violates 0 <= v0 <= " << bound
          << " e^{-|v|/2} at node " << i << " (" << v.x() << ", " << v.y() << ", " << v.z() << ")";
      throw std::invalid_argument(msg.str());
    }
  }
  Field u = maxwellian(sigma_sq, m0, grid);
  if (delta2 != 0.0) u.values() += delta2 * v0.values();
  u.mark_density();
  return u;
}

namespace {

// Angular wavenumber for FFT index m on an axis of n points, zero at Nyquist.
double wavenumber(int m, int n, double L) {
  if (2 * m == n) return 0.0;
  const int s = m < n / 2 ? m : m - n;
  return M_PI / L * s;
}

std::vector<double> axis_wavenumbers(const VelocityGrid& g) {
  const int n = g.points_per_axis();
  std::vector<double> k(n);
  for (int m = 0; m < n; ++m) k[m] = wavenumber(m, n, g.half_width());
  return k;
}

// Multiplies the r2c spectrum by g(kx, ky, kz).
template <typename G>
Field apply_real_multiplier(const Field& f, G&& mult) {
  const VelocityGrid& g = f.grid();
  const int n = g.points_per_axis();
  RealFft3 fft(n);
  Spectrum spec(fft.spectrum_size());
  fft.forward(f.values().data(), spec.data());
  const auto k = axis_wavenumbers(g);
  const int nh = n / 2 + 1;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < nh; ++c) spec((std::size_t(a) * n + b) * nh + c) *= mult(k[a], k[b], k[c]);
  Field out(g);
  fft.inverse(spec.data(), out.values().data());
  out.values() /= double(g.size());
  return out;
}

template <typename G>
ComplexField apply_complex_multiplier(const ComplexField& f, G&& mult) {
  const VelocityGrid& g = f.grid();
  const int n = g.points_per_axis();
  ComplexFft3 fft(n);
  Eigen::ArrayXcd spec(fft.size());
  fft.forward(f.values().data(), spec.data());
  const auto k = axis_wavenumbers(g);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) spec((std::size_t(a) * n + b) * n + c) *= mult(k[a], k[b], k[c]);
  ComplexField out(g);
  fft.inverse(spec.data(), out.values().data());
  out.values() /= double(g.size());
  return out;
}

Cplx ipow(double k, int p) {
  Cplx r(1.0, 0.0);
  for (int i = 0; i < p; ++i) r *= Cplx(0.0, k);
  return r;
}

template <typename FieldT, typename Apply>
auto gradient_impl(const FieldT& f, double gamma, Apply&& apply) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("mollified_gradient: gamma must be >= 0");
  BasicVectorField<typename FieldT::Values::Scalar> out(f.grid());
  const double g2 = 0.5 * gamma * gamma;
  for (int d = 0; d < 3; ++d) {
    out.comp[d] = apply(f, [&](double kx, double ky, double kz) {
                    const double kd = d == 0 ? kx : (d == 1 ? ky : kz);
                    return Cplx(0.0, kd) * std::exp(-g2 * (kx * kx + ky * ky + kz * kz));
                  }).values();
  }
  return out;
}

}  // namespace

Field spectral_derivative(const Field& f, const std::array<int, 3>& alpha) {
  if (alpha[0] == 0 && alpha[1] == 0 && alpha[2] == 0) return f;
  return apply_real_multiplier(f, [&](double kx, double ky, double kz) {
    return ipow(kx, alpha[0]) * ipow(ky, alpha[1]) * ipow(kz, alpha[2]);
  });
}

VectorField mollified_gradient(const Field& f, double gamma) {
  return gradient_impl(f, gamma, [](const Field& x, auto&& m) { return apply_real_multiplier(x, m); });
}

ComplexVectorField mollified_gradient(const ComplexField& f, double gamma) {
  return gradient_impl(f, gamma,
                       [](const ComplexField& x, auto&& m) { return apply_complex_multiplier(x, m); });
}

Field divergence(const VectorField& F, double gamma) {
  const double g2 = 0.5 * gamma * gamma;
  Field out(F.grid);
  for (int d = 0; d < 3; ++d) {
    Field c(F.grid, F.comp[d]);
    out += apply_real_multiplier(c, [&](double kx, double ky, double kz) {
      const double kd = d == 0 ? kx : (d == 1 ? ky : kz);
      return Cplx(0.0, kd) * std::exp(-g2 * (kx * kx + ky * ky + kz * kz));
    });
  }
  return out;
}

ComplexField divergence(const ComplexVectorField& F, double gamma) {
  const double g2 = 0.5 * gamma * gamma;
  ComplexField out(F.grid);
  for (int d = 0; d < 3; ++d) {
    ComplexField c(F.grid, F.comp[d]);
    out += apply_complex_multiplier(c, [&](double kx, double ky, double kz) {
      const double kd = d == 0 ? kx : (d == 1 ? ky : kz);
      return Cplx(0.0, kd) * std::exp(-g2 * (kx * kx + ky * ky + kz * kz));
    });
  }
  return out;
}

double weighted_sobolev_norm(const Field& f, WeightKind weight, int order) {
  if (order < 0) throw std::invalid_argument("weighted_sobolev_norm: order must be >= 0");
  const VelocityGrid& g = f.grid();
  Eigen::ArrayXd w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w(i) = weight_value(weight, g.node(i));
  double total = 0.0;
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b)
      for (int c = 0; a + b + c <= order; ++c) {
        const Field d = spectral_derivative(f, {a, b, c});
        total += (w * d.values().square()).sum();
      }
  return std::sqrt(total * g.cell_volume());
}

}  // namespace nmkl
