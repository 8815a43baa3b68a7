#include "nmkl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace nmkl {

double phi_hat(const Vec3& k) { return std::pow(1.0 + k.squaredNorm(), -1.5); }

Mat3 memory_kernel(double t, const Vec3& w) {
  if (!(t >= 0.0)) throw std::invalid_argument("memory_kernel: t must be >= 0");
  const double r = w.norm();
  if (r == 0.0) return kKernelScale * Mat3::Identity();
  const double x = r * t;
  const double e = std::exp(-x);
  return kKernelScale * e * (transverse_projector(w) + (1.0 - x) * parallel_projector(w));
}

Mat3 landau_matrix(const Vec3& w, double Lambda) {
  const double r = w.norm();
  if (!(r > 0.0)) throw std::invalid_argument("landau_matrix: w must be nonzero");
  return (Lambda / r) * transverse_projector(w);
}

namespace {

// Orthonormal frame (e, e1, e2) with e along w.
std::array<Vec3, 3> frame(const Vec3& w) {
  const Vec3 e = w.normalized();
  Vec3 t = std::abs(e.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (t - t.dot(e) * e).normalized();
  const Vec3 e2 = e.cross(e1);
  return {e, e1, e2};
}

// int_0^inf rho d rho int_0^{2pi} d theta  k (x) k |phi_hat(k)|^2 with
// k = a e + rho (cos theta e1 + sin theta e2). The theta rule is an 8-point
// periodic trapezoid, exact for the degree-2 trigonometric integrand.
Mat3 shell_integral(double a, const std::array<Vec3, 3>& f, const QuadOptions& opt) {
  const double c = std::sqrt(1.0 + a * a);
  constexpr int kTheta = 8;
  std::array<Vec3, kTheta> dirs;
  for (int m = 0; m < kTheta; ++m) {
    const double th = 2.0 * kPi * m / kTheta;
    dirs[m] = std::cos(th) * f[1] + std::sin(th) * f[2];
  }
  auto integrand = [&](double rho) -> Mat3 {
    Mat3 acc = Mat3::Zero();
    const double p = phi_hat(Vec3(a, rho, 0.0));
    const double w = rho * p * p * (2.0 * kPi / kTheta);
    for (const Vec3& d : dirs) {
      const Vec3 k = a * f[0] + rho * d;
      acc += k * k.transpose();
    }
    return Mat3(acc * w);
  };
  auto mapped = [&](double s) -> Mat3 {
    const double om = 1.0 - s;
    return Mat3(integrand(c * s / om) * (c / (om * om)));
  };
  return integrate(mapped, std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}, opt).value;
}

}  // namespace

IdentityCheck verify_m_identity(Cplx z, const Vec3& v, double quad_tol) {
  if (!(std::real(z) > 0.0)) throw std::invalid_argument("verify_m_identity: Re z must be > 0");
  const double r = v.norm();
  if (!(r > 0.0)) throw std::invalid_argument("verify_m_identity: v must be nonzero");
  const auto f = frame(v);
  QuadOptions inner{1e-15, 0.05 * quad_tol, 4000};
  QuadOptions outer{1e-15, quad_tol, 4000};

  // Outer variable a = k.e on each half line, a = s/(1-s); breakpoints at the
  // Lorentzian scales |z|/r and |Im z|/r.
  std::vector<double> pts{0.0, 0.5, 1.0};
  for (double x : {std::abs(z) / r, std::abs(std::imag(z)) / r}) {
    for (double m : {0.25, 1.0, 4.0}) {
      const double a = m * x;
      if (a > 0.0) pts.push_back(a / (1.0 + a));
    }
  }
  auto half_line = [&](double sign) {
    auto g = [&](double s) -> CMat3 {
      const double om = 1.0 - s;
      const double a = sign * s / om;
      const Mat3 F = shell_integral(a, f, inner);
      const Cplx lor = z / (z * z + a * a * r * r);
      return CMat3(F.cast<Cplx>() * (lor / (om * om)));
    };
    return integrate(g, pts, outer).value;
  };
  IdentityCheck out;
  out.quadrature = half_line(1.0) + half_line(-1.0);
  out.closed_form = m1_m2<Cplx>(z, v).sum();
  out.max_rel_error = (out.quadrature - out.closed_form).cwiseAbs().maxCoeff() /
                      out.closed_form.cwiseAbs().maxCoeff();
  return out;
}

MemoryKernelCheck verify_memory_kernel(double t, const Vec3& w, double quad_tol) {
  if (!(t >= 0.0)) throw std::invalid_argument("verify_memory_kernel: t must be >= 0");
  MemoryKernelCheck out;
  out.closed_form = memory_kernel(t, w);
  const double r = w.norm();
  const std::array<Vec3, 3> f = r > 0.0 ? frame(w) : frame(Vec3::UnitZ());
  const double om0 = t * r;
  QuadOptions inner{1e-15, 0.05 * quad_tol, 4000};
  QuadOptions outer{1e-11, 0.5 * quad_tol, 20000};

  Mat3 half;
  if (om0 == 0.0) {
    auto g = [&](double a) { return shell_integral(a, f, inner); };
    half = integrate_to_infinity(g, 0.0, outer).value;
  } else {
    // Oscillatory part on [0, K] with one breakpoint per half period, then the
    // tail from the a^{-2} asymptote matched at K:
    // int_K^inf cos(w a)/a^2 da ~ -sin(wK)/(wK^2) + 2cos(wK)/(w^2 K^3).
    const double K = std::max(60.0, 40.0 / om0);
    const int periods = std::min(20000, int(std::ceil(K * om0 / kPi)));
    std::vector<double> pts;
    for (int i = 0; i <= periods; ++i) pts.push_back(K * i / periods);
    auto g = [&](double a) { return Mat3(shell_integral(a, f, inner) * std::cos(om0 * a)); };
    half = integrate(g, pts, outer).value;
    const Mat3 FK = shell_integral(K, f, inner) * (K * K);
    const double tail = -std::sin(om0 * K) / (om0 * K * K) +
                        2.0 * std::cos(om0 * K) / (om0 * om0 * K * K * K);
    half += FK * tail;
  }
  out.quadrature = 2.0 * half;  // even in a
  out.max_rel_error = (out.quadrature - out.closed_form).cwiseAbs().maxCoeff() /
                      out.closed_form.cwiseAbs().maxCoeff();
  return out;
}

double singular_cell_constant(int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("singular_cell_constant: p must be 1 or 2");
  static const double c1 = cube_average_radial([](double r) { return 1.0 / r; }, 1.0);
  static const double c2 = cube_average_radial([](double r) { return 1.0 / (r * r); }, 1.0);
  return p == 1 ? c1 : c2;
}

double memory_kernel_cell_average(double t, double h) {
  if (t == 0.0) return kKernelScale;
  return kKernelScale *
         cube_average_radial([t](double r) { return std::exp(-r * t) * (1.0 - r * t / 3.0); }, h);
}

std::size_t MultiplierTable::bytes() const {
  std::size_t b = 0;
  for (const auto& lag : spectra)
    for (const auto& s : lag) b += std::size_t(s.size()) * sizeof(Cplx);
  return b;
}

namespace {
int component_count(KernelId id) {
  return (id == KernelId::landau || id == KernelId::memory) ? 6 : 1;
}
constexpr int kRow[6] = {0, 0, 0, 1, 1, 2};
constexpr int kCol[6] = {0, 1, 2, 1, 2, 2};
}  // namespace

std::size_t multiplier_table_bytes(const VelocityGrid& grid, KernelId id, std::size_t lags) {
  const std::size_t P = 2 * std::size_t(grid.points_per_axis());
  return lags * component_count(id) * P * P * (P / 2 + 1) * sizeof(Cplx);
}

std::vector<Spectrum> kernel_spectra(const PaddedConvolver& conv, const KernelSpec& kernel,
                                     double lag, double* origin, double* max_weight) {
  const VelocityGrid& g = conv.grid();
  const double h = g.spacing();
  const int ncomp = component_count(kernel.id);
  const int P = conv.padded();
  std::vector<Eigen::ArrayXd> bufs(ncomp, Eigen::ArrayXd::Zero(std::size_t(P) * P * P));
  double org = 0.0;
  double wmax = 0.0;
  switch (kernel.id) {
    case KernelId::landau: org = kernel.Lambda * (2.0 / 3.0) * singular_cell_constant(1) / h; break;
    case KernelId::memory: org = memory_kernel_cell_average(lag, h); break;
    case KernelId::coulomb: org = singular_cell_constant(1) / h; break;
    case KernelId::inverse_square: org = singular_cell_constant(2) / (h * h); break;
    case KernelId::delta_cell: org = 1.0; break;
    case KernelId::zero: org = 0.0; break;
  }
  conv.for_each_offset([&](std::size_t i, const Vec3& w, bool at_origin) {
    if (at_origin) {
      if (ncomp == 6) {
        bufs[0](i) = bufs[3](i) = bufs[5](i) = org;
      } else {
        bufs[0](i) = org;
      }
      wmax = std::max(wmax, std::abs(org));
      return;
    }
    if (ncomp == 6) {
      const Mat3 k = kernel.id == KernelId::landau ? landau_matrix(w, kernel.Lambda)
                                                   : memory_kernel(lag, w);
      for (int c = 0; c < 6; ++c) bufs[c](i) = k(kRow[c], kCol[c]);
      wmax = std::max(wmax, k.cwiseAbs().maxCoeff());
    } else {
      double val = 0.0;
      if (kernel.id == KernelId::coulomb) val = 1.0 / w.norm();
      if (kernel.id == KernelId::inverse_square) val = 1.0 / w.squaredNorm();
      bufs[0](i) = val;
      wmax = std::max(wmax, std::abs(val));
    }
  });
  if (origin) *origin = org;
  if (max_weight) *max_weight = kernel.id == KernelId::memory ? wmax / kKernelScale : wmax;
  std::vector<Spectrum> out;
  out.reserve(ncomp);
  for (const auto& b : bufs) out.push_back(conv.transform_padded(b));
  return out;
}

MultiplierTable build_multiplier_table(const VelocityGrid& grid, const KernelSpec& kernel,
                                       const std::vector<double>& lags, const TableOptions& opt) {
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!(lags[i] >= 0.0)) throw std::invalid_argument("build_multiplier_table: negative lag");
    if (i > 0 && lags[i] < lags[i - 1])
      throw std::invalid_argument("build_multiplier_table: lags must be sorted");
  }
  const std::size_t need = multiplier_table_bytes(grid, kernel.id, lags.size());
  if (need > opt.memory_cap_bytes) {
    std::ostringstream msg;
    msg << "build_multiplier_table: " << need << " bytes exceeds memory cap "
        << opt.memory_cap_bytes;
    throw std::length_error(msg.str());
  }
  MultiplierTable t{grid, kernel, lags, component_count(kernel.id), {}, {}, {}};
  if (lags.empty()) return t;
  PaddedConvolver conv(grid);
  for (double lag : lags) {
    double org = 0.0, wmax = 0.0;
    t.spectra.push_back(kernel_spectra(conv, kernel, lag, &org, &wmax));
    t.origin_values.push_back(org);
    t.max_weight.push_back(wmax);
  }
  return t;
}

Field convolve(const PaddedConvolver& conv, const std::vector<Spectrum>& kernel, const Field& f) {
  if (kernel.size() != 1) throw std::invalid_argument("convolve: scalar kernel expected");
  const Spectrum fh = conv.transform(f.values());
  return Field(f.grid(), conv.extract(kernel[0] * fh));
}

MatrixField convolve_matrix(const PaddedConvolver& conv, const std::vector<Spectrum>& kernel,
                            const Spectrum& f_hat) {
  if (kernel.size() != 6) throw std::invalid_argument("convolve_matrix: matrix kernel expected");
  MatrixField out(conv.grid());
  for (int c = 0; c < 6; ++c) out.comp[c] = conv.extract(kernel[c] * f_hat);
  return out;
}

VectorField convolve_rows(const PaddedConvolver& conv, const std::vector<Spectrum>& kernel,
                          const std::array<Spectrum, 3>& g_hat) {
  if (kernel.size() != 6) throw std::invalid_argument("convolve_rows: matrix kernel expected");
  VectorField out(conv.grid());
  for (int i = 0; i < 3; ++i) {
    Spectrum acc = kernel[MatrixField::slot(i, 0)] * g_hat[0];
    acc += kernel[MatrixField::slot(i, 1)] * g_hat[1];
    acc += kernel[MatrixField::slot(i, 2)] * g_hat[2];
    out.comp[i] = conv.extract(acc);
  }
  return out;
}

Field coulomb_potential(const Field& f) {
  PaddedConvolver conv(f.grid());
  return convolve(conv, kernel_spectra(conv, {KernelId::coulomb}, 0.0), f);
}

AnnulusIndex AnnulusIndex::of(const Vec3& v) {
  const double r = v.norm();
  if (!(r > 0.0)) throw std::invalid_argument("AnnulusIndex: v = 0 lies in no annulus");
  int e = 0;
  std::frexp(r, &e);  // r = m 2^e, m in [1/2, 1)
  return {e - 1};
}

// Z(s) = sum_{n != 0} |n|^{-2s} over Z^3, continued by Ewald splitting:
// pi^{-s} G(s) Z(s) = -1/s + 1/(s - 3/2) + sum_{n != 0} [g(s, n) + g(3/2 - s, n)],
// g(a, n) = Gamma(a, pi n^2) (pi n^2)^{-a}. Valid for s in {1/2, 1}.
double lattice_zeta(double s) {
  auto upper_gamma = [](double a, double x) {
    if (a == 1.0) return std::exp(-x);
    if (a == 0.5) return std::sqrt(kPi) * std::erfc(std::sqrt(x));
    throw std::invalid_argument("lattice_zeta: unsupported order");
  };
  double acc = -1.0 / s + 1.0 / (s - 1.5);
  const int M = 6;
  for (int i = -M; i <= M; ++i)
    for (int j = -M; j <= M; ++j)
      for (int k = -M; k <= M; ++k) {
        const int n2 = i * i + j * j + k * k;
        if (n2 == 0) continue;
        const double x = kPi * n2;
        acc += upper_gamma(s, x) * std::pow(x, -s) + upper_gamma(1.5 - s, x) * std::pow(x, s - 1.5);
      }
  return acc * std::pow(kPi, s) / std::tgamma(s);
}

namespace {

// Trigonometric interpolation of f onto the R-times finer lattice.
Eigen::ArrayXd upsample(const Field& f, int R) {
  const int n = f.grid().points_per_axis();
  const int m = R * n;
  ComplexFft3 coarse(n), fine(m);
  Eigen::ArrayXcd in = f.values().cast<Cplx>();
  Eigen::ArrayXcd spec(coarse.size());
  coarse.forward(in.data(), spec.data());
  Eigen::ArrayXcd big = Eigen::ArrayXcd::Zero(fine.size());
  auto targets = [&](int idx) {
    const int s = idx < n / 2 ? idx : idx - n;
    std::vector<std::pair<int, double>> out;
    if (s == -n / 2) {
      out.push_back({m - n / 2, 0.5});
      out.push_back({n / 2, 0.5});
    } else {
      out.push_back({s >= 0 ? s : m + s, 1.0});
    }
    return out;
  };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const Cplx val = spec((std::size_t(a) * n + b) * n + c);
        for (auto [ia, wa] : targets(a))
          for (auto [ib, wb] : targets(b))
            for (auto [ic, wc] : targets(c))
              big((std::size_t(ia) * m + ib) * m + ic) += val * (wa * wb * wc);
      }
  Eigen::ArrayXcd out(fine.size());
  fine.inverse(big.data(), out.data());
  return out.real() / double(f.grid().size());
}

}  // namespace

double dyadic_singular_convolution(const Field& f, int p, std::size_t node, const DyadicOptions& opt) {
  if (p != 1 && p != 2) throw std::invalid_argument("dyadic_singular_convolution: p must be 1 or 2");
  if (opt.refine < 1) throw std::invalid_argument("dyadic_singular_convolution: refinement factor must be >= 1");
  if (!(opt.local_cells > 0.0)) throw std::invalid_argument("dyadic_singular_convolution: local radius must be positive");
  const VelocityGrid& g = f.grid();
  const int n = g.points_per_axis();
  const double h = g.spacing();
  const double L = g.half_width();
  const Vec3 v = g.node(node);
  const bool centered = v.norm() == 0.0;
  const int j = centered ? 0 : AnnulusIndex::of(v).j;
  const double r_loc = opt.local_cells * h;

  // Smooth partition: the ball around v and the annuli j-1..j+1, each glued by
  // kappa, go to the fine level; the complement stays on the coarse lattice.
  auto near = [&](const Vec3& x) {
    const double loc = kappa((x - v).norm() / r_loc);
    const double r = x.norm();
    const double ann = centered ? 0.0 : kappa(r / std::ldexp(1.0, j + 2)) - kappa(r / std::ldexp(1.0, j - 1));
    return 1.0 - (1.0 - loc) * (1.0 - ann);
  };

  double far = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i == node) continue;
    const Vec3 x = g.node(i);
    const double w = 1.0 - near(x);
    if (w > 0.0) far += f[i] * w * std::pow((x - v).norm(), -p);
  }
  far *= g.cell_volume();

  // Punctured trapezoid rule on the fine lattice; the zeta weight at v makes it
  // high order for the |w|^{-p} singularity.
  const int R = opt.refine;
  const int m = R * n;
  const double hf = h / R;
  const Eigen::ArrayXd fine = R == 1 ? f.values() : upsample(f, R);
  double acc = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        const Vec3 x(-L + a * hf, -L + b * hf, -L + c * hf);
        const double d = (x - v).norm();
        if (d < 0.5 * hf) continue;
        const double w = near(x);
        if (w > 0.0) acc += fine((std::size_t(a) * m + b) * m + c) * w * std::pow(d, -p);
      }
  const double z = -lattice_zeta(0.5 * p);
  return far + acc * hf * hf * hf + z * std::pow(hf, 3 - p) * f[node];
}

}  // namespace nmkl
