#include "nmkl/spectral.hpp"

#include "nmkl/fft.hpp"
#include "nmkl/nonmarkov.hpp"
#include "nmkl/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace nmkl {

namespace {

constexpr Cplx kI(0.0, 1.0);

Cplx trapezoid_transform(const std::vector<double>& vals, double dt, Cplx z) {
  const std::size_t n = vals.size();
  if (n < 2) return 0.0;
  const Cplx q = std::exp(-z * dt);
  Cplx e = 1.0, acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    acc += (w * vals[k]) * e;
    e *= q;
  }
  return acc * dt;
}

ComplexField trapezoid_transform(const FieldHistory& f, Cplx z) {
  ComplexField out(f.grid());
  const std::size_t n = f.size();
  if (n < 2) return out;
  const Cplx q = std::exp(-z * f.dt);
  Cplx e = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    out.values() += (w * f.dt * e) * f.frames[k].values().cast<Cplx>();
    e *= q;
  }
  return out;
}

void check_history(const FieldHistory& f, const char* what) {
  if (f.frames.empty()) throw std::invalid_argument(std::string(what) + ": empty history");
  if (!(f.dt > 0.0)) throw std::invalid_argument(std::string(what) + ": dt must be positive");
  for (const auto& fr : f.frames)
    if (fr.grid() != f.grid()) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

void require_support(const FieldHistory& f, const char* what) {
  if (!compactly_supported(f))
    throw SpectralError(std::string(what) + ": history must vanish at its last sample");
}

// Tail estimate from an omega^-2 fit on the outer half of a window sampled at
// the given nodes; even selects a one-sided [0, Omega] rule mirrored to both sides.
WindowIntegral finish_window(const GaussRule& rule, const std::vector<double>& vals, double Omega,
                             double tail_tol, bool even, const char* what) {
  WindowIntegral out;
  double c = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    out.value += rule.weights[i] * vals[i];
    const double w = std::abs(rule.nodes[i]);
    if (w >= 0.5 * Omega) {
      c += w * w * vals[i];
      ++count;
    }
  }
  if (even) out.value *= 2.0;
  if (count > 0) out.tail = (c / count) * 2.0 / Omega;
  if (std::abs(out.tail) > tail_tol * std::abs(out.value) && std::abs(out.tail) > 1e-300) {
    std::ostringstream msg;
    msg << what << ": frequency window too small (tail estimate " << out.tail << " against "
        << out.value << " at Omega = " << Omega << ")";
    throw SpectralError(msg.str());
  }
  return out;
}

void check_window(const OmegaWindow& w) {
  if (!(w.Omega > 0.0) || w.panels < 1 || w.order < 1 || !(w.tail_tol > 0.0))
    throw std::invalid_argument("OmegaWindow: Omega, panels, order and tail_tol must be positive");
}

Eigen::ArrayXd lambda_values(const VelocityGrid& g, WeightKind kind) {
  Eigen::ArrayXd w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w(i) = weight_value(kind, g.node(i));
  return w;
}

// Real and imaginary parts of the padded (M1+M2)(z, .) lattice kernel.
struct ComplexKernel {
  std::vector<Spectrum> re, im;
};

ComplexKernel m_sum_spectra(const PaddedConvolver& conv, Cplx z) {
  const int P = conv.padded();
  const std::size_t n = std::size_t(P) * P * P;
  std::vector<Eigen::ArrayXd> re(6, Eigen::ArrayXd::Zero(n)), im(6, Eigen::ArrayXd::Zero(n));
  const Cplx org = m_sum_cell_average(z, conv.grid().spacing());
  constexpr int kRow[6] = {0, 0, 0, 1, 1, 2};
  constexpr int kCol[6] = {0, 1, 2, 1, 2, 2};
  conv.for_each_offset([&](std::size_t i, const Vec3& w, bool origin) {
    if (origin) {
      for (int c : {0, 3, 5}) {
        re[c](i) = org.real();
        im[c](i) = org.imag();
      }
      return;
    }
    const CMat3 M = m1_m2<Cplx>(z, w).sum();
    for (int c = 0; c < 6; ++c) {
      re[c](i) = M(kRow[c], kCol[c]).real();
      im[c](i) = M(kRow[c], kCol[c]).imag();
    }
  });
  ComplexKernel out;
  for (int c = 0; c < 6; ++c) {
    out.re.push_back(conv.transform_padded(re[c]));
    out.im.push_back(conv.transform_padded(im[c]));
  }
  return out;
}

// Direct lattice sum of (M1+M2)(z, v - v') f(v') h^3 at one node.
template <typename Values>
CMat3 m_sum_at_node(const VelocityGrid& g, const Values& f, Cplx z, Cplx org, std::size_t node) {
  const Vec3 v = g.node(node);
  CMat3 acc = CMat3::Zero();
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (f(j) == 0.0) continue;
    if (j == node) {
      acc += (org * Cplx(f(j))) * CMat3::Identity();
      continue;
    }
    acc += m1_m2<Cplx>(z, v - g.node(j)).sum() * Cplx(f(j));
  }
  return acc * g.cell_volume();
}

}  // namespace

Series Series::sample(double dt, std::size_t count, const std::function<double(double)>& f) {
  Series s{dt, std::vector<double>(count)};
  for (std::size_t k = 0; k < count; ++k) s.values[k] = f(k * dt);
  return s;
}

FieldHistory FieldHistory::sample(const VelocityGrid& grid, double dt, std::size_t count,
                                  const std::function<double(double, const Vec3&)>& f) {
  FieldHistory h{dt, {}};
  h.frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = k * dt;
    h.frames.push_back(Field::sample(grid, [&](const Vec3& v) { return f(t, v); }));
  }
  return h;
}

bool compactly_supported(const Series& f, double rel) {
  if (f.values.empty()) return true;
  double mx = 0.0;
  for (double x : f.values) mx = std::max(mx, std::abs(x));
  return std::abs(f.values.back()) <= rel * mx;
}

bool compactly_supported(const FieldHistory& f, double rel) {
  if (f.frames.empty()) return true;
  double mx = 0.0;
  for (const auto& fr : f.frames) mx = std::max(mx, fr.values().abs().maxCoeff());
  return f.frames.back().values().abs().maxCoeff() <= rel * mx;
}

Cplx laplace_transform(const Series& f, Cplx z) {
  if (!(f.dt > 0.0)) throw std::invalid_argument("laplace_transform: dt must be positive");
  if (z.real() <= 0.0 && !compactly_supported(f))
    throw SpectralError("laplace_transform: Re z <= 0 needs a compactly supported series");
  return trapezoid_transform(f.values, f.dt, z);
}

ComplexField laplace_transform(const FieldHistory& f, Cplx z) {
  check_history(f, "laplace_transform");
  if (z.real() <= 0.0 && !compactly_supported(f))
    throw SpectralError("laplace_transform: Re z <= 0 needs a compactly supported history");
  return trapezoid_transform(f, z);
}

LaplaceLine laplace_line(const Series& f, double A, const std::vector<double>& omega) {
  LaplaceLine line{A, omega, {}};
  line.values.reserve(omega.size());
  for (double w : omega) line.values.push_back(laplace_transform(f, Cplx(0.5 * A, w)));
  return line;
}

WindowIntegral window_integrate(const std::function<double(double)>& f, const OmegaWindow& w) {
  check_window(w);
  const GaussRule rule = composite_gauss(-w.Omega, w.Omega, w.panels, w.order);
  std::vector<double> vals(rule.nodes.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = f(rule.nodes[i]);
  return finish_window(rule, vals, w.Omega, w.tail_tol, false, "window_integrate");
}

PlancherelResult plancherel_check(const Series& f, const Series& g, double A,
                                  const OmegaWindow& window) {
  if (!(A > 0.0)) throw std::invalid_argument("plancherel_check: A must be positive");
  if (f.dt != g.dt || !(f.dt > 0.0))
    throw std::invalid_argument("plancherel_check: series need one positive dt");
  check_window(window);
  const std::size_t n = std::max(f.values.size(), g.values.size());
  std::vector<double> fv = f.values, gv = g.values;
  fv.resize(n, 0.0);
  gv.resize(n, 0.0);

  PlancherelResult out;
  std::vector<double> prod(n);
  for (std::size_t k = 0; k < n; ++k) prod[k] = fv[k] * gv[k];
  out.lhs = trapezoid_transform(prod, f.dt, Cplx(A, 0.0)).real();

  const GaussRule rule = composite_gauss(-window.Omega, window.Omega, window.panels, window.order);
  std::vector<double> vals(rule.nodes.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const Cplx z(0.5 * A, rule.nodes[i]);
    const Cplx lf = trapezoid_transform(fv, f.dt, z);
    const Cplx lg = trapezoid_transform(gv, f.dt, z);
    vals[i] = (std::conj(lf) * lg).real() / (2.0 * kPi);
  }
  const WindowIntegral wi =
      finish_window(rule, vals, window.Omega, window.tail_tol, false, "plancherel_check");
  out.tail = wi.tail;
  out.rhs = wi.value + wi.tail;
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

WeightEval weights(Cplx z, const Vec3& v) {
  const double s = 1.0 + v.norm();
  WeightEval w;
  w.alpha = std::abs(z.imag()) / s;
  w.beta = std::abs(z.real()) / s;
  const double a1 = 1.0 + w.alpha;
  w.C1 = 1.0 / (s * a1 * a1);
  w.C2 = (w.beta + w.alpha * w.alpha) / (s * a1 * a1 * a1 * a1);
  return w;
}

double anisotropic_norm(const CVec3& W, const Vec3& v) {
  const double r = v.norm();
  if (!(r > 0.0)) throw std::invalid_argument("anisotropic_norm: v must be nonzero");
  const Vec3 e = v / r;
  const CVec3 par = e.cast<Cplx>() * e.cast<Cplx>().dot(W);
  return (W - par).norm() + par.norm() / (1.0 + r);
}

double b1_form(Cplx z, const Vec3& v, const CVec3& V, const CVec3& W) {
  const double r = v.norm();
  if (!(r > 0.0)) throw std::invalid_argument("b1_form: v must be nonzero");
  const WeightEval w = weights(z, v);
  const Vec3 e = v / r;
  const double pv = std::abs(e.cast<Cplx>().dot(V));
  const double pw = std::abs(e.cast<Cplx>().dot(W));
  return w.C1 * anisotropic_norm(V, v) * anisotropic_norm(W, v) + w.C2 * pv * pw;
}

DissipationValue dissipation(const FieldHistory& u, int alpha_order, double eps, double A,
                             double gamma, const OmegaWindow& window) {
  check_history(u, "dissipation");
  require_support(u, "dissipation");
  if (alpha_order != 0 && alpha_order != 1)
    throw std::invalid_argument("dissipation: alpha_order must be 0 or 1");
  if (!(eps > 0.0) || !(A > 0.0)) throw std::invalid_argument("dissipation: eps and A must be positive");
  check_window(window);
  const VelocityGrid& g = u.grid();
  const Eigen::ArrayXd lam = lambda_values(g, WeightKind::lambda);
  const std::size_t origin = g.origin_index();

  auto integrand = [&](double om) {
    const Cplx z(0.5 * A, om);
    const ComplexField Lu = trapezoid_transform(u, z);
    std::vector<ComplexField> parts;
    if (alpha_order == 0) {
      parts.push_back(Lu);
    } else {
      const ComplexVectorField d = mollified_gradient(Lu, 0.0);
      for (int j = 0; j < 3; ++j) parts.emplace_back(g, d.comp[j]);
    }
    double acc = 0.0;
    for (const auto& p : parts) {
      const ComplexVectorField G = mollified_gradient(p, gamma);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const CVec3 W = G.at(i);
        if (i == origin) {
          acc += weights(eps * z, Vec3::Zero()).C1 * W.squaredNorm() * lam(i);
          continue;
        }
        const Vec3 v = g.node(i);
        const WeightEval w = weights(eps * z, v);
        const Vec3 e = v.normalized();
        const Cplx pw = e.cast<Cplx>().dot(W);
        const double par = std::abs(pw);
        const double perp = (W - e.cast<Cplx>() * pw).norm();
        const double an = perp + par / (1.0 + v.norm());
        acc += (w.C1 * an * an + w.C2 * par * par) * lam(i);
      }
    }
    return acc * g.cell_volume();
  };

  const GaussRule rule = composite_gauss(-window.Omega, window.Omega, window.panels, window.order);
  DissipationValue out;
  out.omega = rule.nodes;
  out.partial.resize(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) out.partial[i] = integrand(rule.nodes[i]);
  const WindowIntegral wi =
      finish_window(rule, out.partial, window.Omega, window.tail_tol, false, "dissipation");
  out.value = wi.value;
  out.tail = wi.tail;
  return out;
}

Cplx m_sum_cell_average(Cplx z, double h) {
  if (z.real() < 0.0) throw std::invalid_argument("m_sum_cell_average: Re z must be >= 0");
  auto s = [z](double r) {
    const Cplx d = z + r;
    return kKernelScale * (2.0 / d + z / (d * d)) / 3.0;
  };
  QuadOptions opt;
  opt.abs_tol = 1e-14;
  return cube_average_radial(s, h, opt);
}

Mat3 coercivity_matrix(const Field& u0, Cplx z, std::size_t node) {
  const Cplx org = m_sum_cell_average(z, u0.grid().spacing());
  return m_sum_at_node(u0.grid(), u0.values(), z, org, node).real();
}

CoercivityReport coercivity_check(const Field& u0, const std::vector<Cplx>& z,
                                  std::size_t nodes_per_z, std::uint64_t seed) {
  const VelocityGrid& g = u0.grid();
  const double mx = u0.values().abs().maxCoeff();
  if (u0.values().minCoeff() < -1e-14 * mx)
    throw std::invalid_argument("coercivity_check: u0 must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  CoercivityReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const Cplx zz : z) {
    if (zz.real() < 0.0) throw std::invalid_argument("coercivity_check: Re z must be >= 0");
    const Cplx org = m_sum_cell_average(zz, g.spacing());
    for (std::size_t s = 0; s < nodes_per_z; ++s) {
      const std::size_t node = pick(rng);
      const Mat3 M = m_sum_at_node(g, u0.values(), zz, org, node).real();
      const double ev = Eigen::SelfAdjointEigenSolver<Mat3>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
      ++rep.samples;
      if (ev < rep.min_eigenvalue) {
        rep.min_eigenvalue = ev;
        rep.z_at_min = zz;
        rep.v_at_min = g.node(node);
      }
    }
  }
  if (rep.samples == 0) rep.min_eigenvalue = 0.0;
  return rep;
}

namespace {

void check_q_inputs(const FieldHistory& u, const FieldHistory& f, double eps, double A) {
  check_history(u, "q_functional");
  check_history(f, "q_functional");
  if (u.dt != f.dt || u.size() != f.size() || u.grid() != f.grid())
    throw std::invalid_argument("q_functional: histories must share dt, length and grid");
  if (u.size() < 2) throw std::invalid_argument("q_functional: need at least two samples");
  if (!(eps > 0.0) || !(A > 0.0)) throw std::invalid_argument("q_functional: eps and A must be positive");
  require_support(u, "q_functional");
  require_support(f, "q_functional");
}

}  // namespace

QParts q_functional(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                    double gamma) {
  check_q_inputs(u, coeff, eps, A);
  const VelocityGrid& g = u.grid();
  const PaddedConvolver conv(g);
  const std::size_t n = u.size();
  const double dt = u.dt;
  const Eigen::ArrayXd lam = lambda_values(g, WeightKind::lambda);

  std::vector<VectorField> X, Y;
  std::vector<Spectrum> nu_hat;
  std::vector<std::array<Spectrum, 3>> dnu_hat;
  std::vector<std::vector<Spectrum>> K;
  for (std::size_t k = 0; k < n; ++k) {
    X.push_back(mollified_gradient(Field(g, lam * u.frames[k].values()), gamma));
    Y.push_back(mollified_gradient(u.frames[k], gamma));
    nu_hat.push_back(conv.transform(coeff.frames[k].values()));
    const VectorField dn = mollified_gradient(coeff.frames[k], 0.0);
    std::array<Spectrum, 3> dh;
    for (int d = 0; d < 3; ++d) dh[d] = conv.transform(dn.comp[d]);
    dnu_hat.push_back(std::move(dh));
    K.push_back(kernel_spectra(conv, {KernelId::memory}, k * dt / eps));
  }

  const std::vector<double> tw = trapezoid_weights(n, dt);
  QParts q;
  for (std::size_t m = 1; m < n; ++m) {
    const std::vector<double> wk = trapezoid_weights(m + 1, dt);
    VectorField ZK(g), ZP(g);
    for (std::size_t k = 0; k <= m; ++k) {
      const MatrixField M = convolve_matrix(conv, K[m - k], nu_hat[k]);
      const VectorField R = convolve_rows(conv, K[m - k], dnu_hat[k]);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) ZK.comp[i] += wk[k] * M.comp[MatrixField::slot(i, j)] * Y[k].comp[j];
        ZP.comp[i] += wk[k] * R.comp[i] * u.frames[k].values();
      }
    }
    const double c = tw[m] * std::exp(-A * m * dt) * g.cell_volume() / eps;
    for (int i = 0; i < 3; ++i) {
      q.K += c * (X[m].comp[i] * ZK.comp[i]).sum();
      q.P -= c * (X[m].comp[i] * ZP.comp[i]).sum();
    }
  }
  return q;
}

namespace {

struct LaplaceQ {
  QParts q;
  double tail = 0.0;
};

LaplaceQ q_laplace_impl(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                        double gamma, const QOptions& opt) {
  check_q_inputs(u, coeff, eps, A);
  check_window(opt.window);
  const VelocityGrid& g = u.grid();
  const PaddedConvolver conv(g);
  const std::size_t n = u.size(), nv = g.size();
  const double dt = u.dt, a = 0.5 * A;
  const Eigen::ArrayXd lam = lambda_values(g, WeightKind::lambda);

  // Coefficient history factored as sum_r kappa_r(t) g_r(v).
  Eigen::MatrixXd nu(n, nv);
  for (std::size_t k = 0; k < n; ++k) nu.row(k) = coeff.frames[k].values().matrix().transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(nu, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  LaplaceQ out;
  if (sv.size() == 0 || sv(0) == 0.0) return out;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > opt.rank_tol * sv(0)) ++rank;

  const GaussRule theta = composite_gauss(-opt.window.Omega, opt.window.Omega, opt.window.panels,
                                          opt.window.order);
  const GaussRule omega =
      composite_gauss(0.0, opt.window.Omega, std::max(1, opt.window.panels / 2), opt.window.order);
  const std::size_t nt = theta.nodes.size(), nw = omega.nodes.size();

  // Columns: L u and its mollified gradient at p = a + i theta_j.
  Eigen::MatrixXcd LU(nv, nt), LY(3 * nv, nt);
  for (std::size_t j = 0; j < nt; ++j) {
    const ComplexField lu = trapezoid_transform(u, Cplx(a, theta.nodes[j]));
    LU.col(j) = lu.values().matrix();
    const ComplexVectorField ly = mollified_gradient(lu, gamma);
    for (int d = 0; d < 3; ++d) LY.col(j).segment(d * nv, nv) = ly.comp[d].matrix();
  }

  std::vector<double> fK(nw, 0.0), fP(nw, 0.0);
  std::vector<Eigen::MatrixXcd> S(rank), T(rank);
  std::vector<Spectrum> g_hat(rank);
  std::vector<std::array<Spectrum, 3>> dg_hat(rank);
  for (int r = 0; r < rank; ++r) {
    std::vector<double> kap(n);
    for (std::size_t k = 0; k < n; ++k) kap[k] = sv(r) * svd.matrixU()(k, r);
    // (1/2pi) w_j kappa_hat(omega_i - theta_j)
    Eigen::MatrixXcd KH(nt, nw);
    for (std::size_t i = 0; i < nw; ++i)
      for (std::size_t j = 0; j < nt; ++j)
        KH(j, i) = theta.weights[j] / (2.0 * kPi) *
                   trapezoid_transform(kap, dt, Cplx(0.0, omega.nodes[i] - theta.nodes[j]));
    S[r] = LY * KH;
    T[r] = LU * KH;
    const Field gr(g, svd.matrixV().col(r).array());
    g_hat[r] = conv.transform(gr.values());
    const VectorField dg = mollified_gradient(gr, 0.0);
    for (int d = 0; d < 3; ++d) dg_hat[r][d] = conv.transform(dg.comp[d]);
  }

  for (std::size_t i = 0; i < nw; ++i) {
    const Cplx z(a, omega.nodes[i]);
    const ComplexField lu = trapezoid_transform(u, z);
    const ComplexVectorField LX = mollified_gradient(ComplexField(g, lam.cast<Cplx>() * lu.values()), gamma);
    const ComplexKernel M = m_sum_spectra(conv, eps * z);
    Cplx accK = 0.0, accP = 0.0;
    for (int r = 0; r < rank; ++r) {
      const MatrixField Cre = convolve_matrix(conv, M.re, g_hat[r]);
      const MatrixField Cim = convolve_matrix(conv, M.im, g_hat[r]);
      const VectorField Dre = convolve_rows(conv, M.re, dg_hat[r]);
      const VectorField Dim = convolve_rows(conv, M.im, dg_hat[r]);
      for (int p = 0; p < 3; ++p) {
        Eigen::ArrayXcd zk = Eigen::ArrayXcd::Zero(nv);
        for (int q = 0; q < 3; ++q) {
          const int s = MatrixField::slot(p, q);
          zk += (Cre.comp[s].cast<Cplx>() + kI * Cim.comp[s].cast<Cplx>()) *
                S[r].col(i).segment(q * nv, nv).array();
        }
        const Eigen::ArrayXcd zp =
            (Dre.comp[p].cast<Cplx>() + kI * Dim.comp[p].cast<Cplx>()) * T[r].col(i).array();
        accK += (LX.comp[p].conjugate() * zk).sum();
        accP += (LX.comp[p].conjugate() * zp).sum();
      }
    }
    fK[i] = accK.real() * g.cell_volume() / (2.0 * kPi);
    fP[i] = -accP.real() * g.cell_volume() / (2.0 * kPi);
  }
  const WindowIntegral wk =
      finish_window(omega, fK, opt.window.Omega, opt.window.tail_tol, true, "q_functional");
  const WindowIntegral wp =
      finish_window(omega, fP, opt.window.Omega, opt.window.tail_tol, true, "q_functional");
  out.q = {wk.value, wp.value};
  out.tail = std::abs(wk.tail) + std::abs(wp.tail);
  return out;
}

}  // namespace

QParts q_functional_laplace(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                            double gamma, const QOptions& opt) {
  return q_laplace_impl(u, coeff, eps, A, gamma, opt).q;
}

QCrossCheck q_cross_check(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                          double gamma, const QOptions& opt) {
  QCrossCheck c;
  c.time = q_functional(u, coeff, eps, A, gamma);
  // Richardson estimate of the O(dt^2) time-domain error from every other frame;
  // the histories are compactly supported, so an odd last frame can be dropped.
  auto coarsen = [](const FieldHistory& h) {
    FieldHistory out{2.0 * h.dt, {}};
    for (std::size_t k = 0; k < h.size(); k += 2) out.frames.push_back(h.frames[k]);
    return out;
  };
  if (u.size() >= 5) {
    const QParts half = q_functional(coarsen(u), coarsen(coeff), eps, A, gamma);
    c.time_error = std::max(std::abs(c.time.K - half.K), std::abs(c.time.P - half.P)) / 3.0;
  } else {
    c.time_error = std::abs(c.time.K) + std::abs(c.time.P);
  }
  const LaplaceQ l = q_laplace_impl(u, coeff, eps, A, gamma, opt);
  c.laplace = l.q;
  c.tail = l.tail;
  c.gap = std::max(std::abs(c.time.K - c.laplace.K), std::abs(c.time.P - c.laplace.P));
  c.tolerance = opt.safety * c.time_error + l.tail;
  return c;
}

CMat3 lambda_operator(const FieldHistory& f, Cplx z, double tau, std::size_t node) {
  check_history(f, "lambda_operator");
  require_support(f, "lambda_operator");
  const VelocityGrid& g = f.grid();
  if (node >= g.size()) throw std::out_of_range("lambda_operator: node out of range");
  const ComplexField fh = trapezoid_transform(f, Cplx(0.0, tau));
  const Cplx org = m_sum_cell_average(z, g.spacing());
  const Vec3 v = g.node(node);
  CMat3 acc = CMat3::Zero();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const Cplx x = fh[j];
    if (x == 0.0) continue;
    if (j == node)
      acc += (org * x) * CMat3::Identity();
    else
      acc += m1_m2<Cplx>(z, v - g.node(j)).sum() * x;
  }
  return acc * g.cell_volume();
}

SymmetrizedKernels symmetrized_kernels(double eps, Cplx z, Cplx p, const Vec3& v) {
  const double a = z.real();
  if (!(a > 0.0)) throw std::invalid_argument("symmetrized_kernels: Re z must be positive");
  if (std::abs(p.real() - a) > 1e-12 * std::max(1.0, a))
    throw std::invalid_argument("symmetrized_kernels: Re p must equal Re z");
  const double r = v.norm();
  if (!(r > 0.0)) throw std::invalid_argument("symmetrized_kernels: v must be nonzero");
  const MPair<Cplx> mz = m1_m2<Cplx>(eps * z, v);
  const MPair<Cplx> mp = m1_m2<Cplx>(eps * std::conj(p), v);
  SymmetrizedKernels out;
  out.L1 = 0.5 * (mz.m1 + mp.m1);
  out.L2 = 0.5 * (mz.m2 + mp.m2);
  const Cplx dz = 1.0 + eps * z / r;
  const Cplx dp = 1.0 + eps * std::conj(p) / r;
  const Cplx c = eps * Cplx(a, p.imag() - z.imag()) / (r * r * dz * dz * dp * dp);
  out.N1 = c * parallel_projector<Cplx>(v);
  out.N2 = out.L2 - out.N1;
  return out;
}

double loggain_integral(double R, double eps, double tol) {
  if (!(R > 0.0)) throw std::invalid_argument("loggain_integral: R must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("loggain_integral: eps must be in (0,1)");
  auto f = [eps](double t) { return eps * t / ((1.0 + eps * t) * (1.0 + t) * (1.0 + t)); };
  QuadOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = tol;
  const double x = 1.0 / eps;
  const double head = integrate(f, std::vector<double>{0.0, 1.0, x}, opt).value;
  const double tail = integrate_to_infinity(f, x, opt).value;
  return 2.0 * R * (head + tail);
}

DomainNorms domain_norms(const FieldHistory& f, double eps, double A, int n_eff,
                         const std::vector<double>& omega) {
  check_history(f, "domain_norms");
  if (!(eps > 0.0) || !(A > 0.0)) throw std::invalid_argument("domain_norms: eps and A must be positive");
  if (n_eff < 0) throw std::invalid_argument("domain_norms: n_eff must be >= 0");
  const VelocityGrid& g = f.grid();
  Eigen::ArrayXd ev(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) ev(i) = std::exp(0.5 * g.node(i).norm());

  std::vector<std::array<int, 3>> betas;
  const int order = std::min(n_eff, 2);
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b)
      for (int c = 0; a + b + c <= order; ++c) betas.push_back({a, b, c});

  DomainNorms out;
  for (double om : omega) {
    const Cplx z(0.5 * A, om);
    const ComplexField L = trapezoid_transform(f, z);
    const Field re(g, L.values().real()), im(g, L.values().imag());
    const double az = std::abs(z);
    const double base = 1.0 + az * az;
    for (const auto& beta : betas) {
      const Eigen::ArrayXd dr = spectral_derivative(re, beta).values();
      const Eigen::ArrayXd di = spectral_derivative(im, beta).values();
      const double s = ((dr.square() + di.square()).sqrt() * ev).maxCoeff() * base;
      out.E = std::max(out.E, s);
      out.F = std::max(out.F, s * (1.0 + eps * az) / (eps * az));
      out.G = std::max(out.G, s * (1.0 + eps * az));
    }
  }

  const std::size_t n = f.size();
  const std::vector<double> tw = trapezoid_weights(n, f.dt);
  double v0 = 0.0, v1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::exp(-A * k * f.dt);
    const double a = weighted_sobolev_norm(f.frames[k], WeightKind::lambda_tilde, n_eff);
    v0 += tw[k] * e * a * a;
    if (n < 2) continue;
    Field dtf(g);
    if (k == 0)
      dtf.values() = (f.frames[1].values() - f.frames[0].values()) / f.dt;
    else if (k + 1 == n)
      dtf.values() = (f.frames[k].values() - f.frames[k - 1].values()) / f.dt;
    else
      dtf.values() = (f.frames[k + 1].values() - f.frames[k - 1].values()) / (2.0 * f.dt);
    const double b = weighted_sobolev_norm(dtf, WeightKind::lambda_tilde, std::max(n_eff - 2, 0));
    v1 += tw[k] * e * b * b;
  }
  out.X = std::sqrt(v0) + std::sqrt(v1);
  return out;
}

std::vector<double> uniform_omegas(double Omega, std::size_t count) {
  std::vector<double> w(count);
  if (count == 1) return {0.0};
  for (std::size_t i = 0; i < count; ++i) w[i] = -Omega + 2.0 * Omega * double(i) / double(count - 1);
  return w;
}

}  // namespace nmkl
