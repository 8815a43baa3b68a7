#pragma once

#include "nmkl/grid.hpp"
#include "nmkl/kernels.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nmkl {

// Divergent transforms, insufficient frequency windows, support violations.
class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniform samples f(k dt), k = 0..n-1.
struct Series {
  double dt = 0.0;
  std::vector<double> values;

  static Series sample(double dt, std::size_t count, const std::function<double(double)>& f);
  double end_time() const { return dt * double(values.size() - 1); }
};

// Uniform snapshots frames[k] at t = k dt on one grid.
struct FieldHistory {
  double dt = 0.0;
  std::vector<Field> frames;

  static FieldHistory sample(const VelocityGrid& grid, double dt, std::size_t count,
                             const std::function<double(double, const Vec3&)>& f);
  const VelocityGrid& grid() const { return frames.front().grid(); }
  std::size_t size() const { return frames.size(); }
};

// Last sample negligible against the largest one.
bool compactly_supported(const Series& f, double rel = 1e-12);
bool compactly_supported(const FieldHistory& f, double rel = 1e-12);

// Trapezoid rule for int_0^T f(t) e^{-zt} dt.
Cplx laplace_transform(const Series& f, Cplx z);
ComplexField laplace_transform(const FieldHistory& f, Cplx z);

struct LaplaceLine {
  double A = 0.0;
  std::vector<double> omega;
  std::vector<Cplx> values;  // L f(A/2 + i omega)
};

LaplaceLine laplace_line(const Series& f, double A, const std::vector<double>& omega);

// Symmetric frequency window [-Omega, Omega] with composite Gauss panels. The
// tail beyond Omega is estimated from an omega^-2 fit on |omega| in [Omega/2, Omega].
struct OmegaWindow {
  double Omega = 200.0;
  int panels = 100;
  int order = 16;
  double tail_tol = 1e-2;  // relative; larger tails raise SpectralError
};

struct WindowIntegral {
  double value = 0.0;
  double tail = 0.0;
};

WindowIntegral window_integrate(const std::function<double(double)>& f, const OmegaWindow& w);

struct PlancherelResult {
  double lhs = 0.0;
  double rhs = 0.0;  // includes the tail estimate
  double gap = 0.0;
  double tail = 0.0;
};

// int_0^inf e^{-At} f g dt against (1/2pi) int conj(Lf) Lg on Re z = A/2.
PlancherelResult plancherel_check(const Series& f, const Series& g, double A,
                                  const OmegaWindow& window = {});

struct WeightEval {
  double alpha = 0.0;
  double beta = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
};

WeightEval weights(Cplx z, const Vec3& v);

// |P_v^perp W| + |P_v W| / (1 + |v|).
double anisotropic_norm(const CVec3& W, const Vec3& v);

double b1_form(Cplx z, const Vec3& v, const CVec3& V, const CVec3& W);

struct DissipationValue {
  double value = 0.0;
  double tail = 0.0;
  std::vector<double> omega;
  std::vector<double> partial;  // omega-integrand at each node
};

// int int B1(eps z, v)[G, G] lambda(v) dv domega with G = grad_gamma D^alpha L(u)(z),
// summed over |alpha| = alpha_order. At v = 0, |W|_0 = |W|.
DissipationValue dissipation(const FieldHistory& u, int alpha_order, double eps, double A,
                             double gamma, const OmegaWindow& window = {});

// Cube average over the origin cell of (M1 + M2)(z, w), a multiple of I.
Cplx m_sum_cell_average(Cplx z, double h);

// Re sum_{v'} (M1+M2)(z, v - v') u0(v') h^3 at one node.
Mat3 coercivity_matrix(const Field& u0, Cplx z, std::size_t node);

struct CoercivityReport {
  double min_eigenvalue = 0.0;
  std::size_t samples = 0;
  Cplx z_at_min{0.0, 0.0};
  Vec3 v_at_min = Vec3::Zero();
};

// Minimum eigenvalue over nodes_per_z random nodes for every z.
CoercivityReport coercivity_check(const Field& u0, const std::vector<Cplx>& z,
                                  std::size_t nodes_per_z, std::uint64_t seed = 1);

struct QParts {
  double K = 0.0;
  double P = 0.0;
};

struct QOptions {
  OmegaWindow window{40.0, 40, 16, 5e-2};
  double rank_tol = 1e-10;  // relative singular value cut for the coefficient history
  double safety = 2.0;      // multiplies the Richardson estimate of the time-domain error
};

// Time-domain Q^{0,0}: trapezoid sums of
//   K part:  int e^{-At} <grad(lambda u), (1/eps) int K((t-s)/eps) * f(s) grad u(s) ds> dv dt
//   P part: -int e^{-At} <grad(lambda u), (1/eps) int (K((t-s)/eps) * grad f(s)) u(s) ds> dv dt
// with f the coefficient history and gradients on u mollified by gamma.
QParts q_functional(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                    double gamma);

// The same functional through the frequency representation: the coefficient
// history is factored as sum_r kappa_r(s) g_r(v), and (M1+M2)(eps z) acts in v
// while the time products become convolutions along the Laplace line.
QParts q_functional_laplace(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                            double gamma, const QOptions& opt = {});

struct QCrossCheck {
  QParts time;
  QParts laplace;
  double gap = 0.0;         // max of the two part gaps
  double time_error = 0.0;  // Richardson estimate from the dt / 2dt time-domain sums
  double tail = 0.0;        // frequency-window tails of the Laplace route
  double tolerance = 0.0;   // safety * time_error + tail
  bool agree() const { return gap <= tolerance; }
};

QCrossCheck q_cross_check(const FieldHistory& u, const FieldHistory& coeff, double eps, double A,
                          double gamma, const QOptions& opt = {});

// sum_{v'} (M1+M2)(z, v - v') h^3 int e^{-i tau s} f(s, v') ds at one node.
CMat3 lambda_operator(const FieldHistory& f, Cplx z, double tau, std::size_t node);

struct SymmetrizedKernels {
  CMat3 L1, L2, N1, N2;
};

// z = a + i omega, p = a + i theta with a > 0.
SymmetrizedKernels symmetrized_kernels(double eps, Cplx z, Cplx p, const Vec3& v);

// 2R int_0^inf eps tau / ((1 + eps tau)(1 + tau)^2) dtau.
double loggain_integral(double R, double eps, double tol = 1e-12);

struct DomainNorms {
  double E = 0.0;
  double F = 0.0;
  double G = 0.0;
  double X = 0.0;
};

// Sampled sup-norms over grid nodes, omega samples and |beta| <= n_eff (capped at 2),
// and X = V^{n_eff} + V^{n_eff-2} norm of the time derivative with weight lambda-tilde.
// The sups are lower bounds of the true ones.
DomainNorms domain_norms(const FieldHistory& f, double eps, double A, int n_eff,
                         const std::vector<double>& omega);

// Uniform symmetric samples in [-Omega, Omega].
std::vector<double> uniform_omegas(double Omega, std::size_t count);

}  // namespace nmkl
