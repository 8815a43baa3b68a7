#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace nmkl {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-10;
  int max_intervals = 2000;
};

template <typename T>
struct QuadResult {
  T value;
  double error = 0.0;
  int evaluations = 0;
};

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& x) { return std::abs(x); }
template <typename Derived>
double magnitude(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseAbs().maxCoeff();
}

namespace detail {

template <typename T, typename = void>
struct plain_value {
  using type = std::decay_t<T>;
};
// Eigen expressions are evaluated into their plain matrix type.
template <typename T>
struct plain_value<T, std::void_t<typename std::decay_t<T>::PlainObject>> {
  using type = typename std::decay_t<T>::PlainObject;
};
template <typename T>
using plain_value_t = typename plain_value<T>::type;

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 constants).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename F>
auto gk15(F& f, double a, double b) {
  using T = plain_value_t<decltype(f(a))>;
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  T fc = f(c);
  T kron = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = r * kXgk[j];
    T s = f(c - dx) + f(c + dx);
    kron = kron + s * kWgk[j];
    if (j % 2 == 1) gauss = gauss + s * kWg[j / 2];
  }
  T value = kron * r;
  T diff = (kron - gauss) * r;
  return Segment<T>{a, b, value, magnitude(diff)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod over [a,b] with optional interior breakpoints.
// Throws QuadratureError if the tolerance is not met within max_intervals.
template <typename F>
auto integrate(F&& f, std::vector<double> points, const QuadOptions& opt = {}) {
  using T = detail::plain_value_t<decltype(f(points.front()))>;
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 2) throw std::invalid_argument("integrate: need an interval");

  std::priority_queue<detail::Segment<T>> heap;
  T total{};
  bool first = true;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    auto seg = detail::gk15(f, points[i], points[i + 1]);
    total = first ? seg.value : T(total + seg.value);
    first = false;
    err += seg.error;
    heap.push(seg);
  }
  int evals = 15 * static_cast<int>(heap.size());
  while (err > std::max(opt.abs_tol, opt.rel_tol * magnitude(total))) {
    if (static_cast<int>(heap.size()) >= opt.max_intervals) {
      throw QuadratureError("adaptive quadrature did not converge: error estimate " +
                            std::to_string(err) + " after " + std::to_string(heap.size()) +
                            " intervals");
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw QuadratureError("adaptive quadrature: interval collapsed at " +
                            std::to_string(worst.a));
    }
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    total = total + (left.value + right.value - worst.value);
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    evals += 30;
  }
  // Re-sum to avoid drift from the incremental updates.
  T sum{};
  double esum = 0.0;
  first = true;
  while (!heap.empty()) {
    sum = first ? heap.top().value : T(sum + heap.top().value);
    first = false;
    esum += heap.top().error;
    heap.pop();
  }
  return QuadResult<T>{sum, esum, evals};
}

template <typename F>
auto integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  return integrate(std::forward<F>(f), std::vector<double>{a, b}, opt);
}

// Integral over [a, inf) via x = a + s/(1-s).
template <typename F>
auto integrate_to_infinity(F&& f, double a, const QuadOptions& opt = {}) {
  auto g = [&](double s) {
    const double om = 1.0 - s;
    return f(a + s / om) * (1.0 / (om * om));
  };
  return integrate(g, 0.0, 1.0, opt);
}

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1,1] (Golub-Welsch); cached per n.
const GaussRule& gauss_legendre(int n);

// Composite Gauss-Legendre nodes on [a,b] with `panels` equal panels.
GaussRule composite_gauss(double a, double b, int panels, int order);

// Average over the centered cube of side h of the radial function s(|w|).
// The cube is split into 24 pyramids with apex at the center, so for each
// transverse Gauss node only the radial primitive int_0^R s(r) r^2 dr is needed;
// this absorbs 1/r and 1/r^2 singularities.
template <typename F>
auto cube_average_radial(F&& s, double h, const QuadOptions& opt = {}, int order = 16) {
  using T = detail::plain_value_t<decltype(s(1.0))>;
  const double c = 0.5 * h;
  auto r2s = [&](double r) { return s(r) * (r * r); };
  const T inner = integrate(r2s, 0.0, c, opt).value;
  const GaussRule& g = gauss_legendre(order);
  T acc{};
  bool first = true;
  for (int a = 0; a < order; ++a) {
    const double sa = 0.5 * (g.nodes[a] + 1.0);
    for (int b = 0; b < order; ++b) {
      const double tb = 0.5 * (g.nodes[b] + 1.0);
      const double q = std::sqrt(1.0 + sa * sa + tb * tb);
      T outer = integrate(r2s, c, c * q, opt).value;
      T term = (inner + outer) * (0.25 * g.weights[a] * g.weights[b] / (q * q * q));
      acc = first ? term : T(acc + term);
      first = false;
    }
  }
  return T(acc * (24.0 / (h * h * h)));
}

}  // namespace nmkl
