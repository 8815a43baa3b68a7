#include "nmkl/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace nmkl;

TEST_SUITE("quadrature") {
  TEST_CASE("gauss-kronrod integrates smooth functions") {
    CHECK(integrate([](double x) { return x * x * x - 2.0 * x; }, 0.0, 2.0).value ==
          doctest::Approx(0.0).epsilon(1e-14));
    const double s = integrate([](double x) { return std::sin(x); }, 0.0, M_PI).value;
    CHECK(std::abs(s - 2.0) < 1e-12);
    // x^{-1/2} has an integrable endpoint singularity.
    const double r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0).value;
    CHECK(std::abs(r - 2.0) < 1e-8);
  }

  TEST_CASE("breakpoints and half-line map") {
    const double v = integrate([](double x) { return std::abs(x - 0.3); }, std::vector<double>{0.0, 0.3, 1.0}).value;
    CHECK(std::abs(v - (0.045 + 0.245)) < 1e-14);
    const double e = integrate_to_infinity([](double x) { return std::exp(-x); }, 0.0).value;
    CHECK(std::abs(e - 1.0) < 1e-10);
    const double c = integrate_to_infinity([](double x) { return 1.0 / (1.0 + x * x); }, 0.0).value;
    CHECK(std::abs(c - M_PI / 2) < 1e-9);
  }

  TEST_CASE("complex and matrix valued integrands") {
    const auto z = integrate([](double t) { return std::exp(std::complex<double>(-1.0, 2.0) * t); }, 0.0, 30.0).value;
    CHECK(std::abs(z - 1.0 / std::complex<double>(1.0, -2.0)) < 1e-10);
    // A lambda returning an Eigen expression.
    const Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
    const auto m = integrate([&](double x) { return a * x; }, 0.0, 1.0).value;
    CHECK(std::abs(m(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(m(0, 1)) < 1e-14);
  }

  TEST_CASE("non-convergence is reported") {
    QuadOptions o;
    o.max_intervals = 4;
    o.rel_tol = 1e-14;
    CHECK_THROWS_AS(integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, o), QuadratureError);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, std::vector<double>{1.0}), std::invalid_argument);
  }

  TEST_CASE("gauss-legendre rules") {
    for (int n : {1, 4, 16, 32}) {
      const GaussRule& g = gauss_legendre(n);
      REQUIRE(g.nodes.size() == std::size_t(n));
      double w = 0.0, m = 0.0;
      for (int i = 0; i < n; ++i) {
        w += g.weights[i];
        m += g.weights[i] * std::pow(g.nodes[i], 2 * n - 2);
      }
      CHECK(std::abs(w - 2.0) < 1e-13);
      CHECK(std::abs(m - 2.0 / (2 * n - 1)) < 1e-13);
    }
    const GaussRule c = composite_gauss(0.0, 3.0, 5, 8);
    CHECK(c.nodes.size() == 40);
    double acc = 0.0;
    for (std::size_t i = 0; i < c.nodes.size(); ++i) acc += c.weights[i] * std::exp(c.nodes[i]);
    CHECK(std::abs(acc - (std::exp(3.0) - 1.0)) < 1e-12);
  }

  TEST_CASE("cube average over the centered cube") {
    for (double h : {1.0, 0.3}) {
      CHECK(std::abs(cube_average_radial([](double) { return 1.0; }, h) - 1.0) < 1e-13);
      // mean of |y|^2 over [-h/2, h/2]^3 is h^2/4.
      CHECK(std::abs(cube_average_radial([](double r) { return r * r; }, h) - h * h / 4) < 1e-13);
    }
    // 1/r against a brute midpoint sum over 60^3 sub-cells (error O(1/60^2)).
    double brute = 0.0;
    const int n = 60;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double x = (i + 0.5) / n - 0.5, y = (j + 0.5) / n - 0.5, z = (k + 0.5) / n - 0.5;
          brute += 1.0 / std::sqrt(x * x + y * y + z * z);
        }
    brute /= double(n) * n * n;
    CHECK(std::abs(cube_average_radial([](double r) { return 1.0 / r; }, 1.0) - brute) < 2e-3);
    const auto cz = cube_average_radial([](double r) { return std::complex<double>(r * r, -r * r); }, 2.0);
    CHECK(std::abs(cz - std::complex<double>(1.0, -1.0)) < 1e-13);
  }
}
