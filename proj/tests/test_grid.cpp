#include "nmkl/grid.hpp"
#include "nmkl/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace nmkl;

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

TEST_SUITE("grid") {
  TEST_CASE("grid construction and enumeration") {
    const VelocityGrid g = build_grid(1.0, 2);
    CHECK(g.size() == 8);
    CHECK(g.spacing() == 1.0);
    std::set<std::array<double, 3>> nodes;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 v = g.node(i);
      for (int d = 0; d < 3; ++d) CHECK((v(d) == -1.0 || v(d) == 0.0));
      nodes.insert({v(0), v(1), v(2)});
    }
    CHECK(nodes.size() == 8);

    const VelocityGrid g16 = build_grid(6.0, 16);
    CHECK(g16.size() == 4096);
    CHECK(g16.spacing() == 0.75);
    CHECK(g16.node(g16.origin_index()).norm() == 0.0);
    CHECK(g16.index(1, 2, 3) == (1 * 16 + 2) * 16 + 3);
    const auto m = g16.multi_index(g16.index(5, 0, 11));
    CHECK(m == std::array<int, 3>{5, 0, 11});

    CHECK_THROWS_AS(build_grid(6.0, 7), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(0.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(-1.0, 8), std::invalid_argument);
  }

  TEST_CASE("maxwellian") {
    const VelocityGrid g(6.0, 24);
    CHECK(maxwellian_value(1.0, 1.0, Vec3::Zero()) == doctest::Approx(std::pow(kTwoPi, -1.5)).epsilon(1e-14));
    CHECK(maxwellian_value(4.0, 1.0, Vec3::Zero()) ==
          doctest::Approx(std::pow(2.0 * std::sqrt(kTwoPi), -3.0)).epsilon(1e-14));
    const Field m = maxwellian(1.0, 1.0, g);
    CHECK(m.is_density());
    // Radial oracle: 4 pi int_0^inf r^2 m(r) dr.
    const double radial =
        4 * M_PI * integrate_to_infinity([](double r) { return r * r * maxwellian_value(1.0, 1.0, Vec3(r, 0, 0)); }, 0.0).value;
    CHECK(std::abs(radial - 1.0) < 1e-10);
    CHECK(std::abs(integral(m) - radial) < 1e-6);
    CHECK_THROWS_AS(maxwellian(0.0, 1.0, g), std::invalid_argument);
    CHECK_THROWS_AS(maxwellian(1.0, -1.0, g), std::invalid_argument);
  }

  TEST_CASE("initial data") {
    const VelocityGrid g(6.0, 8);
    const Field m = maxwellian(1.0, 1.0, g);
    const Field u0 = initial_data(g, 1.0, 1.0, 0.0, V0Kind::exp);
    CHECK((u0.values() == m.values()).all());
    CHECK(u0.is_density());
    const Field u1 = initial_data(g, 1.0, 1.0, 0.1, V0Kind::exp);
    CHECK(u1[g.origin_index()] == doctest::Approx(std::pow(kTwoPi, -1.5) + 0.1).epsilon(1e-14));
    const Field b = initial_data(g, 1.0, 1.0, 0.5, V0Kind::bump);
    CHECK((b.values() >= m.values()).all());

    Field bad(g);
    bad[7] = -1e-3;
    CHECK_THROWS_AS(initial_data(g, 1.0, 1.0, 0.1, bad), std::invalid_argument);
    Field big = Field::sample(g, [](const Vec3& v) { return 10.0 * std::exp(-0.5 * v.norm()); });
    CHECK_THROWS_AS(initial_data(g, 1.0, 1.0, 0.1, big), std::invalid_argument);
    CHECK(parse_v0_kind("bump") == V0Kind::bump);
    CHECK(to_string(V0Kind::exp) == "exp");
    CHECK_THROWS(parse_v0_kind("cosine"));
  }

  TEST_CASE("analytic initial data gradient") {
    const InitialData d{1.5, 2.0, 0.3, V0Kind::exp};
    const Vec3 v(0.4, -0.7, 1.1);
    const double e = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vec3 dv = Vec3::Zero();
      dv(k) = e;
      const double fd = (d.value(v + dv) - d.value(v - dv)) / (2 * e);
      CHECK(std::abs(fd - d.gradient(v)(k)) < 1e-8);
    }
  }

  TEST_CASE("weighted sobolev norm") {
    const VelocityGrid g1(1.0, 8);
    CHECK(weighted_sobolev_norm(Field(g1), WeightKind::lambda, 3) == 0.0);
    Field one(g1);
    one.values() = 1.0;
    CHECK(weighted_sobolev_norm(one, WeightKind::unity, 0) == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-13));

    const VelocityGrid g(6.0, 24);
    const Field m = maxwellian(1.0, 1.0, g);
    const double radial = 4 * M_PI *
                          integrate([](double r) {
                            const double x = maxwellian_value(1.0, 1.0, Vec3(r, 0, 0));
                            return r * r * std::exp(r) * x * x;
                          }, 0.0, 15.0).value;
    CHECK(std::abs(weighted_sobolev_norm(m, WeightKind::lambda, 0) / std::sqrt(radial) - 1.0) < 1e-3);
    double prev = 0.0;
    for (int n = 0; n <= 4; ++n) {
      const double x = weighted_sobolev_norm(m, WeightKind::lambda_tilde, n);
      CHECK(x >= prev);
      prev = x;
    }
  }

  TEST_CASE("spectral derivatives and gradients") {
    const VelocityGrid g(8.0, 32);
    Field c(g);
    c.values() = 3.0;
    for (double gamma : {0.0, 0.5}) {
      const VectorField gr = mollified_gradient(c, gamma);
      for (int d = 0; d < 3; ++d) CHECK(gr.comp[d].abs().maxCoeff() < 1e-12);
    }
    const Field f = Field::sample(g, [](const Vec3& v) { return std::exp(-v.squaredNorm() / 2); });
    const VectorField gr = mollified_gradient(f, 0.0);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 v = g.node(i);
      const Vec3 exact = -v * std::exp(-v.squaredNorm() / 2);
      err = std::max(err, (gr.at(i) - exact).cwiseAbs().maxCoeff());
      scale = std::max(scale, exact.cwiseAbs().maxCoeff());
    }
    CHECK(err / scale < 1e-6);

    // Mollified gradients approach the plain one as gamma -> 0.
    double last = 1e300;
    for (double gamma : {0.5, 0.25, 0.125, 0.0625}) {
      const VectorField gg = mollified_gradient(f, gamma);
      double d2 = 0.0;
      for (int d = 0; d < 3; ++d) d2 += (gg.comp[d] - gr.comp[d]).square().sum();
      CHECK(d2 < last);
      last = d2;
    }

    // div grad f against the analytic Laplacian (|v|^2 - 3) f.
    const Field lap = divergence(gr);
    double le = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 v = g.node(i);
      le = std::max(le, std::abs(lap[i] - (v.squaredNorm() - 3) * f[i]));
    }
    CHECK(le < 1e-5);
    const Field dxy = spectral_derivative(f, {1, 1, 0});
    const std::size_t n = g.index(17, 18, 16);
    const Vec3 v = g.node(n);
    CHECK(std::abs(dxy[n] - v(0) * v(1) * f[n]) < 1e-6);
  }

  TEST_CASE("cutoff") {
    CHECK(cutoff(0.1, 0.05) == 1.0);
    CHECK(cutoff(0.1, 0.25) == 0.0);
    CHECK(cutoff(0.1, -0.05) == 1.0);
    const double mid = cutoff(0.1, 0.15);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    double worst = 0.0;
    for (double s = 0.1; s <= 0.2; s += 1e-3) worst = std::max(worst, std::abs(cutoff(0.1, s + 1e-6) - cutoff(0.1, s - 1e-6)) / 2e-6);
    CHECK(worst < 100.0);
    double prev = 1.0;
    for (double s = 0.0; s <= 2.5; s += 0.01) {
      CHECK(kappa(s) <= prev + 1e-15);
      prev = kappa(s);
    }
    const CutoffKappa k(0.2);
    CHECK(k(0.3) == cutoff(0.2, 0.3));
    CHECK_THROWS_AS(cutoff(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CutoffKappa(-1.0), std::invalid_argument);
  }

  TEST_CASE("field checks") {
    const VelocityGrid g(2.0, 8);
    Field f = maxwellian(1.0, 1.0, g);
    CHECK_NOTHROW(check_field(f, 1e-2, "test"));
    f[3] = -0.5 * f.values().maxCoeff();
    CHECK_THROWS(check_field(f, 1e-2, "test"));
    f[3] = std::nan("");
    CHECK_THROWS(check_field(f, 1e-2, "test"));
    Field a(g), b(VelocityGrid(2.0, 10));
    CHECK_THROWS_AS(a += b, std::invalid_argument);
    CHECK(weight_value(WeightKind::lambda_tilde, Vec3(1, 0, 0)) == doctest::Approx(std::exp(1.0) / 2));
  }
}
