#include "nmkl/spectral.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace nmkl;

namespace {

double bump_t(double t) { return std::pow(std::sin(1.5 * t), 2) * kappa(t); }

Field gauss(const VelocityGrid& g, const Vec3& c, double s) {
  return Field::sample(g, [&](const Vec3& v) { return std::exp(-(v - c).squaredNorm() / (2 * s * s)); });
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("laplace transform") {
    const Series e = Series::sample(1e-3, 40001, [](double t) { return std::exp(-t); });
    CHECK(std::abs(laplace_transform(e, 1.0) - 0.5) < 1e-6);
    CHECK(std::abs(laplace_transform(e, Cplx(1, 2)) - 1.0 / Cplx(2, 2)) < 1e-6);
    // Indicator of [0, 1], sampled up to its right end.
    const Series ind = Series::sample(1e-3, 1001, [](double) { return 1.0; });
    const Cplx z(0.5, 3.0);
    CHECK(std::abs(laplace_transform(ind, z) - (1.0 - std::exp(-z)) / z) < 1e-6);

    CHECK_THROWS_AS(laplace_transform(ind, Cplx(0.0, 1.0)), SpectralError);
    CHECK_THROWS_AS(laplace_transform(ind, -1.0), SpectralError);
    const Series c = Series::sample(1e-2, 201, bump_t);
    CHECK(compactly_supported(c));
    CHECK_NOTHROW(laplace_transform(c, Cplx(0.0, 2.0)));

    const VelocityGrid g(2.0, 8);
    const FieldHistory h = FieldHistory::sample(g, 1e-3, 40001, [](double t, const Vec3& v) { return std::exp(-t) * (1 + v.squaredNorm()); });
    const ComplexField L = laplace_transform(h, 1.0);
    const std::size_t n = g.index(1, 5, 6);
    CHECK(std::abs(L[n] - 0.5 * (1 + g.node(n).squaredNorm())) < 1e-5);
    const FieldHistory open = FieldHistory::sample(g, 0.1, 11, [](double, const Vec3&) { return 1.0; });
    CHECK_THROWS_AS(laplace_transform(open, Cplx(0.0, 1.0)), SpectralError);
    const LaplaceLine line = laplace_line(e, 2.0, {0.0, 1.0});
    CHECK(std::abs(line.values[1] - 1.0 / Cplx(2, 1)) < 1e-6);
  }

  TEST_CASE("frequency windows") {
    const WindowIntegral w = window_integrate([](double x) { return 1.0 / (1 + x * x); }, OmegaWindow{200.0, 100, 16, 1e-2});
    CHECK(std::abs(w.value + w.tail - kPi) < 1e-4);
    CHECK_THROWS_AS(window_integrate([](double x) { return 1.0 / (1 + std::abs(x)); }, OmegaWindow{200.0, 100, 16, 1e-2}),
                    SpectralError);
    CHECK_THROWS_AS(window_integrate([](double) { return 1.0; }, OmegaWindow{0.0, 10, 4, 1.0}), std::invalid_argument);
    const auto om = uniform_omegas(2.0, 5);
    CHECK(om == std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
    CHECK(uniform_omegas(3.0, 1) == std::vector<double>{0.0});
  }

  TEST_CASE("plancherel") {
    const Series zero = Series::sample(1e-3, 2001, [](double) { return 0.0; });
    const PlancherelResult p0 = plancherel_check(zero, zero, 2.0);
    CHECK(p0.lhs == 0.0);
    CHECK(p0.rhs == 0.0);
    // Smoothed indicator of [0, 1] against itself.
    auto s = [](double t) { return kappa(t / 0.6) * (1.0 - std::exp(-20 * t * t)); };
    const Series f = Series::sample(1e-3, 2001, s);
    const PlancherelResult p = plancherel_check(f, f, 2.0);
    CHECK(p.gap < 1e-4 * p.lhs);
    const double direct = integrate([&](double t) { return std::exp(-2 * t) * s(t) * s(t); }, std::vector<double>{0.0, 0.3, 0.6, 1.2}).value;
    CHECK(std::abs(p.lhs - direct) < 1e-4 * direct);
    CHECK_THROWS_AS(plancherel_check(f, f, 0.0), std::invalid_argument);
  }

  TEST_CASE("weights and forms") {
    const WeightEval w = weights(Cplx(3, 4), Vec3(1, 0, 0));
    CHECK(w.alpha == doctest::Approx(2.0));
    CHECK(w.beta == doctest::Approx(1.5));
    CHECK(w.C1 == doctest::Approx(1.0 / 18));
    CHECK(w.C2 == doctest::Approx(5.5 / 162));
    const CVec3 W(1, 1, 0);
    const Vec3 v(2, 0, 0);
    CHECK(anisotropic_norm(W, v) == doctest::Approx(1.0 + 1.0 / 3));
    const WeightEval wv = weights(Cplx(1, 1), v);
    CHECK(b1_form(Cplx(1, 1), v, W, W) == doctest::Approx(wv.C1 * std::pow(4.0 / 3, 2) + wv.C2));
    CHECK_THROWS_AS(anisotropic_norm(W, Vec3::Zero()), std::invalid_argument);
  }

  TEST_CASE("dissipation") {
    const VelocityGrid g(3.0, 8);
    const double dt = 0.01, eps = 0.5, A = 2.0;
    const OmegaWindow win{60.0, 30, 16, 1.0};
    const FieldHistory zero = FieldHistory::sample(g, dt, 201, [](double, const Vec3&) { return 0.0; });
    CHECK(dissipation(zero, 0, eps, A, 0.0, win).value == 0.0);

    // Separable history phi(t) g(v): the transform factors, so the omega
    // integrand is |L phi|^2 times a per-node weight sum.
    const Field gv = gauss(g, Vec3(0.3, 0, -0.2), 0.9);
    const FieldHistory u = FieldHistory::sample(g, dt, 201, [&](double t, const Vec3& v) {
      return bump_t(t) * std::exp(-(v - Vec3(0.3, 0, -0.2)).squaredNorm() / (2 * 0.81));
    });
    const DissipationValue d = dissipation(u, 0, eps, A, 0.0, win);
    CHECK(d.value > 0.0);
    for (double x : d.partial) CHECK(x >= 0.0);

    const Series phi = Series::sample(dt, 201, bump_t);
    const VectorField G = mollified_gradient(gv, 0.0);
    auto integrand = [&](double om) {
      const Cplx z(0.5 * A, om);
      const double lp = std::norm(laplace_transform(phi, z));
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const CVec3 W = G.at(i).cast<Cplx>();
        const Vec3 v = g.node(i);
        const double lam = weight_value(WeightKind::lambda, v);
        acc += lam * (v.norm() == 0.0 ? weights(eps * z, v).C1 * W.squaredNorm() : b1_form(eps * z, v, W, W));
      }
      return lp * acc * g.cell_volume();
    };
    std::vector<double> pts;
    for (int k = -60; k <= 60; k += 6) pts.push_back(k);
    const double oracle = integrate(integrand, pts, QuadOptions{1e-14, 1e-9, 4000}).value;
    CHECK(std::abs(d.value - oracle) < 1e-6 * oracle);

    const DissipationValue d1 = dissipation(u, 1, eps, A, 0.0, win);
    CHECK(d1.value > 0.0);
    const FieldHistory open = FieldHistory::sample(g, dt, 50, [](double, const Vec3&) { return 1.0; });
    CHECK_THROWS_AS(dissipation(open, 0, eps, A, 0.0, win), SpectralError);
    CHECK_THROWS_AS(dissipation(u, 2, eps, A, 0.0, win), std::invalid_argument);
  }

  TEST_CASE("coercivity") {
    const VelocityGrid g(3.0, 8);
    const double h3 = g.cell_volume();
    Field delta(g);
    const std::size_t j = g.index(4, 4, 4);
    delta[j] = 1.0 / h3;
    const std::size_t i = g.index(6, 3, 5);
    const Vec3 w = g.node(i) - g.node(j);
    const double r = w.norm();
    for (Cplx z : {Cplx(1, 1), Cplx(0, 2), Cplx(0.3, -4)}) {
      const Mat3 M = coercivity_matrix(delta, z, i);
      const Vec3 e = w / r;
      const double x = z.real(), y = z.imag();
      const double par = kKernelScale * (x * (x + r) * (x + r) + y * y * (x + 2 * r)) / std::pow(std::norm(z + r), 2);
      CHECK(std::abs(e.dot(M * e) - par) < 1e-12);
      const Vec3 t = e.cross(Vec3(0.3, 1, 0.2)).normalized();
      CHECK(std::abs(t.dot(M * t) - (kKernelScale / (z + r)).real()) < 1e-12);
    }

    const Field m = maxwellian(1.0, 1.0, g);
    const CoercivityReport rep = coercivity_check(m, {Cplx(1, 1)}, 100, 3);
    CHECK(rep.samples == 100);
    CHECK(rep.min_eigenvalue > 0.0);
    const CoercivityReport z0 = coercivity_check(Field(g), {Cplx(1, 1)}, 5, 3);
    CHECK(z0.min_eigenvalue == 0.0);
    Field neg = m;
    neg[0] = -1.0;
    CHECK_THROWS_AS(coercivity_check(neg, {Cplx(1, 1)}, 5), std::invalid_argument);
    CHECK_THROWS_AS(coercivity_check(m, {Cplx(-1, 0)}, 5), std::invalid_argument);
    CHECK(std::abs(m_sum_cell_average(Cplx(0, 0), 1e-3)) > 1e3);
  }

  TEST_CASE("Q functional") {
    const VelocityGrid g(4.0, 8);
    const double dt = 0.02;
    const std::size_t n = 101;
    const FieldHistory zero = FieldHistory::sample(g, dt, n, [](double, const Vec3&) { return 0.0; });
    const QParts q0 = q_functional(zero, zero, 0.5, 2.0, 0.0);
    CHECK(q0.K == 0.0);
    CHECK(q0.P == 0.0);
    auto mw = [](const Vec3& v) { return maxwellian_value(1.0, 1.0, v); };
    const FieldHistory u = FieldHistory::sample(g, dt, n, [&](double t, const Vec3& v) { return t * t * std::exp(-t) * kappa(t) * mw(v); });
    const QCrossCheck c = q_cross_check(u, u, 0.5, 2.0, 0.0);
    CHECK(c.time.K >= 0.0);
    CHECK(c.agree());
    CHECK(c.gap <= 1e-2 * std::max(std::abs(c.time.K), std::abs(c.time.P)));
    const FieldHistory shorter = FieldHistory::sample(g, dt, n - 1, [](double, const Vec3&) { return 0.0; });
    CHECK_THROWS_AS(q_functional(u, shorter, 0.5, 2.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("lambda operator") {
    const VelocityGrid g(2.0, 8);
    const FieldHistory zero = FieldHistory::sample(g, 0.01, 201, [](double, const Vec3&) { return 0.0; });
    CHECK(lambda_operator(zero, Cplx(1, 1), 0.5, 3).cwiseAbs().maxCoeff() == 0.0);
    const Field gv = gauss(g, Vec3::Zero(), 0.7);
    const FieldHistory f = FieldHistory::sample(g, 0.01, 201, [&](double t, const Vec3& v) { return bump_t(t) * std::exp(-v.squaredNorm() / 0.98); });
    const std::size_t node = g.index(2, 5, 4);
    // Separable input: the time transform factors out of the lattice sum.
    const Cplx ft = laplace_transform(Series::sample(0.01, 201, bump_t), Cplx(0.0, 0.5));
    CMat3 ref = CMat3::Zero();
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j == node)
        ref += m_sum_cell_average(Cplx(1, 1), g.spacing()) * gv[j] * CMat3::Identity();
      else
        ref += m1_m2<Cplx>(Cplx(1, 1), g.node(node) - g.node(j)).sum() * gv[j];
    }
    ref *= ft * g.cell_volume();
    const CMat3 got = lambda_operator(f, Cplx(1, 1), 0.5, node);
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
    // Oscillation in s lowers the transform.
    CHECK(lambda_operator(f, Cplx(1, 1), 20.0, node).norm() < got.norm());
    CHECK_THROWS_AS(lambda_operator(f, Cplx(1, 1), 0.5, g.size()), std::out_of_range);
  }

  TEST_CASE("symmetrized kernels") {
    const Vec3 v(0.5, 1.0, -0.3);
    const SymmetrizedKernels s = symmetrized_kernels(0.2, Cplx(1, 2), Cplx(1, -0.5), v);
    CHECK((s.N1 + s.N2 - s.L2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((s.L1 * v.cast<Cplx>()).norm() < 1e-14);
    CHECK((s.L1 - s.L1.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    // p = conj(z): both halves coincide with M(eps z).
    const SymmetrizedKernels d = symmetrized_kernels(0.2, Cplx(1, 2), Cplx(1, -2), v);
    const auto m = m1_m2<Cplx>(Cplx(0.2, 0.4), v);
    CHECK((d.L1 - m.m1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((d.L2 - m.m2).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(symmetrized_kernels(0.2, Cplx(1, 2), Cplx(2, 0), v), std::invalid_argument);
    CHECK_THROWS_AS(symmetrized_kernels(0.2, Cplx(0, 2), Cplx(0, 0), v), std::invalid_argument);
  }

  TEST_CASE("log gain integral") {
    for (double eps : {1e-3, 0.05, 0.5}) {
      const double closed = 2 * eps * (std::log(1 / eps) / std::pow(1 - eps, 2) - 1 / (1 - eps));
      CHECK(std::abs(loggain_integral(1.0, eps) - closed) < 1e-10);
    }
    CHECK(loggain_integral(3.0, 0.1) == doctest::Approx(3 * loggain_integral(1.0, 0.1)).epsilon(1e-12));
    CHECK_THROWS_AS(loggain_integral(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(loggain_integral(0.0, 0.1), std::invalid_argument);
  }

  TEST_CASE("domain norms") {
    const VelocityGrid g(3.0, 8);
    const FieldHistory zero = FieldHistory::sample(g, 0.02, 101, [](double, const Vec3&) { return 0.0; });
    const DomainNorms z = domain_norms(zero, 0.2, 2.0, 2, uniform_omegas(10.0, 5));
    CHECK(z.E == 0.0);
    CHECK(z.X == 0.0);
    const FieldHistory f = FieldHistory::sample(g, 0.02, 101, [](double t, const Vec3& v) { return bump_t(t) * std::exp(-v.squaredNorm()); });
    const DomainNorms a = domain_norms(f, 0.2, 2.0, 2, uniform_omegas(10.0, 41));
    const DomainNorms b = domain_norms(f, 0.2, 2.0, 2, uniform_omegas(10.0, 81));
    CHECK(a.E > 0.0);
    CHECK(a.E <= a.G);
    CHECK(a.G <= a.F);
    CHECK(a.X > 0.0);
    CHECK(std::abs(a.E - b.E) < 0.05 * b.E);
    CHECK(a.X == b.X);
    CHECK_THROWS_AS(domain_norms(f, 0.2, 2.0, -1, {0.0}), std::invalid_argument);
  }
}
