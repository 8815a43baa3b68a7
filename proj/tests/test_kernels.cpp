#include "nmkl/kernels.hpp"

#include <doctest.h>

#include <cmath>

using namespace nmkl;

namespace {

// Spherical-coordinate oracle for int k (x) k |phi_hat|^2 z/(z^2 + (k.v)^2) dk
// with v along e3 and real z. Returns (M_11, M_33).
std::pair<double, double> spherical_m(double z, double r) {
  QuadOptions in{1e-14, 1e-11, 4000};
  QuadOptions out{1e-14, 1e-10, 4000};
  auto shell = [&](double rho, bool axial) {
    auto g = [&](double th) {
      const double c = std::cos(th), s = std::sin(th);
      const double ang = axial ? 2 * kPi * c * c * s : kPi * s * s * s;
      return ang * z / (z * z + rho * rho * r * r * c * c);
    };
    const double p = phi_hat(Vec3(rho, 0, 0));
    return std::pow(rho, 4) * p * p * integrate(g, std::vector<double>{0.0, kPi / 2, kPi}, in).value;
  };
  const double m11 = integrate_to_infinity([&](double rho) { return shell(rho, false); }, 0.0, out).value;
  const double m33 = integrate_to_infinity([&](double rho) { return shell(rho, true); }, 0.0, out).value;
  return {m11, m33};
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("phi_hat values") {
    CHECK(phi_hat(Vec3::Zero()) == 1.0);
    CHECK(phi_hat(Vec3(1, 0, 0)) == doctest::Approx(0.353553390593).epsilon(1e-11));
    CHECK(phi_hat(Vec3(1, 1, 1)) == doctest::Approx(0.125).epsilon(1e-14));
  }

  TEST_CASE("memory kernel closed form") {
    const Mat3 k0 = memory_kernel(0.0, Vec3(0.3, -2, 1));
    CHECK((k0 - kKernelScale * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((memory_kernel(2.0, Vec3::Zero()) - kKernelScale * Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
    // t|w| = 1: the parallel part vanishes.
    const Vec3 w(0, 0, 2);
    const Mat3 k = memory_kernel(0.5, w);
    CHECK(std::abs(k(2, 2)) < 1e-15);
    CHECK(k(0, 0) == doctest::Approx(kKernelScale * std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(memory_kernel(-1.0, w), std::invalid_argument);
  }

  TEST_CASE("M1 and M2 values and decay") {
    const Vec3 v(0, 0, 2);
    const auto z0 = m1_m2<double>(0.0, v);
    CHECK(z0.m2.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z0.m1(0, 0) == doctest::Approx(kKernelScale / 2).epsilon(1e-14));
    const auto zr = m1_m2<double>(2.0, v);
    CHECK(zr.m1(0, 0) == doctest::Approx(kKernelScale / 4).epsilon(1e-14));
    CHECK(zr.m2(2, 2) == doctest::Approx(kKernelScale / 8).epsilon(1e-14));
    double prev = 1e300;
    for (double z : {1e1, 1e2, 1e3, 1e4}) {
      const double n = m1_m2<Cplx>(Cplx(z, z), v).sum().cwiseAbs().maxCoeff();
      CHECK(n < prev);
      CHECK(n * z < 2 * kKernelScale);
      prev = n;
    }
    CHECK_THROWS_AS(m1_m2<double>(1.0, Vec3::Zero()), std::invalid_argument);
    CHECK_THROWS_AS(m1_m2<double>(-1.0, v), std::invalid_argument);
  }

  TEST_CASE("k-space identity") {
    CHECK(verify_m_identity(1.0, Vec3::UnitX()).max_rel_error < 1e-6);
    CHECK(verify_m_identity(Cplx(2, 3), Vec3(1, 1, 0)).max_rel_error < 1e-6);
    // Rotating v rotates the matrix.
    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Vec3 v(0.5, -1.2, 0.8);
    const CMat3 a = verify_m_identity(Cplx(1.5, 0.5), v).quadrature;
    const CMat3 b = verify_m_identity(Cplx(1.5, 0.5), R * v).quadrature;
    const CMat3 rot = R.cast<Cplx>() * a * R.transpose().cast<Cplx>();
    CHECK((rot - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("independent spherical oracle") {
    for (auto [z, r] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}, std::pair{3.0, 0.7}}) {
      const auto [m11, m33] = spherical_m(z, r);
      const auto cf = m1_m2<double>(z, Vec3(0, 0, r));
      CHECK(std::abs(m11 / cf.sum()(0, 0) - 1.0) < 1e-6);
      CHECK(std::abs(m33 / cf.sum()(2, 2) - 1.0) < 1e-6);
    }
  }

  TEST_CASE("memory kernel oracle") {
    CHECK(verify_memory_kernel(0.0, Vec3(1, 0, 0)).max_rel_error < 1e-5);
    CHECK(verify_memory_kernel(0.7, Vec3(0.5, 1, -0.3)).max_rel_error < 1e-5);
  }

  TEST_CASE("landau matrix") {
    const Mat3 a = landau_matrix(Vec3(0, 0, 2));
    CHECK(a(0, 0) == doctest::Approx(kKernelScale / 2).epsilon(1e-14));
    CHECK(a(2, 2) == 0.0);
    const Vec3 w(1, -2, 0.5);
    CHECK((landau_matrix(w, 1.0) * w).norm() < 1e-14);
    CHECK_THROWS_AS(landau_matrix(Vec3::Zero()), std::invalid_argument);
  }

  TEST_CASE("coulomb potential") {
    // Unit ball, weighted by the fraction of each cell inside it.
    const VelocityGrid g(3.0, 48);
    const double h = g.spacing();
    const int sub = 4;
    Field ball(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 c = g.node(i);
      int in = 0;
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sub; ++b)
          for (int d = 0; d < sub; ++d) {
            const Vec3 y = c + h * (Vec3(a, b, d) + Vec3::Constant(0.5)) / sub - Vec3::Constant(h / 2);
            in += y.norm() <= 1.0;
          }
      ball[i] = double(in) / (sub * sub * sub);
    }
    const Field phi = coulomb_potential(ball);
    CHECK(std::abs(phi[g.origin_index()] - 2 * kPi) < 5e-3 * 2 * kPi);
    // Outside the ball: total mass / |v| = (4 pi / 3) / 2.
    const std::size_t n = g.index(24 + 16, 24, 24);
    CHECK(g.node(n).norm() == doctest::Approx(2.0));
    CHECK(std::abs(phi[n] - 2 * kPi / 3) < 5e-3 * 2 * kPi / 3);
    CHECK(coulomb_potential(Field(g)).values().abs().maxCoeff() == 0.0);
  }

  TEST_CASE("annulus index") {
    CHECK(AnnulusIndex::of(Vec3(1, 0, 0)).j == 0);
    CHECK(AnnulusIndex::of(Vec3(1.9, 0, 0)).j == 0);
    CHECK(AnnulusIndex::of(Vec3(0.3, 0, 0)).j == -2);
    CHECK(AnnulusIndex::of(Vec3(4.5, 0, 0)).j == 2);
    CHECK(AnnulusIndex::of(Vec3(1, 0, 0)).neighbors() == std::array<int, 3>{-1, 0, 1});
    CHECK(AnnulusIndex{0}.near(1));
    CHECK_FALSE(AnnulusIndex{0}.near(2));
    CHECK_THROWS_AS(AnnulusIndex::of(Vec3::Zero()), std::invalid_argument);
  }

  TEST_CASE("lattice zeta") {
    // Known values of the simple cubic lattice sum.
    CHECK(std::abs(lattice_zeta(0.5) + 2.837297479481) < 1e-9);
    CHECK(std::abs(lattice_zeta(1.0) + 8.913632917585) < 1e-9);
    CHECK_THROWS(lattice_zeta(2.0));
  }

  TEST_CASE("dyadic singular convolution") {
    const VelocityGrid g(3.0, 16);
    CHECK(dyadic_singular_convolution(Field(g), 1, g.index(10, 8, 8)) == 0.0);
    const Vec3 c(0.2, -0.1, 0.3);
    const Field f = Field::sample(g, [&](const Vec3& v) { return std::exp(-(v - c).squaredNorm() / 2) * kappa(v.norm() / 1.4); });
    const std::size_t node = g.index(10, 8, 6);
    const Vec3 v = g.node(node);
    // Reference: adaptive radial integral over spherical shells around v of the analytic field.
    auto fa = [&](const Vec3& y) { return std::exp(-(y - c).squaredNorm() / 2) * kappa(y.norm() / 1.4); };
    for (int p : {1, 2}) {
      QuadOptions o{1e-12, 1e-8, 2000};
      const GaussRule& gl = gauss_legendre(32);
      auto shell = [&](double rho) {
        double acc = 0.0;
        for (std::size_t a = 0; a < gl.nodes.size(); ++a) {
          const double ct = gl.nodes[a];
          const double st = std::sqrt(1 - ct * ct);
          for (int b = 0; b < 64; ++b) {
            const double ph = 2 * kPi * b / 64;
            acc += gl.weights[a] * (2 * kPi / 64) * fa(v + rho * Vec3(st * std::cos(ph), st * std::sin(ph), ct));
          }
        }
        return acc * std::pow(rho, 2 - p);
      };
      const double ref = integrate(shell, std::vector<double>{0.0, 0.5, 1.0, 2.0, 3.0, 4.5, 6.0}, o).value;
      const double got = dyadic_singular_convolution(f, p, node);
      CHECK(std::abs(got - ref) / std::abs(ref) < 1e-3);
    }
    CHECK_THROWS_AS(dyadic_singular_convolution(f, 3, node), std::invalid_argument);
  }

  TEST_CASE("multiplier tables") {
    const VelocityGrid g(2.0, 8);
    const double h = g.spacing();
    const MultiplierTable t = build_multiplier_table(g, {KernelId::delta_cell}, {0.0});
    const Field f = Field::sample(g, [](const Vec3& v) { return std::exp(-v.squaredNorm()); });
    PaddedConvolver conv(g);
    const Field c = convolve(conv, t.spectra[0], f);
    CHECK((c.values() - f.values() * h * h * h).abs().maxCoeff() < 1e-14);

    const MultiplierTable e = build_multiplier_table(g, {KernelId::memory}, {});
    CHECK(e.empty());
    CHECK(e.bytes() == 0);

    // Memory kernel at lag 1 against a unit point mass at (3, 4, 5).
    const MultiplierTable m = build_multiplier_table(g, {KernelId::memory}, {1.0});
    CHECK(m.components == 6);
    CHECK(m.bytes() == multiplier_table_bytes(g, KernelId::memory, 1));
    Field delta(g);
    const std::size_t j = g.index(3, 4, 5);
    delta[j] = 1.0 / (h * h * h);
    const MatrixField mf = convolve_matrix(conv, m.spectra[0], conv.transform(delta.values()));
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i == j) continue;
      err = std::max(err, (mf.at(i) - memory_kernel(1.0, g.node(i) - g.node(j))).cwiseAbs().maxCoeff());
    }
    CHECK(err < 1e-12);
    CHECK(std::abs(mf.at(j)(0, 0) - memory_kernel_cell_average(1.0, h)) < 1e-12);

    TableOptions small;
    small.memory_cap_bytes = 1024;
    CHECK_THROWS_AS(build_multiplier_table(g, {KernelId::landau}, {0.0}, small), std::length_error);
    CHECK_THROWS_AS(build_multiplier_table(g, {KernelId::landau}, {1.0, 0.5}), std::invalid_argument);
  }

  TEST_CASE("cell constants") {
    CHECK(singular_cell_constant(1) > 1.0);
    CHECK(singular_cell_constant(2) > singular_cell_constant(1));
    CHECK(memory_kernel_cell_average(0.0, 0.5) == kKernelScale);
    CHECK(memory_kernel_cell_average(1.0, 0.5) < kKernelScale);
    CHECK_THROWS_AS(singular_cell_constant(3), std::invalid_argument);
  }
}
