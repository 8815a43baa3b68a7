#include "nmkl/verify.hpp"

#include "nmkl/kernels.hpp"
#include "nmkl/quadrature.hpp"
#include "nmkl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace nmkl {

namespace {

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 d;
  do {
    d = Vec3(n(rng), n(rng), n(rng));
  } while (d.norm() < 1e-8);
  return d.normalized();
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace

std::vector<std::pair<Cplx, Vec3>> identity_samples(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> re(0.05, 5.0), im(-5.0, 5.0);
  std::vector<std::pair<Cplx, Vec3>> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Cplx z(re(rng), im(rng));
    out.emplace_back(z, log_uniform(rng, 0.1, 8.0) * random_direction(rng));
  }
  return out;
}

std::vector<std::pair<double, Vec3>> memory_kernel_samples(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  std::vector<std::pair<double, Vec3>> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double ti = t(rng);
    out.emplace_back(ti, log_uniform(rng, 0.1, 5.0) * random_direction(rng));
  }
  return out;
}

std::vector<Cplx> coercivity_z_samples(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 17);
  std::uniform_real_distribution<double> re(0.0, 5.0), im(-10.0, 10.0);
  std::vector<Cplx> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i == 0)
      out.emplace_back(0.0, 0.0);
    else if (i % 4 == 1)
      out.emplace_back(0.0, im(rng));
    else
      out.emplace_back(re(rng), im(rng));
  }
  return out;
}

double memory_laplace_error(Cplx z, const Vec3& w) {
  const double rate = z.real() + w.norm();
  if (!(rate > 0.0)) throw std::invalid_argument("memory_laplace_error: need Re z + |w| > 0");
  const double dt = 2e-4;
  const std::size_t n = std::size_t(std::ceil(40.0 / rate / dt)) + 1;
  std::array<Series, 6> s;
  for (auto& x : s) x = Series{dt, std::vector<double>(n)};
  constexpr int kRow[6] = {0, 0, 0, 1, 1, 2};
  constexpr int kCol[6] = {0, 1, 2, 1, 2, 2};
  for (std::size_t k = 0; k < n; ++k) {
    const Mat3 K = memory_kernel(k * dt, w);
    for (int c = 0; c < 6; ++c) s[c].values[k] = K(kRow[c], kCol[c]);
  }
  const CMat3 M = m1_m2<Cplx>(z, w).sum();
  const double scale = M.cwiseAbs().maxCoeff();
  double err = 0.0;
  for (int c = 0; c < 6; ++c)
    err = std::max(err, std::abs(laplace_transform(s[c], z) - M(kRow[c], kCol[c])) / scale);
  return err;
}

double parallel_cancellation(const Vec3& w) {
  const Vec3 e = w.normalized();
  QuadOptions opt;
  opt.abs_tol = 1e-14;
  opt.rel_tol = 1e-13;
  const double r = w.norm();
  auto f = [&](double t) { return e.dot(memory_kernel(t, w) * e); };
  const double head = integrate(f, std::vector<double>{0.0, 1.0 / r, 4.0 / r, 20.0 / r}, opt).value;
  const double tail = integrate_to_infinity(f, 20.0 / r, opt).value;
  return std::abs(head + tail);
}

std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt, std::ostream* progress) {
  std::vector<CheckResult> out;
  auto note = [&](const CheckResult& c) {
    out.push_back(c);
    if (progress) *progress << (c.pass ? "PASS " : "FAIL ") << c.name << "\n" << std::flush;
  };

  const std::size_t n_id = opt.quick ? 5 : 20;
  {
    double worst = 0.0;
    for (const auto& [z, v] : identity_samples(n_id, opt.seed))
      worst = std::max(worst, verify_m_identity(z, v).max_rel_error);
    note({"M identity (" + std::to_string(n_id) + " points)", worst <= 1e-4, worst, 1e-4, ""});
  }
  {
    double worst = 0.0;
    for (const auto& [t, w] : memory_kernel_samples(n_id, opt.seed))
      worst = std::max(worst, verify_memory_kernel(t, w).max_rel_error);
    note({"memory kernel oracle (" + std::to_string(n_id) + " points)", worst <= 1e-4, worst, 1e-4, ""});
  }
  {
    double worst = 0.0;
    for (const Vec3& w : {Vec3(1, 0, 0), Vec3(0.3, -0.2, 0.9), Vec3(2.0, 1.0, -3.0)})
      worst = std::max(worst, (memory_kernel(0.0, w) - kKernelScale * Mat3::Identity()).cwiseAbs().maxCoeff() /
                                  kKernelScale);
    note({"memory kernel at t = 0", worst <= 1e-10, worst, 1e-10, ""});
  }
  {
    double worst = 0.0;
    const auto samples = identity_samples(opt.quick ? 3 : 10, opt.seed + 3);
    for (const auto& [z, v] : samples) {
      const Cplx zz(std::max(z.real(), 0.5), z.imag());
      worst = std::max(worst, memory_laplace_error(zz, v.normalized() * std::clamp(v.norm(), 0.2, 5.0)));
    }
    note({"memory kernel Laplace transform", worst <= 1e-6, worst, 1e-6, ""});
  }
  {
    double worst = 0.0;
    for (const Vec3& w : {Vec3(0.2, 0, 0), Vec3(1, 1, 0), Vec3(0.5, -2.0, 3.0)})
      worst = std::max(worst, parallel_cancellation(w));
    note({"parallel part integrates to zero", worst <= 1e-10, worst, 1e-10, ""});
  }
  {
    const VelocityGrid grid(6.0, 16);
    const Field m = maxwellian(1.0, 1.0, grid);
    const std::size_t nz = opt.quick ? 5 : 20, per = opt.quick ? 10 : 50;
    const CoercivityReport rep = coercivity_check(m, coercivity_z_samples(nz, opt.seed), per, opt.seed);
    std::ostringstream d;
    d << rep.samples << " samples";
    note({"coercivity of Re L(K)[m] (" + std::to_string(rep.samples) + " samples)",
          rep.min_eigenvalue >= -1e-10, rep.min_eigenvalue, -1e-10, d.str()});
  }
  {
    const Series f = Series::sample(1e-3, 20001, [](double t) { return std::exp(-t); });
    const PlancherelResult p = plancherel_check(f, f, 2.0);
    const double err = std::max(std::abs(p.lhs - 0.25), std::abs(p.rhs - 0.25));
    note({"Plancherel, f = g = e^{-t}, A = 2", err <= 1e-4, err, 1e-4, ""});
  }
  return out;
}

std::string format_table(const std::vector<CheckResult>& results) {
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::ostringstream s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %13s  %13s  %s\n", int(width), "check", "value", "bound", "result");
  s << buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-*s  %13.6e  %13.6e  %s\n", int(width), r.name.c_str(), r.value,
                  r.bound, r.pass ? "PASS" : "FAIL");
    s << buf;
  }
  return s.str();
}

}  // namespace nmkl
