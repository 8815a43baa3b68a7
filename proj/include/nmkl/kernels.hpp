#pragma once

#include "nmkl/fft.hpp"
#include "nmkl/grid.hpp"
#include "nmkl/quadrature.hpp"

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace nmkl {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kKernelScale = kPi * kPi / 4.0;  // pi^2/4

double phi_hat(const Vec3& k);

template <typename Scalar = double>
Eigen::Matrix<Scalar, 3, 3> parallel_projector(const Vec3& w) {
  const Vec3 e = w.normalized();
  return (e * e.transpose()).template cast<Scalar>();
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, 3, 3> transverse_projector(const Vec3& w) {
  return Eigen::Matrix<Scalar, 3, 3>::Identity() - parallel_projector<Scalar>(w);
}

// Closed form (pi^2/4) e^{-|w|t} [P_w^perp + (1 - |w|t) P_w]; (pi^2/4) I at w = 0.
Mat3 memory_kernel(double t, const Vec3& w);

template <typename Scalar>
struct MPair {
  Eigen::Matrix<Scalar, 3, 3> m1;
  Eigen::Matrix<Scalar, 3, 3> m2;
  Eigen::Matrix<Scalar, 3, 3> sum() const { return m1 + m2; }
};

// M1 = (pi^2/(4|v|)) (1+z/|v|)^{-1} P_v^perp, M2 = (pi^2/(4|v|)) (z/|v|)(1+z/|v|)^{-2} P_v.
template <typename Scalar>
MPair<Scalar> m1_m2(Scalar z, const Vec3& v) {
  const double r = v.norm();
  if (!(r > 0.0)) throw std::invalid_argument("m1_m2: v must be nonzero");
  if (std::real(z) < 0.0) throw std::invalid_argument("m1_m2: Re z must be >= 0");
  const Scalar q = z / r;
  const Scalar one(1.0);
  const Scalar c = Scalar(kKernelScale / r);
  return {transverse_projector<Scalar>(v) * (c / (one + q)),
          parallel_projector<Scalar>(v) * (c * q / ((one + q) * (one + q)))};
}

struct IdentityCheck {
  double max_rel_error = 0.0;
  CMat3 quadrature;
  CMat3 closed_form;
};

// Entrywise comparison of the k-space integral with M1+M2; errors are
// relative to the largest entry of the closed form.
IdentityCheck verify_m_identity(Cplx z, const Vec3& v, double quad_tol = 1e-8);

struct MemoryKernelCheck {
  double max_rel_error = 0.0;
  Mat3 quadrature;
  Mat3 closed_form;
};

// Direct oracle: int k (x) k |phi_hat|^2 cos(t k.w) dk against the closed form.
MemoryKernelCheck verify_memory_kernel(double t, const Vec3& w, double quad_tol = 1e-8);

Mat3 landau_matrix(const Vec3& w, double Lambda = kKernelScale);

// Cell constants: average of |w|^{-p} over the centered cube of side h is C_p / h^p.
double singular_cell_constant(int p);

// Average of the memory kernel over the origin cell (a multiple of I).
double memory_kernel_cell_average(double t, double h);

Field coulomb_potential(const Field& f);

// sum_{n in Z^3, n != 0} |n|^{-2s} (analytically continued) for s = 1/2 and 1.
double lattice_zeta(double s);

struct AnnulusIndex {
  int j = 0;
  static AnnulusIndex of(const Vec3& v);
  std::array<int, 3> neighbors() const { return {j - 1, j, j + 1}; }
  bool near(int k) const { return k >= j - 1 && k <= j + 1; }
};

struct DyadicOptions {
  int refine = 3;
  double local_cells = 5.0;  // radius of the fine ball around v, in coarse cells
};

// sum_j int_{A_j} f(v') / |v - v'|^p dv' at node v, with fine local
// quadrature on the annuli I(v) and coarse sums elsewhere. The annuli and a
// ball around v are blended by smooth kappa cutoffs so neither lattice sees a
// sharp edge.
double dyadic_singular_convolution(const Field& f, int p, std::size_t node,
                                   const DyadicOptions& opt = {});

enum class KernelId { landau, memory, coulomb, inverse_square, delta_cell, zero };

struct KernelSpec {
  KernelId id = KernelId::landau;
  double Lambda = kKernelScale;
};

struct TableOptions {
  std::size_t memory_cap_bytes = std::size_t(4) << 30;
};

// Per-lag spectra of the padded, cell-corrected kernel. Matrix kernels carry
// 6 symmetric components, scalar kernels 1.
struct MultiplierTable {
  VelocityGrid grid;
  KernelSpec kernel;
  std::vector<double> lags;
  int components = 0;
  std::vector<std::vector<Spectrum>> spectra;
  std::vector<double> origin_values;
  std::vector<double> max_weight;

  bool empty() const { return lags.empty(); }
  std::size_t bytes() const;
};

std::size_t multiplier_table_bytes(const VelocityGrid& grid, KernelId id, std::size_t lags);
MultiplierTable build_multiplier_table(const VelocityGrid& grid, const KernelSpec& kernel,
                                       const std::vector<double>& lags,
                                       const TableOptions& opt = {});

// Real-space kernel spectra for one lag (matrix kernels) or one scalar.
std::vector<Spectrum> kernel_spectra(const PaddedConvolver& conv, const KernelSpec& kernel,
                                     double lag, double* origin = nullptr,
                                     double* max_weight = nullptr);

// (k * f) for a scalar table; matrix tables give the 6 components.
Field convolve(const PaddedConvolver& conv, const std::vector<Spectrum>& kernel, const Field& f);
MatrixField convolve_matrix(const PaddedConvolver& conv, const std::vector<Spectrum>& kernel,
                            const Spectrum& f_hat);
VectorField convolve_rows(const PaddedConvolver& conv, const std::vector<Spectrum>& kernel,
                          const std::array<Spectrum, 3>& g_hat);

}  // namespace nmkl
