#pragma once

#include "nmkl/grid.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstddef>

namespace nmkl {

using Spectrum = Eigen::ArrayXcd;

// Cubic n^3 transforms. Plans are built once per size under a lock and
// executed on per-call aligned buffers, so const calls are thread-safe.
// Transforms are unnormalized.
class RealFft3 {
 public:
  explicit RealFft3(int n);
  int n() const { return n_; }
  std::size_t real_size() const { return std::size_t(n_) * n_ * n_; }
  std::size_t spectrum_size() const { return std::size_t(n_) * n_ * (n_ / 2 + 1); }
  void forward(const double* in, Cplx* out) const;
  void inverse(const Cplx* in, double* out) const;

 private:
  int n_;
  void* fwd_;
  void* inv_;
};

class ComplexFft3 {
 public:
  explicit ComplexFft3(int n);
  int n() const { return n_; }
  std::size_t size() const { return std::size_t(n_) * n_ * n_; }
  void forward(const Cplx* in, Cplx* out) const;
  void inverse(const Cplx* in, Cplx* out) const;

 private:
  int n_;
  void* fwd_;
  void* inv_;
};

// Whole-space discrete convolution (h^3 sum_j k(v_i - v_j) f_j) by zero
// padding to (2N)^3. Kernel offsets m in [-N, N) are stored cyclically.
class PaddedConvolver {
 public:
  explicit PaddedConvolver(const VelocityGrid& grid);

  const VelocityGrid& grid() const { return grid_; }
  int padded() const { return 2 * grid_.points_per_axis(); }
  std::size_t spectrum_size() const { return fft_.spectrum_size(); }

  // Visits every padded lattice slot with its offset w and whether it is the origin.
  template <typename F>
  void for_each_offset(F&& visit) const {
    const int P = padded();
    const int N = grid_.points_per_axis();
    const double h = grid_.spacing();
    for (int a = 0; a < P; ++a) {
      const int oa = a < N ? a : a - P;
      for (int b = 0; b < P; ++b) {
        const int ob = b < N ? b : b - P;
        for (int c = 0; c < P; ++c) {
          const int oc = c < N ? c : c - P;
          const bool origin = oa == 0 && ob == 0 && oc == 0;
          visit((std::size_t(a) * P + b) * P + c, Vec3(oa * h, ob * h, oc * h), origin);
        }
      }
    }
  }

  // Scalar kernel sampled at lattice offsets; sampler(Vec3 w, bool origin) -> double.
  template <typename F>
  Spectrum transform_kernel(F&& sampler) const {
    const int P = padded();
    Eigen::ArrayXd buf(std::size_t(P) * P * P);
    for_each_offset([&](std::size_t i, const Vec3& w, bool origin) { buf(i) = sampler(w, origin); });
    return transform_padded(buf);
  }

  Spectrum transform_padded(const Eigen::ArrayXd& padded_values) const;
  Spectrum transform(const Eigen::ArrayXd& field_values) const;
  // Inverse of a product spectrum, restricted to the physical block and scaled by h^3.
  Eigen::ArrayXd extract(const Spectrum& product) const;

 private:
  VelocityGrid grid_;
  RealFft3 fft_;
};

}  // namespace nmkl
