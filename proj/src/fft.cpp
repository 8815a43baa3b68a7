#include "nmkl/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace nmkl {
namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Aligned scratch owned by one call.
template <typename T>
struct Scratch {
  T* ptr;
  explicit Scratch(std::size_t n) : ptr(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!ptr) throw std::bad_alloc();
  }
  ~Scratch() { fftw_free(ptr); }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
};

enum class Kind { r2c, c2r, c2c_fwd, c2c_inv };

fftw_plan cached_plan(Kind kind, int n) {
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(plan_mutex());
  const auto key = std::make_pair(static_cast<int>(kind), n);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  const std::size_t real = std::size_t(n) * n * n;
  const std::size_t half = std::size_t(n) * n * (n / 2 + 1);
  fftw_plan p = nullptr;
  switch (kind) {
    case Kind::r2c: {
      Scratch<double> in(real);
      Scratch<fftw_complex> out(half);
      p = fftw_plan_dft_r2c_3d(n, n, n, in.ptr, out.ptr, FFTW_ESTIMATE);
      break;
    }
    case Kind::c2r: {
      Scratch<fftw_complex> in(half);
      Scratch<double> out(real);
      p = fftw_plan_dft_c2r_3d(n, n, n, in.ptr, out.ptr, FFTW_ESTIMATE);
      break;
    }
    case Kind::c2c_fwd:
    case Kind::c2c_inv: {
      Scratch<fftw_complex> in(real);
      Scratch<fftw_complex> out(real);
      p = fftw_plan_dft_3d(n, n, n, in.ptr, out.ptr,
                           kind == Kind::c2c_fwd ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
      break;
    }
  }
  if (!p) throw std::runtime_error("FFTW plan creation failed");
  plans.emplace(key, p);
  return p;
}

}  // namespace

RealFft3::RealFft3(int n) : n_(n) {
  if (n < 2 || n % 2) throw std::invalid_argument("RealFft3: size must be even");
  fwd_ = cached_plan(Kind::r2c, n);
  inv_ = cached_plan(Kind::c2r, n);
}

void RealFft3::forward(const double* in, Cplx* out) const {
  Scratch<double> a(real_size());
  Scratch<fftw_complex> b(spectrum_size());
  std::memcpy(a.ptr, in, sizeof(double) * real_size());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), a.ptr, b.ptr);
  std::memcpy(static_cast<void*>(out), b.ptr, sizeof(fftw_complex) * spectrum_size());
}

void RealFft3::inverse(const Cplx* in, double* out) const {
  Scratch<fftw_complex> a(spectrum_size());
  Scratch<double> b(real_size());
  std::memcpy(a.ptr, in, sizeof(fftw_complex) * spectrum_size());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_), a.ptr, b.ptr);
  std::memcpy(out, b.ptr, sizeof(double) * real_size());
}

ComplexFft3::ComplexFft3(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("ComplexFft3: size must be positive");
  fwd_ = cached_plan(Kind::c2c_fwd, n);
  inv_ = cached_plan(Kind::c2c_inv, n);
}

void ComplexFft3::forward(const Cplx* in, Cplx* out) const {
  Scratch<fftw_complex> a(size());
  Scratch<fftw_complex> b(size());
  std::memcpy(a.ptr, in, sizeof(fftw_complex) * size());
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), a.ptr, b.ptr);
  std::memcpy(static_cast<void*>(out), b.ptr, sizeof(fftw_complex) * size());
}

void ComplexFft3::inverse(const Cplx* in, Cplx* out) const {
  Scratch<fftw_complex> a(size());
  Scratch<fftw_complex> b(size());
  std::memcpy(a.ptr, in, sizeof(fftw_complex) * size());
  fftw_execute_dft(static_cast<fftw_plan>(inv_), a.ptr, b.ptr);
  std::memcpy(static_cast<void*>(out), b.ptr, sizeof(fftw_complex) * size());
}

PaddedConvolver::PaddedConvolver(const VelocityGrid& grid)
    : grid_(grid), fft_(2 * grid.points_per_axis()) {}

Spectrum PaddedConvolver::transform_padded(const Eigen::ArrayXd& padded_values) const {
  if (std::size_t(padded_values.size()) != fft_.real_size())
    throw std::invalid_argument("PaddedConvolver: padded size mismatch");
  Spectrum out(fft_.spectrum_size());
  fft_.forward(padded_values.data(), out.data());
  return out;
}

Spectrum PaddedConvolver::transform(const Eigen::ArrayXd& field_values) const {
  const int N = grid_.points_per_axis();
  const int P = padded();
  if (std::size_t(field_values.size()) != grid_.size())
    throw std::invalid_argument("PaddedConvolver: field size mismatch");
  Eigen::ArrayXd buf = Eigen::ArrayXd::Zero(std::size_t(P) * P * P);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        buf((std::size_t(i) * P + j) * P + k) = field_values(grid_.index(i, j, k));
  return transform_padded(buf);
}

Eigen::ArrayXd PaddedConvolver::extract(const Spectrum& product) const {
  const int N = grid_.points_per_axis();
  const int P = padded();
  Eigen::ArrayXd buf(fft_.real_size());
  fft_.inverse(product.data(), buf.data());
  const double scale = grid_.cell_volume() / double(fft_.real_size());
  Eigen::ArrayXd out(grid_.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        out(grid_.index(i, j, k)) = buf((std::size_t(i) * P + j) * P + k) * scale;
  return out;
}

}  // namespace nmkl
