#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmkl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Cplx = std::complex<double>;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

// Uniform lattice on [-L, L)^3 with N points per axis, row-major (x slowest).
class VelocityGrid {
 public:
  VelocityGrid(double half_width, int points_per_axis);

  double half_width() const { return L_; }
  int points_per_axis() const { return n_; }
  double spacing() const { return h_; }
  double cell_volume() const { return h_ * h_ * h_; }
  std::size_t size() const { return std::size_t(n_) * n_ * n_; }

  double coordinate(int i) const { return -L_ + i * h_; }
  std::size_t index(int i, int j, int k) const { return (std::size_t(i) * n_ + j) * n_ + k; }
  std::array<int, 3> multi_index(std::size_t idx) const {
    const int k = int(idx % n_);
    const int j = int((idx / n_) % n_);
    const int i = int(idx / (std::size_t(n_) * n_));
    return {i, j, k};
  }
  Vec3 node(std::size_t idx) const {
    const auto m = multi_index(idx);
    return {coordinate(m[0]), coordinate(m[1]), coordinate(m[2])};
  }
  std::size_t origin_index() const { return index(n_ / 2, n_ / 2, n_ / 2); }

  bool operator==(const VelocityGrid& o) const { return L_ == o.L_ && n_ == o.n_; }
  bool operator!=(const VelocityGrid& o) const { return !(*this == o); }

 private:
  double L_;
  int n_;
  double h_;
};

VelocityGrid build_grid(double L, int N);

template <typename Scalar>
class BasicField {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit BasicField(const VelocityGrid& grid) : grid_(grid), values_(Values::Zero(grid.size())) {}
  BasicField(const VelocityGrid& grid, Values values) : grid_(grid), values_(std::move(values)) {
    if (std::size_t(values_.size()) != grid_.size())
      throw std::invalid_argument("Field: value count does not match grid");
  }

  template <typename F>
  static BasicField sample(const VelocityGrid& grid, F&& f) {
    BasicField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.values_(i) = f(grid.node(i));
    return out;
  }

  const VelocityGrid& grid() const { return grid_; }
  const Values& values() const { return values_; }
  Values& values() { return values_; }
  std::size_t size() const { return grid_.size(); }
  Scalar operator[](std::size_t i) const { return values_(i); }
  Scalar& operator[](std::size_t i) { return values_(i); }

  bool is_density() const { return density_; }
  void mark_density(bool on = true) { density_ = on; }

  BasicField& operator+=(const BasicField& o) {
    check_same(o);
    values_ += o.values_;
    return *this;
  }
  BasicField& operator-=(const BasicField& o) {
    check_same(o);
    values_ -= o.values_;
    return *this;
  }
  BasicField& operator*=(Scalar a) {
    values_ *= a;
    return *this;
  }

 private:
  void check_same(const BasicField& o) const {
    if (grid_ != o.grid_) throw std::invalid_argument("Field: grid mismatch");
  }
  VelocityGrid grid_;
  Values values_;
  bool density_ = false;
};

template <typename S>
BasicField<S> operator+(BasicField<S> a, const BasicField<S>& b) { return a += b; }
template <typename S>
BasicField<S> operator-(BasicField<S> a, const BasicField<S>& b) { return a -= b; }
template <typename S>
BasicField<S> operator*(S s, BasicField<S> a) { return a *= s; }

using Field = BasicField<double>;
using ComplexField = BasicField<Cplx>;

template <typename Scalar>
struct BasicVectorField {
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  VelocityGrid grid;
  std::array<Values, 3> comp;

  explicit BasicVectorField(const VelocityGrid& g) : grid(g) {
    for (auto& c : comp) c = Values::Zero(g.size());
  }
  Eigen::Matrix<Scalar, 3, 1> at(std::size_t i) const { return {comp[0](i), comp[1](i), comp[2](i)}; }
  void set(std::size_t i, const Eigen::Matrix<Scalar, 3, 1>& x) {
    for (int d = 0; d < 3; ++d) comp[d](i) = x(d);
  }
};

using VectorField = BasicVectorField<double>;
using ComplexVectorField = BasicVectorField<Cplx>;

// Symmetric 3x3 matrix per node, stored as xx, xy, xz, yy, yz, zz.
template <typename Scalar>
struct BasicMatrixField {
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  VelocityGrid grid;
  std::array<Values, 6> comp;

  static constexpr int slot(int i, int j) {
    if (i > j) std::swap(i, j);
    return i == 0 ? j : (i == 1 ? 2 + j : 5);
  }
  explicit BasicMatrixField(const VelocityGrid& g) : grid(g) {
    for (auto& c : comp) c = Values::Zero(g.size());
  }
  Eigen::Matrix<Scalar, 3, 3> at(std::size_t n) const {
    Eigen::Matrix<Scalar, 3, 3> m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = comp[slot(i, j)](n);
    return m;
  }
};

using MatrixField = BasicMatrixField<double>;
using ComplexMatrixField = BasicMatrixField<Cplx>;

// Rectangle-rule integral sum(values) * h^3.
double integral(const Field& f);
double l2_norm(const Field& f);

// Throws if any value is non-finite or, for densities, below -tol_neg * max|u|.
void check_field(const Field& f, double tol_neg, const std::string& context);

enum class WeightKind { lambda, lambda_tilde, unity };

double weight_value(WeightKind kind, const Vec3& v);

// kappa(s) = 1 on [-1,1], 0 for |s| >= 2, smooth e^{-1/x} glue in between.
double kappa(double s);
double cutoff(double delta1, double s);

class CutoffKappa {
 public:
  explicit CutoffKappa(double delta1);
  double delta1() const { return delta1_; }
  double operator()(double s) const { return kappa(s / delta1_); }

 private:
  double delta1_;
};

double maxwellian_value(double sigma_sq, double m0, const Vec3& v);
Field maxwellian(double sigma_sq, double m0, const VelocityGrid& grid);

enum class V0Kind { exp, bump };

V0Kind parse_v0_kind(const std::string& name);
std::string to_string(V0Kind kind);

// Analytic u0 = m + delta2 v0 with exact gradient.
struct InitialData {
  double sigma_sq = 1.0;
  double m0 = 1.0;
  double delta2 = 0.0;
  V0Kind v0 = V0Kind::exp;

  double perturbation(const Vec3& v) const;
  Vec3 perturbation_gradient(const Vec3& v) const;
  double value(const Vec3& v) const;
  Vec3 gradient(const Vec3& v) const;
  Field sample(const VelocityGrid& grid) const;
};

// Bound constant C in 0 <= v0 <= C e^{-|v|/2}; e covers both built-in shapes.
inline constexpr double kV0Bound = 2.718281828459045;

Field initial_data(const VelocityGrid& grid, double sigma_sq, double m0, double delta2, V0Kind v0);
Field initial_data(const VelocityGrid& grid, double sigma_sq, double m0, double delta2,
                   const Field& v0, double bound = kV0Bound);

double weighted_sobolev_norm(const Field& f, WeightKind weight, int order);

// d^alpha f with spectral multipliers (ik)^alpha; Nyquist modes are dropped.
Field spectral_derivative(const Field& f, const std::array<int, 3>& alpha);

VectorField mollified_gradient(const Field& f, double gamma);
ComplexVectorField mollified_gradient(const ComplexField& f, double gamma);
Field divergence(const VectorField& F, double gamma = 0.0);
ComplexField divergence(const ComplexVectorField& F, double gamma = 0.0);

}  // namespace nmkl
