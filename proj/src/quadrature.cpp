#include "nmkl/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <memory>
#include <mutex>

namespace nmkl {

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  // Golub-Welsch: eigenvalues of the Jacobi matrix are the nodes.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  auto rule = std::make_unique<GaussRule>();
  rule->nodes.resize(n);
  rule->weights.resize(n);
  for (int k = 0; k < n; ++k) {
    rule->nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    rule->weights[k] = 2.0 * v0 * v0;
  }
  // Symmetrize to remove eigen-solver noise.
  for (int k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (rule->nodes[n - 1 - k] - rule->nodes[k]);
    const double w = 0.5 * (rule->weights[k] + rule->weights[n - 1 - k]);
    rule->nodes[k] = -x;
    rule->nodes[n - 1 - k] = x;
    rule->weights[k] = w;
    rule->weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule->nodes[n / 2] = 0.0;
  auto& ref = *rule;
  cache.emplace(n, std::move(rule));
  return ref;
}

GaussRule composite_gauss(double a, double b, int panels, int order) {
  if (panels < 1) throw std::invalid_argument("composite_gauss: panels must be positive");
  const GaussRule& g = gauss_legendre(order);
  GaussRule out;
  out.nodes.reserve(std::size_t(panels) * order);
  out.weights.reserve(std::size_t(panels) * order);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (int k = 0; k < order; ++k) {
      out.nodes.push_back(lo + 0.5 * width * (g.nodes[k] + 1.0));
      out.weights.push_back(0.5 * width * g.weights[k]);
    }
  }
  return out;
}

}  // namespace nmkl
