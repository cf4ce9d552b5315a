#ifndef KDPP_KERNEL_HPP
#define KDPP_KERNEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kdpp/errors.hpp"
#include "kdpp/rng.hpp"

namespace kdpp {

// A kernel is a symmetric PSD function L(x, y) together with a certified
// upper bound on L(z, z) over its domain. Everything downstream (Gram
// factorizations, Gibbs moves, rejection acceptance tests) consumes kernels
// through this concept.
template <class K>
concept kernel_like = requires(const K& k, const typename K::point_type& p) {
  typename K::point_type;
  { k(p, p) } -> std::convertible_to<double>;
  { k.diag_bound() } -> std::convertible_to<double>;
};

// Finite ground set backed by an explicit n x n matrix; points are indices.
class MatrixKernel {
 public:
  using point_type = int;

  explicit MatrixKernel(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("MatrixKernel: matrix must be square");
    diag_bound_ = 0.0;
    for (Eigen::Index i = 0; i < m_.rows(); ++i) diag_bound_ = std::max(diag_bound_, m_(i, i));
  }

  double operator()(int i, int j) const { return m_(i, j); }
  double diag_bound() const { return diag_bound_; }
  int size() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
  double diag_bound_;
};

// Uniform proposal over a finite ground set {0, ..., n-1}.
struct FiniteDomain {
  using point_type = int;
  int n;
  int sample(Rng& rng) const { return static_cast<int>(rng.uniform_int(n)); }
  double volume() const { return static_cast<double>(n); }
};

// Uniform proposal over an axis-aligned box in R^d.
struct BoxDomain {
  using point_type = Eigen::VectorXd;
  Eigen::VectorXd lo, hi;

  Eigen::VectorXd sample(Rng& rng) const {
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
    return x;
  }
};

// Plain-text kernel matrix format: first line n, then n rows of n reals.
inline Eigen::MatrixXd load_kernel_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open kernel matrix file: " + path);
  int n = 0;
  if (!(in >> n) || n <= 0) throw std::invalid_argument("kernel matrix file must start with n > 0: " + path);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(in >> m(i, j)))
        throw std::invalid_argument("kernel matrix file truncated at row " + std::to_string(i) + ": " + path);
  return m;
}

inline void save_kernel_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write kernel matrix file: " + path);
  out << m.rows() << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

}  // namespace kdpp

#endif
