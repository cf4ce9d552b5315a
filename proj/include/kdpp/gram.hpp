#ifndef KDPP_GRAM_HPP
#define KDPP_GRAM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kdpp/errors.hpp"
#include "kdpp/kernel.hpp"

namespace kdpp {

namespace detail {

inline std::string point_repr(int p) { return std::to_string(p); }

inline std::string point_repr(const Eigen::VectorXd& p) {
  std::string s;
  char buf[32];
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", p[i]);
    if (i) s += ',';
    s += buf;
  }
  return s;
}

template <kernel_like K>
double checked_eval(const K& kernel, const typename K::point_type& a, const typename K::point_type& b) {
  const double v = kernel(a, b);
  if (!std::isfinite(v))
    throw evaluation_error("non-finite kernel evaluation at pair (" + point_repr(a) + "; " + point_repr(b) + ")");
  return v;
}

// LINPACK-style rank-one Cholesky update: L L^T + v v^T -> L' L'^T, in place.
inline void chol_rank1_update(Eigen::Ref<Eigen::MatrixXd> L, Eigen::VectorXd v) {
  const Eigen::Index m = L.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    const double r = std::hypot(L(j, j), v[j]);
    const double c = r / L(j, j);
    const double s = v[j] / L(j, j);
    L(j, j) = r;
    for (Eigen::Index i = j + 1; i < m; ++i) {
      L(i, j) = (L(i, j) + s * v[i]) / c;
      v[i] = c * v[i] - s * L(i, j);
    }
  }
}

}  // namespace detail

// Cholesky-factored view of the Gram matrix {L(x_i, x_j)} over an ordered
// point list. The factor is maintained incrementally: appending a point is
// one forward solve (O(k^2)) and removing one is a rank-one update of the
// trailing block (O(k^2)); a full determinant is never recomputed on the
// hot path. The point list is ordered for storage only -- every externally
// visible quantity is permutation-invariant.
template <kernel_like K>
class GramView {
 public:
  using Point = typename K::point_type;

  explicit GramView(const K& kernel) : kernel_(&kernel) {}

  static GramView from_points(const K& kernel, std::vector<Point> pts) {
    GramView v(kernel);
    for (auto& p : pts) {
      if (v.singular_) {  // keep recording points past the first dead pivot
        v.points_.push_back(std::move(p));
        continue;
      }
      v.append_allowing_singular(std::move(p));
    }
    return v;
  }

  int size() const { return static_cast<int>(points_.size()); }
  bool singular() const { return singular_; }
  const std::vector<Point>& points() const { return points_; }
  const K& kernel() const { return *kernel_; }

  // log det of the Gram matrix; 0 for the empty view, -inf when singular.
  double log_det() const { return log_det_; }

  // The lower-triangular factor (entries above the diagonal are unspecified).
  const Eigen::MatrixXd& chol() const { return chol_; }

  double pivot_tolerance() const { return 1e-12 * kernel_->diag_bound(); }

  // det_L(points + y) / det_L(points): the squared residual of the feature
  // vector of y after projecting onto the span of the current points.
  // Cancellation at rank deficiency can leave a tiny negative; clamp to 0 so
  // downstream acceptance probabilities stay in [0, 1].
  double det_ratio(const Point& y) const {
    if (singular_) throw std::invalid_argument("det_ratio: view is singular");
    const double r = raw_residual(y);
    return r < 0.0 ? 0.0 : r;
  }

  void append(Point y) {
    if (singular_) throw std::invalid_argument("append: view is singular");
    append_allowing_singular(std::move(y));
  }

  // View over the same points minus the indexed one.
  GramView downdated(int index) const {
    if (index < 0 || index >= size()) throw std::out_of_range("downdated: index out of range");
    if (singular_) {  // factor is unusable; rebuild
      std::vector<Point> pts = points_;
      pts.erase(pts.begin() + index);
      return from_points(*kernel_, std::move(pts));
    }
    GramView v(*kernel_);
    const int k = size();
    const int m = k - 1;
    v.points_.reserve(m);
    for (int i = 0; i < k; ++i)
      if (i != index) v.points_.push_back(points_[i]);
    v.chol_.resize(m, m);
    v.chol_.topLeftCorner(index, index) = chol_.topLeftCorner(index, index);
    v.chol_.bottomLeftCorner(m - index, index) = chol_.block(index + 1, 0, m - index, index);
    v.chol_.bottomRightCorner(m - index, m - index) =
        chol_.block(index + 1, index + 1, m - index, m - index);
    if (index < m) {
      // Removing row/col `index` of the Gram matrix turns the trailing block
      // into L33 L33^T + l32 l32^T; fold the deleted column back in.
      Eigen::VectorXd l32 = chol_.block(index + 1, index, m - index, 1);
      detail::chol_rank1_update(v.chol_.bottomRightCorner(m - index, m - index), std::move(l32));
    }
    v.log_det_ = 0.0;
    for (int i = 0; i < m; ++i) v.log_det_ += 2.0 * std::log(v.chol_(i, i));
    if (m == 0) v.log_det_ = 0.0;
    return v;
  }

 private:
  // Residual pivot of y against the current factor, unclamped.
  double raw_residual(const Point& y) const {
    const double d = detail::checked_eval(*kernel_, y, y);
    const int k = size();
    if (k == 0) return d;
    Eigen::VectorXd c(k);
    for (int i = 0; i < k; ++i) c[i] = detail::checked_eval(*kernel_, points_[i], y);
    chol_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(c);
    return d - c.squaredNorm();
  }

  void append_allowing_singular(Point y) {
    const double d = detail::checked_eval(*kernel_, y, y);
    const int k = size();
    Eigen::VectorXd c(k);
    for (int i = 0; i < k; ++i) c[i] = detail::checked_eval(*kernel_, points_[i], y);
    if (k > 0) chol_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(c);
    const double r = d - c.squaredNorm();
    chol_.conservativeResize(k + 1, k + 1);
    chol_.row(k).head(k) = c.transpose();
    points_.push_back(std::move(y));
    if (r < pivot_tolerance()) {
      chol_(k, k) = 0.0;
      singular_ = true;
      log_det_ = -std::numeric_limits<double>::infinity();
    } else {
      chol_(k, k) = std::sqrt(r);
      log_det_ += std::log(r);
    }
  }

  const K* kernel_;
  std::vector<Point> points_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
  bool singular_ = false;
};

// det of the Gram matrix over `pts`, from scratch. Empty product is 1, which
// is what makes the k = 0 rejection step degenerate to accepting with
// probability L(y, y).
template <kernel_like K>
double gram_det(const K& kernel, const std::vector<typename K::point_type>& pts) {
  const int k = static_cast<int>(pts.size());
  if (k == 0) return 1.0;
  Eigen::MatrixXd g(k, k);
  for (int i = 0; i < k; ++i) {
    g(i, i) = detail::checked_eval(kernel, pts[i], pts[i]);
    for (int j = i + 1; j < k; ++j) g(i, j) = g(j, i) = detail::checked_eval(kernel, pts[i], pts[j]);
  }
  return g.determinant();
}

}  // namespace kdpp

#endif
