#ifndef KDPP_DISCRETE_HPP
#define KDPP_DISCRETE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "kdpp/errors.hpp"
#include "kdpp/kernel.hpp"
#include "kdpp/rng.hpp"

namespace kdpp {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

namespace detail {

// log det of the principal submatrix L_S via pivoted-tolerance Cholesky;
// -inf when a pivot falls below 1e-12 * max-diagonal (numerically singular).
inline double log_subdet(const Eigen::MatrixXd& L, const std::vector<int>& s, double pivot_tol) {
  const int k = static_cast<int>(s.size());
  if (k == 0) return 0.0;
  Eigen::MatrixXd chol(k, k);
  double log_det = 0.0;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i) {
      double v = L(s[i], s[j]);
      for (int m = 0; m < j; ++m) v -= chol(i, m) * chol(j, m);
      chol(i, j) = v;
    }
    const double pivot = chol(j, j);
    if (pivot < pivot_tol) return -std::numeric_limits<double>::infinity();
    const double root = std::sqrt(pivot);
    log_det += std::log(pivot);
    for (int i = j; i < k; ++i) chol(i, j) /= root;
  }
  return log_det;
}

inline double matrix_pivot_tol(const Eigen::MatrixXd& L) {
  return 1e-12 * L.diagonal().maxCoeff();
}

// All size-k subsets of {0..n-1} in lexicographic order, as sorted lists.
inline std::vector<std::vector<int>> enumerate_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  for (int i = 0; i < k; ++i) cur[i] = i;
  if (k == 0) {
    out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

inline std::uint32_t subset_mask(const std::vector<int>& s) {
  std::uint32_t m = 0;
  for (int i : s) m |= (1u << i);
  return m;
}

// Normalize exp(log_w) into a probability vector with a log-sum-exp shift;
// the shifted sum itself is compensated because the terms span many orders
// of magnitude. Returns {pmf, log_sum}.
inline std::pair<Eigen::VectorXd, double> normalize_log_weights(const std::vector<double>& log_w) {
  double m = -std::numeric_limits<double>::infinity();
  for (double lw : log_w) m = std::max(m, lw);
  if (!std::isfinite(m)) throw std::invalid_argument("all weights are zero: no state has positive density");
  const auto n = log_w.size();
  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  double sum = 0.0, comp = 0.0;  // Kahan
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(log_w[i] - m);
    p[static_cast<Eigen::Index>(i)] = v;
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  p /= sum;
  return {p, m + std::log(sum)};
}

}  // namespace detail

// Exact representation of a discrete k-DPP on a small ground set: the full
// enumerated pmf over all C(n, k) subsets, P(S) = det(L_S) / Z. This is the
// ground truth every sampler and chain statistic is checked against.
class DiscreteKDpp {
 public:
  static constexpr double kMaxStates = 2e6;
  static constexpr int kMaxGround = 24;

  static DiscreteKDpp enumerate(Eigen::MatrixXd L, int k) {
    const int n = static_cast<int>(L.rows());
    if (L.rows() != L.cols()) throw std::invalid_argument("kernel matrix must be square");
    if (k < 0 || k > n) throw std::invalid_argument("require 0 <= k <= n");
    const double count = binomial(n, k);
    if (n > kMaxGround || count > kMaxStates)
      throw capacity_error("enumeration budget exceeded: C(" + std::to_string(n) + "," +
                           std::to_string(k) + ") = " + std::to_string(count));
    DiscreteKDpp d;
    d.L_ = std::move(L);
    d.n_ = n;
    d.k_ = k;
    d.states_ = detail::enumerate_subsets(n, k);
    const double tol = detail::matrix_pivot_tol(d.L_);
    std::vector<double> log_dets(d.states_.size());
    for (std::size_t i = 0; i < d.states_.size(); ++i)
      log_dets[i] = detail::log_subdet(d.L_, d.states_[i], tol);
    auto [pmf, log_z] = detail::normalize_log_weights(log_dets);
    d.pmf_ = std::move(pmf);
    d.log_z_ = log_z;
    d.cdf_.resize(d.pmf_.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d.pmf_.size(); ++i) {
      acc += d.pmf_[i];
      d.cdf_[static_cast<std::size_t>(i)] = acc;
    }
    d.index_.reserve(d.states_.size() * 2);
    for (std::size_t i = 0; i < d.states_.size(); ++i)
      d.index_.emplace(detail::subset_mask(d.states_[i]), static_cast<int>(i));
    return d;
  }

  int n() const { return n_; }
  int k() const { return k_; }
  const Eigen::MatrixXd& kernel() const { return L_; }
  const std::vector<std::vector<int>>& states() const { return states_; }
  const Eigen::VectorXd& pmf() const { return pmf_; }
  double log_partition() const { return log_z_; }
  double partition() const { return std::exp(log_z_); }

  int state_count() const { return static_cast<int>(states_.size()); }

  int index_of(const std::vector<int>& subset) const {
    const auto it = index_.find(detail::subset_mask(subset));
    if (it == index_.end()) throw std::invalid_argument("subset is not a state of this k-DPP");
    return it->second;
  }

  int index_of_mask(std::uint32_t mask) const { return index_.at(mask); }

  double state_pmf(const std::vector<int>& subset) const { return pmf_[index_of(subset)]; }

  // Inverse-CDF draw over the enumerated pmf.
  std::vector<int> sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t i = std::min<std::size_t>(it - cdf_.begin(), states_.size() - 1);
    return states_[i];
  }

 private:
  DiscreteKDpp() = default;
  Eigen::MatrixXd L_;
  int n_ = 0, k_ = 0;
  std::vector<std::vector<int>> states_;
  Eigen::VectorXd pmf_;
  std::vector<double> cdf_;
  double log_z_ = 0.0;
  std::unordered_map<std::uint32_t, int> index_;
};

inline DiscreteKDpp enumerate_pmf(Eigen::MatrixXd L, int k) { return DiscreteKDpp::enumerate(std::move(L), k); }

struct ConditionalPmf {
  std::vector<std::vector<int>> extensions;  // sorted j-subsets of the complement of S
  Eigen::VectorXd pmf;
};

// CD(S, j): pmf over size-j extensions of S, proportional to det(L_{S + T}).
// Extensions intersecting S carry density zero and are simply not enumerated.
inline ConditionalPmf conditional_pmf(const Eigen::MatrixXd& L, const std::vector<int>& S, int j) {
  const int n = static_cast<int>(L.rows());
  if (j < 1) throw std::invalid_argument("conditional_pmf: require j >= 1");
  std::vector<int> s = S;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (s.size() != S.size()) throw std::invalid_argument("conditional_pmf: S has repeated elements");
  for (int i : s)
    if (i < 0 || i >= n) throw std::invalid_argument("conditional_pmf: S out of range");
  if (static_cast<int>(s.size()) + j > n)
    throw std::domain_error("conditional_pmf: |S| + j exceeds ground set size");

  std::vector<int> complement;
  complement.reserve(n - s.size());
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(s.begin(), s.end(), i)) complement.push_back(i);

  const double count = binomial(static_cast<int>(complement.size()), j);
  if (count > DiscreteKDpp::kMaxStates)
    throw capacity_error("conditional enumeration budget exceeded: C(" +
                         std::to_string(complement.size()) + "," + std::to_string(j) + ")");

  const double tol = detail::matrix_pivot_tol(L);
  ConditionalPmf out;
  std::vector<double> log_w;
  for (auto& pick : detail::enumerate_subsets(static_cast<int>(complement.size()), j)) {
    std::vector<int> ext(j);
    for (int t = 0; t < j; ++t) ext[t] = complement[pick[t]];
    std::vector<int> full = s;
    full.insert(full.end(), ext.begin(), ext.end());
    std::sort(full.begin(), full.end());
    log_w.push_back(detail::log_subdet(L, full, tol));
    out.extensions.push_back(std::move(ext));
  }
  out.pmf = detail::normalize_log_weights(log_w).first;
  return out;
}

}  // namespace kdpp

#endif
