#ifndef KDPP_WARMSTART_HPP
#define KDPP_WARMSTART_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kdpp/discrete.hpp"
#include "kdpp/errors.hpp"
#include "kdpp/gram.hpp"
#include "kdpp/rng.hpp"

namespace kdpp {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

template <kernel_like K>
struct WarmStart {
  PointConfig<K> state;
  std::vector<long> per_step_trials;
};

// Greedy sequential conditional sampling: grow the state one point at a
// time, drawing step i+1 from CD({x_1..x_i}, 1). Exactly k oracle calls.
// The output density nu is within a (k!)^2 factor of the target k-DPP
// density, which is what makes it a warm start for the Gibbs chain.
template <kernel_like K, class Oracle>
WarmStart<K> greedy_start(const K& kernel, int k, const Oracle& oracle, Rng& rng) {
  if (k < 1) throw std::invalid_argument("greedy_start: require k >= 1");
  GramView<K> view(kernel);
  std::vector<long> trials;
  trials.reserve(k);
  for (int i = 0; i < k; ++i) {
    try {
      auto d = oracle.draw(view, rng);
      trials.push_back(d.trials);
      view.append(std::move(d.point));
    } catch (const budget_error& e) {
      throw budget_error("greedy start: oracle budget exhausted at step " + std::to_string(i) +
                             " of " + std::to_string(k) + " (partial state has " +
                             std::to_string(view.size()) + " points): " + e.what(),
                         e.trials, e.acceptance_estimate);
    }
  }
  return {std::move(view), std::move(trials)};
}

// Exact pmf of the greedy output distribution nu on an enumerable instance:
// sum over all k! visit orders of the product of exact one-point conditional
// probabilities, with subset determinants and extension totals memoized.
inline Eigen::VectorXd greedy_pmf_exact(const DiscreteKDpp& dpp) {
  const int n = dpp.n();
  const int k = dpp.k();
  if (k > 7) throw capacity_error("greedy_pmf_exact: k! orderings infeasible for k = " + std::to_string(k));

  const double tol = detail::matrix_pivot_tol(dpp.kernel());
  std::unordered_map<std::uint32_t, double> det;  // subset mask -> det(L_S), |S| <= k
  for (int j = 0; j <= k; ++j)
    for (const auto& s : detail::enumerate_subsets(n, j))
      det[detail::subset_mask(s)] = std::exp(detail::log_subdet(dpp.kernel(), s, tol));

  std::unordered_map<std::uint32_t, double> ext;  // subset mask -> sum_z det(L_{S+z}), |S| < k
  for (int j = 0; j < k; ++j)
    for (const auto& s : detail::enumerate_subsets(n, j)) {
      const std::uint32_t mask = detail::subset_mask(s);
      double total = 0.0;
      for (int z = 0; z < n; ++z)
        if (!(mask & (1u << z))) total += det.at(mask | (1u << z));
      ext[mask] = total;
    }

  Eigen::VectorXd nu(dpp.state_count());
  for (int si = 0; si < dpp.state_count(); ++si) {
    std::vector<int> perm = dpp.states()[si];
    std::sort(perm.begin(), perm.end());
    double mass = 0.0;
    do {
      double p = 1.0;
      std::uint32_t prefix = 0;
      for (int step = 0; step < k; ++step) {
        const double denom = ext.at(prefix);
        prefix |= (1u << perm[step]);
        const double num = det.at(prefix);
        if (num <= 0.0 || denom <= 0.0) {
          p = 0.0;
          break;
        }
        p *= num / denom;
      }
      mass += p;
    } while (std::next_permutation(perm.begin(), perm.end()));
    nu[si] = mass;
  }
  return nu;
}

// Var_pi(nu / pi), computed exactly from the enumerated pmfs. Also verifies
// the pointwise density bound nu <= (k!)^2 pi on the way (a violation means
// a real defect, so it throws rather than returning garbage).
inline double variance_bound_check(const DiscreteKDpp& dpp) {
  const Eigen::VectorXd nu = greedy_pmf_exact(dpp);
  const Eigen::VectorXd& pi = dpp.pmf();
  const double k_fact_sq = factorial(dpp.k()) * factorial(dpp.k());
  double second_moment = 0.0;
  for (int i = 0; i < dpp.state_count(); ++i) {
    if (pi[i] <= 0.0) {
      if (nu[i] > 1e-12)
        throw verification_error("greedy start put mass " + std::to_string(nu[i]) +
                                 " on a zero-density state");
      continue;
    }
    const double ratio = nu[i] / pi[i];
    if (ratio > k_fact_sq * (1.0 + 1e-9))
      throw verification_error("greedy density ratio " + std::to_string(ratio) + " exceeds (k!)^2 = " +
                               std::to_string(k_fact_sq));
    second_moment += nu[i] * ratio;  // pi * ratio^2
  }
  const double var = second_moment - 1.0;
  if (var > k_fact_sq * k_fact_sq - 1.0 + 1e-9)
    throw verification_error("warm-start variance " + std::to_string(var) + " exceeds (k!)^4 - 1");
  return var;
}

}  // namespace kdpp

#endif
