#ifndef KDPP_CONDITIONAL_HPP
#define KDPP_CONDITIONAL_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kdpp/discrete.hpp"
#include "kdpp/errors.hpp"
#include "kdpp/gram.hpp"
#include "kdpp/kernel.hpp"
#include "kdpp/rng.hpp"

namespace kdpp {

template <class Point>
struct ConditionalDraw {
  Point point;
  long trials;
};

// Exact CD(S, 1) oracle on a finite ground set: weight every candidate by
// det_L(S + z) (via one det_ratio each, so O(n k^2) per draw) and draw by
// inverse CDF. `trials` is always 1.
class ExactDiscreteOracle {
 public:
  explicit ExactDiscreteOracle(const MatrixKernel& kernel) : kernel_(&kernel) {}

  ConditionalDraw<int> draw(const GramView<MatrixKernel>& view, Rng& rng) const {
    if (view.singular()) throw std::invalid_argument("conditional draw: view is singular");
    const int n = kernel_->size();
    const double tol = view.pivot_tolerance();
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (int z = 0; z < n; ++z) {
      bool used = false;
      for (int p : view.points()) used |= (p == z);
      if (used) continue;  // density is zero on S itself
      double r = view.det_ratio(z);
      if (r < tol) r = 0.0;
      w[z] = r;
      total += r;
    }
    if (total <= 0.0)
      throw std::invalid_argument("conditional draw: all candidate extensions are singular");
    double u = rng.uniform() * total;
    int pick = -1;
    for (int z = 0; z < n; ++z) {
      if (w[z] <= 0.0) continue;
      pick = z;
      u -= w[z];
      if (u < 0.0) break;
    }
    return {pick, 1};
  }

  const MatrixKernel& kernel() const { return *kernel_; }

 private:
  const MatrixKernel* kernel_;
};

// Rejection sampler for CD(S, 1) with a uniform proposal over a compact
// domain: propose y, accept with probability det_L(S + y) / det_L(S). Valid
// whenever L(z, z) <= 1 on the domain so the ratio is itself a probability.
// Proposals whose ratio sits below the Cholesky pivot tolerance are treated
// as zero-density and rejected outright; they cannot enter a chain state.
template <class Domain>
class RejectionOracle {
 public:
  using Point = typename Domain::point_type;

  explicit RejectionOracle(Domain domain, long max_trials = 1000000)
      : domain_(std::move(domain)), max_trials_(max_trials) {
    if (max_trials_ < 1) throw std::invalid_argument("max_trials must be positive");
  }

  template <kernel_like K>
  ConditionalDraw<Point> draw(const GramView<K>& view, Rng& rng) const {
    static_assert(std::is_same_v<typename K::point_type, Point>);
    if (view.singular()) throw std::invalid_argument("conditional draw: view is singular");
    if (view.kernel().diag_bound() > 1.0 + 1e-12)
      throw std::invalid_argument("rejection oracle requires diag_bound <= 1 (got " +
                                  std::to_string(view.kernel().diag_bound()) + ")");
    const double tol = view.pivot_tolerance();
    double ratio_sum = 0.0;
    for (long t = 1; t <= max_trials_; ++t) {
      Point y = domain_.sample(rng);
      const double u = rng.uniform();
      const double r = view.det_ratio(y);
      ratio_sum += r;
      if (r >= tol && u <= r) return {std::move(y), t};
    }
    throw budget_error("rejection sampler exhausted " + std::to_string(max_trials_) +
                           " proposals (empirical acceptance ~ " +
                           std::to_string(ratio_sum / static_cast<double>(max_trials_)) + ")",
                       max_trials_, ratio_sum / static_cast<double>(max_trials_));
  }

  const Domain& domain() const { return domain_; }
  long max_trials() const { return max_trials_; }

 private:
  Domain domain_;
  long max_trials_;
};

struct TrialsEstimate {
  double trials;      // 1 / mean det_ratio; +inf when no proposal had positive ratio
  double trials_se;   // delta-method standard error of `trials`
  double mean_ratio;  // per-proposal acceptance probability estimate
  double ratio_se;
  bool infinite;
};

// Monte Carlo estimate of the expected proposal count of the rejection
// sampler on a fixed view: T is geometric with success probability
// E_y[det_ratio(view, y)], so E[T] is the reciprocal of that mean.
template <kernel_like K, class Domain>
TrialsEstimate expected_trials(const GramView<K>& view, const Domain& domain, long mc_budget, Rng& rng) {
  if (view.singular()) throw std::invalid_argument("expected_trials: view is singular");
  if (mc_budget < 2) throw std::invalid_argument("expected_trials: mc_budget too small");
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < mc_budget; ++i) {
    const double r = view.det_ratio(domain.sample(rng));
    sum += r;
    sumsq += r * r;
  }
  const double m = sum / static_cast<double>(mc_budget);
  if (m <= 0.0)
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0.0, 0.0, true};
  const double var = std::max(0.0, sumsq / mc_budget - m * m);
  const double se = std::sqrt(var / static_cast<double>(mc_budget));
  return {1.0 / m, se / (m * m), m, se, false};
}

}  // namespace kdpp

#endif
