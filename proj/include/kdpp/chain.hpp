#ifndef KDPP_CHAIN_HPP
#define KDPP_CHAIN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kdpp/discrete.hpp"
#include "kdpp/errors.hpp"
#include "kdpp/gram.hpp"
#include "kdpp/rng.hpp"

namespace kdpp {

// One Gibbs-sampler state: k points with a nonsingular Gram view over them.
// GramView already carries both the point list and the factorization, so the
// chain state is simply a view constrained to |points| = k and det > 0.
template <kernel_like K>
using PointConfig = GramView<K>;

struct StepInfo {
  bool held = false;      // lazy coin said stay
  int removed_index = -1;
  long trials = 0;        // oracle proposals consumed
};

// Heat-bath Gibbs sampler over k-point configurations: remove a uniformly
// random point, resample it from the 1-point conditional given the rest.
// Lazy by default (hold with probability 1/2 before any coordinate choice):
// the mixing bounds need a nonnegative spectrum. Non-lazy is available for
// conductance experiments.
template <kernel_like K, class Oracle>
class GibbsChain {
 public:
  using Point = typename K::point_type;
  using State = PointConfig<K>;

  GibbsChain(const K& kernel, int k, Oracle oracle, std::uint64_t seed, bool lazy = true)
      : kernel_(&kernel), k_(k), oracle_(std::move(oracle)), lazy_(lazy), rng_(seed) {
    if (k < 1) throw std::invalid_argument("GibbsChain: require k >= 1");
  }

  State step(State state) {
    StepInfo info;
    return step(std::move(state), info);
  }

  State step(State state, StepInfo& info) {
    validate(state);
    ++step_count_;
    if (lazy_ && rng_.uniform() < 0.5) {
      info = StepInfo{true, -1, 0};
      return state;
    }
    const int i = static_cast<int>(rng_.uniform_int(k_));
    State reduced = state.downdated(i);
    auto d = oracle_.draw(reduced, rng_);
    reduced.append(std::move(d.point));  // throws if the resampled ratio is not positive
    info = StepInfo{false, i, d.trials};
    return reduced;
  }

  // Runs `steps` moves, invoking on_state(t, state) at t = 0 (the start) and
  // after every recorded step; with thin = m only every m-th state is
  // reported. Returns the final state.
  template <class F>
  State run_callback(State start, long steps, long thin, F&& on_state) {
    if (steps < 0) throw std::invalid_argument("run: steps must be >= 0");
    if (thin < 1) throw std::invalid_argument("run: thin must be >= 1");
    validate(start);
    on_state(0L, static_cast<const State&>(start));
    State cur = std::move(start);
    StepInfo info;
    for (long t = 1; t <= steps; ++t) {
      cur = step(std::move(cur), info);
      total_trials_ += info.trials;
      if (t % thin == 0) on_state(t, static_cast<const State&>(cur));
    }
    return cur;
  }

  std::vector<State> run(State start, long steps, long thin = 1) {
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(steps / thin) + 1);
    run_callback(std::move(start), steps, thin, [&](long, const State& s) { out.push_back(s); });
    return out;
  }

  const K& kernel() const { return *kernel_; }
  int k() const { return k_; }
  bool lazy() const { return lazy_; }
  long step_count() const { return step_count_; }
  long total_trials() const { return total_trials_; }
  Oracle& oracle() { return oracle_; }
  Rng& rng() { return rng_; }

 private:
  void validate(const State& s) const {
    if (s.size() != k_) throw std::invalid_argument("chain state has wrong size");
    if (s.singular()) throw std::invalid_argument("chain state is singular (zero density)");
  }

  const K* kernel_;
  int k_;
  Oracle oracle_;
  bool lazy_;
  Rng rng_;
  long step_count_ = 0;
  long total_trials_ = 0;
};

// Exact transition matrix of the Gibbs sampler restricted to the support of
// the enumerated k-DPP (states of positive density; the chain can neither
// start in nor enter the others). Row x: with the lazy hold factored in,
//   P(x -> x - x_i + z) = hold + (1/k) * sum_i pmf(S_i + z) / W(S_i),
// where S_i = x - x_i and W(S) is the total pmf over one-point extensions
// of S. Sharing W across rows keeps detailed balance exact to rounding.
struct SupportChain {
  int n = 0;
  int k = 0;
  bool lazy = true;
  std::vector<std::vector<int>> states;  // support subsets, enumeration order
  Eigen::VectorXd pi;                    // stationary pmf restricted to the support
  Eigen::MatrixXd P;                     // row-stochastic transition matrix
};

inline SupportChain exact_transition_matrix(const DiscreteKDpp& dpp, bool lazy = true) {
  const int k = dpp.k();
  if (k < 1) throw std::invalid_argument("exact_transition_matrix: require k >= 1");

  std::vector<int> support;
  for (int i = 0; i < dpp.state_count(); ++i)
    if (dpp.pmf()[i] > 0.0) support.push_back(i);
  const int m = static_cast<int>(support.size());
  std::vector<int> dense_index(dpp.state_count(), -1);
  for (int i = 0; i < m; ++i) dense_index[support[i]] = i;

  // W(S) over (k-1)-subsets S, accumulated from the enumerated pmf.
  std::unordered_map<std::uint32_t, double> ext_mass;
  ext_mass.reserve(dpp.state_count() * k * 2);
  for (int i = 0; i < dpp.state_count(); ++i) {
    const double p = dpp.pmf()[i];
    if (p <= 0.0) continue;
    const std::uint32_t mask = detail::subset_mask(dpp.states()[i]);
    for (int z : dpp.states()[i]) ext_mass[mask ^ (1u << z)] += p;
  }

  SupportChain out;
  out.n = dpp.n();
  out.k = k;
  out.lazy = lazy;
  out.pi.resize(m);
  out.P = Eigen::MatrixXd::Zero(m, m);
  out.states.reserve(m);
  for (int i = 0; i < m; ++i) {
    out.states.push_back(dpp.states()[support[i]]);
    out.pi[i] = dpp.pmf()[support[i]];
  }

  const double move_scale = (lazy ? 0.5 : 1.0) / static_cast<double>(k);
  for (int a = 0; a < m; ++a) {
    const std::vector<int>& x = out.states[a];
    const std::uint32_t mask = detail::subset_mask(x);
    for (int xi : x) {
      const std::uint32_t s_mask = mask ^ (1u << xi);
      const double w = ext_mass.at(s_mask);
      for (int z = 0; z < dpp.n(); ++z) {
        if (s_mask & (1u << z)) continue;
        const int target = dense_index[dpp.index_of_mask(s_mask | (1u << z))];
        if (target < 0) continue;  // zero-density extension, never accepted
        out.P(a, target) += move_scale * dpp.pmf()[support[target]] / w;
      }
    }
    if (lazy) out.P(a, a) += 0.5;
  }
  return out;
}

// Trajectory line format: points space-separated; a discrete point is its
// index, a continuous point is its coordinates comma-separated at full
// (17 significant digit) precision.
inline std::string format_state(const std::vector<int>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(pts[i]);
  }
  return s;
}

inline std::string format_state(const std::vector<Eigen::VectorXd>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += detail::point_repr(pts[i]);
  }
  return s;
}

}  // namespace kdpp

#endif
