#ifndef KDPP_HARNESS_HPP
#define KDPP_HARNESS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kdpp/analysis.hpp"
#include "kdpp/chain.hpp"
#include "kdpp/conditional.hpp"
#include "kdpp/discrete.hpp"
#include "kdpp/errors.hpp"
#include "kdpp/sphere.hpp"
#include "kdpp/warmstart.hpp"

namespace kdpp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Instance generation for the verification suites.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd random_psd_kernel(int n, Rng& rng, bool unit_diag = false) {
  Eigen::MatrixXd a(n + 2, n);
  for (int i = 0; i < n + 2; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::MatrixXd l = a.transpose() * a / static_cast<double>(n + 2);
  if (unit_diag) {
    Eigen::VectorXd s = l.diagonal().array().rsqrt();
    l = (s.asDiagonal() * l * s.asDiagonal()).eval();
    l.diagonal().setOnes();
  }
  return l;
}

// Two nearly parallel feature vectors make one pair of states nearly
// unreachable from each other in a single move; the conductance theorem is
// kernel-independent so these must still pass.
inline Eigen::MatrixXd near_singular_kernel(int n, Rng& rng, double gap = 1e-6) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  a.row(1) = a.row(0);
  a(1, n - 1) += gap;
  return a * a.transpose() / static_cast<double>(n);
}

// (n, k) sizes whose state count C(n, k) stays within the 2^|Omega| cut
// enumeration budget (|Omega| <= 24).
inline std::vector<std::pair<int, int>> conductance_sizes(int max_n = 8, int max_k = 3) {
  std::vector<std::pair<int, int>> pool;
  for (int k = 1; k <= max_k; ++k)
    for (int n = k + 1; n <= max_n; ++n)
      if (binomial(n, k) <= 24.0) pool.emplace_back(n, k);
  return pool;
}

// ---------------------------------------------------------------------------
// Verify suites.
// ---------------------------------------------------------------------------

struct VerifyCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=" or ">="
  bool pass = false;
};

struct VerifyReport {
  std::string suite;
  bool all_pass = false;
  std::vector<VerifyCheck> checks;
  json counterexample;  // null unless some check failed with a concrete instance
};

struct VerifySizes {
  int instances = -1;  // -1 = suite default
  int max_n = -1;
  int max_k = -1;
};

namespace detail {

inline void add_check(VerifyReport& rep, const std::string& name, double measured, double threshold,
                      const std::string& relation) {
  const bool pass = relation == "<=" ? measured <= threshold : measured >= threshold;
  rep.checks.push_back({name, measured, threshold, relation, pass});
}

inline json kernel_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline VerifyReport run_verify_suite(const std::string& suite, const VerifySizes& sizes,
                                     std::uint64_t seed) {
  VerifyReport rep;
  rep.suite = suite;
  Rng rng(derive_stream(seed, "verify:" + suite));

  const auto draw_instance = [&](const std::vector<std::pair<int, int>>& pool) {
    const auto [n, k] = pool[rng.uniform_int(static_cast<long>(pool.size()))];
    return ConductanceInstance{random_psd_kernel(n, rng), k};
  };

  if (suite == "discrete-stationarity") {
    const int count = sizes.instances > 0 ? sizes.instances : 50;
    const auto pool = conductance_sizes(sizes.max_n > 0 ? sizes.max_n : 8, sizes.max_k > 0 ? sizes.max_k : 3);
    double max_row = 0.0, max_db = 0.0, max_stat = 0.0;
    for (int i = 0; i < count; ++i) {
      const auto inst = draw_instance(pool);
      const DiscreteKDpp dpp = DiscreteKDpp::enumerate(inst.kernel, inst.k);
      const SupportChain c = exact_transition_matrix(dpp, true);
      const int m = static_cast<int>(c.pi.size());
      for (int x = 0; x < m; ++x) max_row = std::max(max_row, std::abs(c.P.row(x).sum() - 1.0));
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y)
          max_db = std::max(max_db, std::abs(c.pi[x] * c.P(x, y) - c.pi[y] * c.P(y, x)));
      max_stat = std::max(max_stat, ((c.P.transpose() * c.pi).eval() - c.pi).cwiseAbs().maxCoeff());
    }
    detail::add_check(rep, "row-sums", max_row, 1e-12, "<=");
    detail::add_check(rep, "detailed-balance", max_db, 1e-12, "<=");
    detail::add_check(rep, "stationarity", max_stat, 1e-12, "<=");
  } else if (suite == "conductance" || suite == "cheeger") {
    const int count = sizes.instances > 0 ? sizes.instances : 50;
    const auto pool = conductance_sizes(sizes.max_n > 0 ? sizes.max_n : 8, sizes.max_k > 0 ? sizes.max_k : 3);
    std::vector<ConductanceInstance> instances;
    for (int i = 0; i < count; ++i) instances.push_back(draw_instance(pool));
    // a couple of adversarial near-singular kernels on top of the random draws
    instances.push_back({near_singular_kernel(4, rng), 2});
    instances.push_back({near_singular_kernel(5, rng), 2});

    if (suite == "conductance") {
      const ConductanceTheoremReport thm = verify_conductance_theorem(instances, true);
      detail::add_check(rep, "min phi*k^2", thm.min_phi_k2, thm.threshold, ">=");
      if (!thm.pass && thm.worst_instance >= 0) {
        const auto& inst = instances[thm.worst_instance];
        rep.counterexample = {{"kernel", detail::kernel_to_json(inst.kernel)},
                              {"k", inst.k},
                              {"phi", thm.rows[thm.worst_instance].phi}};
      }
    } else {
      double worst_lower = std::numeric_limits<double>::infinity();  // lambda - phi^2/8
      double worst_upper = std::numeric_limits<double>::infinity();  // 2 phi - lambda
      for (const auto& inst : instances) {
        const DiscreteKDpp dpp = DiscreteKDpp::enumerate(inst.kernel, inst.k);
        const SupportChain c = exact_transition_matrix(dpp, true);
        const double phi = conductance_exact(c.P, c.pi).phi;
        const double lam = poincare_exact(c.P, c.pi);
        worst_lower = std::min(worst_lower, lam - phi * phi / 8.0 * (1.0 - 1e-10));
        worst_upper = std::min(worst_upper, 2.0 * phi * (1.0 + 1e-10) - lam);
        if ((worst_lower < 0 || worst_upper < 0) && rep.counterexample.is_null())
          rep.counterexample = {{"kernel", detail::kernel_to_json(inst.kernel)},
                                {"k", inst.k},
                                {"phi", phi},
                                {"lambda", lam}};
      }
      detail::add_check(rep, "lambda - phi^2/8", worst_lower, 0.0, ">=");
      detail::add_check(rep, "2 phi - lambda", worst_upper, 0.0, ">=");
    }
  } else if (suite == "warmstart-bound") {
    const int count = sizes.instances > 0 ? sizes.instances : 20;
    const int max_n = sizes.max_n > 0 ? sizes.max_n : 6;
    const int max_k = sizes.max_k > 0 ? sizes.max_k : 3;
    double worst_ratio = 0.0, worst_var = 0.0;
    for (int i = 0; i < count; ++i) {
      const int k = 2 + static_cast<int>(rng.uniform_int(std::max(1, max_k - 1)));
      const int n = std::max(k + 2, max_n - static_cast<int>(rng.uniform_int(2)));
      const DiscreteKDpp dpp = DiscreteKDpp::enumerate(random_psd_kernel(n, rng), k);
      const Eigen::VectorXd nu = greedy_pmf_exact(dpp);
      const double kf2 = factorial(k) * factorial(k);
      double ratio = 0.0;
      for (int s = 0; s < dpp.state_count(); ++s)
        if (dpp.pmf()[s] > 0.0) ratio = std::max(ratio, nu[s] / dpp.pmf()[s]);
      const double var = variance_bound_check(dpp);
      worst_ratio = std::max(worst_ratio, ratio / kf2);
      worst_var = std::max(worst_var, var / (kf2 * kf2 - 1.0));
      if ((ratio > kf2 * (1 + 1e-9)) && rep.counterexample.is_null())
        rep.counterexample = {{"kernel", detail::kernel_to_json(dpp.kernel())}, {"k", k}, {"ratio", ratio}};
    }
    detail::add_check(rep, "max (nu/pi) / (k!)^2", worst_ratio, 1.0 + 1e-9, "<=");
    detail::add_check(rep, "max Var / ((k!)^4 - 1)", worst_var, 1.0 + 1e-9, "<=");
  } else if (suite == "eigens-trace") {
    double worst = 0.0;
    for (const int d : {3, 5, 10})
      for (const double sigma : {0.5, 1.0, 2.0})
        worst = std::max(worst, std::abs(eigen_ladder(d, sigma).tail_mass));
    detail::add_check(rep, "max |trace - 1|", worst, 1e-8, "<=");
  } else {
    throw std::invalid_argument(
        "unknown suite '" + suite +
        "' (expected discrete-stationarity, conductance, cheeger, warmstart-bound, eigens-trace)");
  }

  rep.all_pass = true;
  for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

inline json verify_report_to_json(const VerifyReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"measured", c.measured},
                      {"threshold", c.threshold},
                      {"relation", c.relation},
                      {"pass", c.pass}});
  json j = {{"suite", rep.suite}, {"all_pass", rep.all_pass}, {"checks", checks}};
  if (!rep.counterexample.is_null()) j["counterexample"] = rep.counterexample;
  return j;
}

// ---------------------------------------------------------------------------
// Sampling jobs.
// ---------------------------------------------------------------------------

struct SphereJob {
  int d = 3;
  int k = 1;
  double sigma = 1.0;
  long steps = 1000;
  long burnin = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "lines";  // lines | json
};

struct DiscreteJob {
  std::string kernel_path;
  int k = 1;
  long steps = 1000;
  long burnin = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  std::string out;
};

// Thm 4.3 step budget with an explicit constant of 1, for reference output.
inline long reference_step_budget(int k, double eps) {
  return static_cast<long>(std::ceil(std::pow(static_cast<double>(k), 5) * std::log(k / eps)));
}

namespace detail {

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace detail

// Warm start via the greedy initializer, `burnin` unrecorded moves, then
// `steps` recorded moves written thinned to `out`. The output file is a pure
// function of (config, seed); wall time lives only in the returned summary's
// metadata object.
inline json run_sample_sphere(const SphereJob& job) {
  if (job.d < 2 || job.k < 1 || !(job.sigma > 0))
    throw std::invalid_argument("sample-sphere: require d >= 2, k >= 1, sigma > 0");
  detail::WallClock clock;
  const GaussianKernel kernel(job.sigma);
  const RejectionOracle<SphereDomain> oracle(SphereDomain{job.d});

  Rng warm_rng(derive_stream(job.seed, "warmstart"));
  auto warm = greedy_start(kernel, job.k, oracle, warm_rng);
  long warm_trials = 0;
  for (long t : warm.per_step_trials) warm_trials += t;

  GibbsChain<GaussianKernel, RejectionOracle<SphereDomain>> chain(
      kernel, job.k, oracle, derive_stream(job.seed, "chain"), true);
  auto state = std::move(warm.state);
  for (long t = 0; t < job.burnin; ++t) state = chain.step(std::move(state));
  const long burnin_trials = chain.total_trials();

  std::ofstream file;
  json states_json = json::array();
  const bool as_json = job.format == "json";
  if (!as_json) {
    file.open(job.out);
    if (!file) throw std::invalid_argument("cannot open output file: " + job.out);
  }
  long recorded = 0;
  state = chain.run_callback(std::move(state), job.steps, job.thin, [&](long, const auto& s) {
    ++recorded;
    if (as_json) {
      json pts = json::array();
      for (const auto& p : s.points()) {
        json coords = json::array();
        for (Eigen::Index i = 0; i < p.size(); ++i) coords.push_back(p[i]);
        pts.push_back(coords);
      }
      states_json.push_back(pts);
    } else {
      file << format_state(s.points()) << "\n";
    }
  });

  json config = {{"d", job.d},         {"k", job.k},       {"sigma", job.sigma},
                 {"steps", job.steps}, {"burnin", job.burnin}, {"thin", job.thin},
                 {"seed", job.seed},   {"format", job.format}, {"out", job.out}};
  json theory;
  try {
    theory = {{"t", threshold_t(job.d, job.k)},
              {"acceptance_lower_bound", acceptance_lower_bound(job.d, job.k, job.sigma)},
              {"step_budget_eps_0.05", reference_step_budget(job.k, 0.05)}};
  } catch (const assumption_error& e) {
    theory = {{"assumption_violated", e.what()},
              {"step_budget_eps_0.05", reference_step_budget(job.k, 0.05)}};
  }
  json summary = {{"config", config},
                  {"warmstart_trials", warm_trials},
                  {"burnin_trials", burnin_trials},
                  {"sampling_trials", chain.total_trials() - burnin_trials},
                  {"recorded_states", recorded},
                  {"theory", theory}};
  if (as_json) {
    std::ofstream jf(job.out);
    if (!jf) throw std::invalid_argument("cannot open output file: " + job.out);
    json doc = {{"config", config}, {"states", states_json}, {"summary", summary}};
    jf << doc.dump(2) << "\n";
  }
  summary["metadata"] = {{"wall_ms", clock.ms()}};
  return summary;
}

inline json run_sample_discrete(const DiscreteJob& job) {
  if (job.k < 1) throw std::invalid_argument("sample-discrete: require k >= 1");
  detail::WallClock clock;
  const MatrixKernel kernel(load_kernel_matrix(job.kernel_path));
  if (job.k > kernel.size()) throw std::invalid_argument("sample-discrete: k exceeds ground set size");
  const ExactDiscreteOracle oracle(kernel);

  Rng warm_rng(derive_stream(job.seed, "warmstart"));
  auto warm = greedy_start(kernel, job.k, oracle, warm_rng);

  GibbsChain<MatrixKernel, ExactDiscreteOracle> chain(kernel, job.k, oracle,
                                                      derive_stream(job.seed, "chain"), true);
  auto state = std::move(warm.state);
  for (long t = 0; t < job.burnin; ++t) state = chain.step(std::move(state));

  std::ofstream file(job.out);
  if (!file) throw std::invalid_argument("cannot open output file: " + job.out);
  long recorded = 0;
  chain.run_callback(std::move(state), job.steps, job.thin, [&](long, const auto& s) {
    ++recorded;
    file << format_state(s.points()) << "\n";
  });

  json summary = {{"config",
                   {{"kernel", job.kernel_path},
                    {"k", job.k},
                    {"steps", job.steps},
                    {"burnin", job.burnin},
                    {"thin", job.thin},
                    {"seed", job.seed},
                    {"out", job.out}}},
                  {"n", kernel.size()},
                  {"recorded_states", recorded},
                  {"step_budget_eps_0.05", reference_step_budget(job.k, 0.05)}};
  summary["metadata"] = {{"wall_ms", clock.ms()}};
  return summary;
}

// CSV ladder dump: ell, multiplicity, mu, cum_trace.
inline void run_eigens(int d, double sigma, int ell_max, const std::string& out) {
  const SpectralLadder lad = eigen_ladder(d, sigma, ell_max);
  std::ofstream file(out);
  if (!file) throw std::invalid_argument("cannot open output file: " + out);
  file << "ell,multiplicity,mu,cum_trace\n";
  double cum = 0.0, comp = 0.0;
  char buf[64];
  for (const auto& e : lad.entries) {
    const double y = e.weight - comp;
    const double t = cum + y;
    comp = (t - cum) - y;
    cum = t;
    std::snprintf(buf, sizeof(buf), "%.17g", e.mu);
    file << e.ell << "," << detail::u128_to_string(e.multiplicity) << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", cum);
    file << "," << buf << "\n";
  }
}

inline json chain_report_to_json(const ChainReport& rep) {
  json states = json::array();
  for (const auto& s : rep.states) states.push_back(s);
  json transition = json::array();
  for (Eigen::Index i = 0; i < rep.transition.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < rep.transition.cols(); ++j) row.push_back(rep.transition(i, j));
    transition.push_back(row);
  }
  return {{"instance", {{"n", rep.n}, {"k", rep.k}, {"lazy", rep.lazy}}},
          {"states", states},
          {"stationary", detail::vector_to_json(rep.stationary)},
          {"transition", transition},
          {"phi", rep.conductance},
          {"cut", rep.min_cut},
          {"lambda", rep.poincare},
          {"spectral_gap", rep.spectral_gap},
          {"warmstart_var", rep.warmstart_var},
          {"curves", {{"tv", rep.tv_curve}, {"var", rep.var_curve}}}};
}

// Full chain report as JSON plus a flat CSV of the decay curves next to it.
inline json run_analyze(const std::string& kernel_path, int k, const std::string& out) {
  const DiscreteKDpp dpp = DiscreteKDpp::enumerate(load_kernel_matrix(kernel_path), k);
  const ChainReport rep = analyze_chain(dpp, true);
  const json doc = chain_report_to_json(rep);
  std::ofstream file(out);
  if (!file) throw std::invalid_argument("cannot open output file: " + out);
  file << doc.dump(2) << "\n";
  std::ofstream csv(out + ".curves.csv");
  csv << "step,tv,var\n";
  for (std::size_t t = 0; t < rep.tv_curve.size(); ++t)
    csv << t << "," << rep.tv_curve[t] << "," << rep.var_curve[t] << "\n";
  return doc;
}

}  // namespace kdpp

#endif
