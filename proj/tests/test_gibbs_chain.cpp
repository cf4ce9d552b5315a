#include <catch2/catch_amalgamated.hpp>

#include "kdpp/analysis.hpp"
#include "kdpp/chain.hpp"
#include "kdpp/conditional.hpp"
#include "kdpp/harness.hpp"
#include "support/oracles.hpp"

using namespace kdpp;
using Catch::Approx;

namespace {

using DiscreteChain = GibbsChain<MatrixKernel, ExactDiscreteOracle>;

PointConfig<MatrixKernel> config_of(const MatrixKernel& kernel, std::vector<int> pts) {
  auto view = GramView<MatrixKernel>::from_points(kernel, std::move(pts));
  REQUIRE(!view.singular());
  return view;
}

}  // namespace

TEST_CASE("non-lazy k=1 chain resamples from the stationary pmf") {
  Eigen::MatrixXd l(2, 2);
  l << 2, 0, 0, 1;
  const MatrixKernel kernel(l);
  const ExactDiscreteOracle oracle(kernel);
  DiscreteChain chain(kernel, 1, oracle, 4242, /*lazy=*/false);

  auto state = config_of(kernel, {1});
  const int steps = 40000;
  int at_zero = 0;
  for (int t = 0; t < steps; ++t) {
    state = chain.step(std::move(state));
    if (state.points()[0] == 0) ++at_zero;
  }
  // for k = 1 and no laziness every step is an independent exact draw
  CHECK(oracles::binomial_3sigma(static_cast<double>(at_zero) / steps, 2.0 / 3.0, steps));
}

TEST_CASE("identity kernel resamples uniformly over elements outside the retained set") {
  const MatrixKernel kernel(Eigen::MatrixXd::Identity(5, 5));
  const ExactDiscreteOracle oracle(kernel);
  // the Gibbs move conditions on the k-1 retained points; fix them to {0}
  const auto retained = config_of(kernel, {0});
  Rng rng(7);
  std::map<int, int> counts;
  const int draws = 30000;
  for (int t = 0; t < draws; ++t) ++counts[oracle.draw(retained, rng).point];
  CHECK(counts.count(0) == 0);  // the duplicate gets ratio 0
  REQUIRE(counts.size() == 4);
  for (const auto& [elem, c] : counts)
    CHECK(oracles::binomial_3sigma(static_cast<double>(c) / draws, 0.25, draws));
}

TEST_CASE("fixed seed gives an identical trajectory") {
  Rng gen(3);
  const MatrixKernel kernel(random_psd_kernel(5, gen));
  const ExactDiscreteOracle oracle(kernel);
  DiscreteChain a(kernel, 2, oracle, 99, true), b(kernel, 2, oracle, 99, true);
  auto sa = config_of(kernel, {0, 2});
  auto sb = config_of(kernel, {0, 2});
  for (int t = 0; t < 500; ++t) {
    sa = a.step(std::move(sa));
    sb = b.step(std::move(sb));
    REQUIRE(sa.points() == sb.points());
  }
}

TEST_CASE("run with zero steps returns only the start") {
  const MatrixKernel kernel(Eigen::MatrixXd::Identity(4, 4));
  const ExactDiscreteOracle oracle(kernel);
  DiscreteChain chain(kernel, 2, oracle, 1, true);
  auto traj = chain.run(config_of(kernel, {1, 3}), 0);
  REQUIRE(traj.size() == 1);
  CHECK(traj[0].points() == std::vector<int>{1, 3});
}

TEST_CASE("long run matches the enumerated pmf in TV") {
  Rng gen(11);
  const Eigen::MatrixXd l = random_psd_kernel(4, gen);
  const auto dpp = enumerate_pmf(l, 2);
  const MatrixKernel kernel(l);
  const ExactDiscreteOracle oracle(kernel);
  DiscreteChain chain(kernel, 2, oracle, 2024, true);

  Rng start_rng(55);
  auto state = config_of(kernel, dpp.sample(start_rng));
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(dpp.state_count());
  const long steps = 1000000;
  state = chain.run_callback(std::move(state), steps, 1, [&](long, const auto& s) {
    std::vector<int> pts = s.points();
    std::sort(pts.begin(), pts.end());
    freq[dpp.index_of(pts)] += 1.0;
  });
  freq /= freq.sum();
  CHECK(oracles::tv_distance(freq, dpp.pmf()) < 0.01);
}

TEST_CASE("laziness holds in place with probability 1/2 and only inserts holds") {
  Rng gen(19);
  const MatrixKernel kernel(random_psd_kernel(6, gen));
  const ExactDiscreteOracle oracle(kernel);
  DiscreteChain chain(kernel, 3, oracle, 313, true);

  auto state = config_of(kernel, {0, 1, 2});
  const int steps = 20000;
  int holds = 0;
  StepInfo info;
  for (int t = 0; t < steps; ++t) {
    const auto before = state.points();
    state = chain.step(std::move(state), info);
    if (info.held) {
      ++holds;
      CHECK(state.points() == before);  // a hold is a strict no-op
    } else {
      // a move changes at most one point
      int changed = 0;
      std::vector<int> now = state.points();
      std::sort(now.begin(), now.end());
      std::vector<int> prev = before;
      std::sort(prev.begin(), prev.end());
      std::vector<int> inter;
      std::set_intersection(prev.begin(), prev.end(), now.begin(), now.end(),
                            std::back_inserter(inter));
      changed = 3 - static_cast<int>(inter.size());
      CHECK(changed <= 1);
    }
  }
  CHECK(oracles::binomial_3sigma(static_cast<double>(holds) / steps, 0.5, steps));
}

TEST_CASE("chain never enters a zero-density state") {
  Eigen::MatrixXd l(3, 3);
  l << 1, 1, 0, 1, 1, 0, 0, 0, 1;  // states {0,1} has zero determinant
  const MatrixKernel kernel(l);
  const ExactDiscreteOracle oracle(kernel);
  DiscreteChain chain(kernel, 2, oracle, 77, true);
  auto state = config_of(kernel, {0, 2});
  for (int t = 0; t < 2000; ++t) {
    state = chain.step(std::move(state));
    std::vector<int> pts = state.points();
    std::sort(pts.begin(), pts.end());
    CHECK(pts != std::vector<int>({0, 1}));
  }
}

TEST_CASE("exact transition matrix matches the hand-computed two-state chain") {
  Eigen::MatrixXd l(2, 2);
  l << 2, 0, 0, 1;
  const auto dpp = enumerate_pmf(l, 1);
  const auto chain = exact_transition_matrix(dpp, true);
  CHECK(chain.P(0, 0) == Approx(0.5 + 1.0 / 3.0).margin(1e-14));
  CHECK(chain.P(0, 1) == Approx(1.0 / 6.0).margin(1e-14));
  CHECK(chain.P(1, 0) == Approx(1.0 / 3.0).margin(1e-14));
  CHECK(chain.P(1, 1) == Approx(0.5 + 1.0 / 6.0).margin(1e-14));
}

TEST_CASE("transition matrices are stochastic, reversible, and stationary") {
  Rng gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(gen.uniform_int(3));
    const int k = 1 + static_cast<int>(gen.uniform_int(3));
    const auto dpp = enumerate_pmf(random_psd_kernel(n, gen), std::min(k, n - 1));
    for (const bool lazy : {true, false}) {
      const auto chain = exact_transition_matrix(dpp, lazy);
      const int m = static_cast<int>(chain.pi.size());
      for (int x = 0; x < m; ++x) CHECK(std::abs(chain.P.row(x).sum() - 1.0) <= 1e-12);
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y)
          CHECK(std::abs(chain.pi[x] * chain.P(x, y) - chain.pi[y] * chain.P(y, x)) <= 1e-12);
      const Eigen::VectorXd piP = chain.P.transpose() * chain.pi;
      CHECK((piP - chain.pi).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("identity kernel chain has the uniform stationary vector") {
  const auto dpp = enumerate_pmf(Eigen::MatrixXd::Identity(5, 5), 2);
  const auto chain = exact_transition_matrix(dpp, true);
  const int m = static_cast<int>(chain.pi.size());
  for (int i = 0; i < m; ++i) CHECK(chain.pi[i] == Approx(1.0 / m));
  const Eigen::VectorXd piP = chain.P.transpose() * chain.pi;
  CHECK((piP - chain.pi).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lazy transition matrices have nonnegative spectrum") {
  Rng gen(29);
  for (int trial = 0; trial < 5; ++trial) {
    const auto dpp = enumerate_pmf(random_psd_kernel(5, gen), 2);
    const auto chain = exact_transition_matrix(dpp, true);
    const Eigen::VectorXd ev = chain_spectrum(chain.P, chain.pi);
    CHECK(ev.minCoeff() >= -1e-12);
  }
}

TEST_CASE("trajectory line formats") {
  CHECK(format_state(std::vector<int>{3, 7, 9}) == "3 7 9");
  std::vector<Eigen::VectorXd> pts(2);
  pts[0] = Eigen::Vector3d(1.0, 0.5, -0.25);
  pts[1] = Eigen::Vector3d(0.1, 0.2, 0.3);
  const std::string line = format_state(pts);
  CHECK(line == "1,0.5,-0.25 0.10000000000000001,0.20000000000000001,0.29999999999999999");
}
