#include <catch2/catch_amalgamated.hpp>

#include "kdpp/gram.hpp"
#include "kdpp/kernel.hpp"
#include "kdpp/rng.hpp"
#include "kdpp/sphere.hpp"
#include "support/oracles.hpp"

using namespace kdpp;
using Catch::Approx;

namespace {

// Kernel that blows up on one specific pair, for the evaluation-error path.
struct PoisonKernel {
  using point_type = int;
  double operator()(int i, int j) const {
    if ((i == 1 && j == 2) || (i == 2 && j == 1)) return std::nan("");
    return i == j ? 1.0 : 0.0;
  }
  double diag_bound() const { return 1.0; }
};

std::vector<Eigen::VectorXd> random_sphere_points(int count, int d, Rng& rng) {
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < count; ++i) pts.push_back(uniform_sphere(d, rng));
  return pts;
}

}  // namespace

TEST_CASE("gram_det handles the empty product and tiny Gram matrices") {
  const MatrixKernel id(Eigen::MatrixXd::Identity(2, 2));
  CHECK(gram_det(id, std::vector<int>{}) == 1.0);
  CHECK(gram_det(id, {0, 1}) == Approx(1.0));

  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.5, 0.5, 1.0;
  const MatrixKernel corr(m);
  CHECK(gram_det(corr, {0, 1}) == Approx(0.75));

  const GaussianKernel g(1.0);
  Rng rng(11);
  const Eigen::VectorXd x = uniform_sphere(3, rng);
  CHECK(gram_det(g, {x, x}) == 0.0);  // rank deficient
}

TEST_CASE("gram_det is permutation invariant and nonnegative on PSD kernels") {
  Rng rng(23);
  const GaussianKernel g(0.8);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_sphere_points(5, 3, rng);
    const double base = gram_det(g, pts);
    CHECK(base >= -1e-9);  // diag bound is 1, so -1e-9 * maxdiag^k = -1e-9
    auto shuffled = pts;
    std::swap(shuffled[0], shuffled[3]);
    std::swap(shuffled[1], shuffled[4]);
    CHECK(gram_det(g, shuffled) == Approx(base).epsilon(1e-9).margin(1e-12));
  }
}

TEST_CASE("gram_det reports the offending pair on non-finite evaluations") {
  const PoisonKernel k;
  CHECK_THROWS_AS(gram_det(k, {0, 1, 2}), evaluation_error);
  try {
    gram_det(k, {0, 1, 2});
  } catch (const evaluation_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("det_ratio on the empty view is the diagonal value") {
  const GaussianKernel g(1.0);
  Rng rng(5);
  GramView<GaussianKernel> view(g);
  CHECK(view.det_ratio(uniform_sphere(4, rng)) == 1.0);
}

TEST_CASE("det_ratio matches the brute-force determinant quotient") {
  const MatrixKernel id(Eigen::MatrixXd::Identity(3, 3));
  auto view = GramView<MatrixKernel>::from_points(id, {0});
  CHECK(view.det_ratio(1) == Approx(1.0));  // orthogonal features

  const GaussianKernel g(1.0);
  Rng rng(17);
  const Eigen::VectorXd x = uniform_sphere(3, rng);
  auto gauss_view = GramView<GaussianKernel>::from_points(g, {x});
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::VectorXd y = uniform_sphere(3, rng);
    const double expected =
        oracles::gram_det_bruteforce(g, std::vector<Eigen::VectorXd>{x, y}) /
        oracles::gram_det_bruteforce(g, std::vector<Eigen::VectorXd>{x});
    CHECK(gauss_view.det_ratio(y) == Approx(1.0 - g(x, y) * g(x, y)).margin(1e-12));
    CHECK(gauss_view.det_ratio(y) == Approx(expected).margin(1e-12));
  }
  CHECK(gauss_view.det_ratio(x) == 0.0);  // clamped rank-deficient extension
}

TEST_CASE("det_ratio never exceeds the diagonal bound") {
  const GaussianKernel g(0.6);
  Rng rng(31);
  auto view = GramView<GaussianKernel>::from_points(g, random_sphere_points(4, 3, rng));
  REQUIRE(!view.singular());
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd y = uniform_sphere(3, rng);
    const double r = view.det_ratio(y);
    CHECK(r >= 0.0);
    CHECK(r <= g(y, y));
    CHECK(g(y, y) <= g.diag_bound());
  }
}

TEST_CASE("chained det_ratio products reconstruct gram_det") {
  Rng rng(47);
  const GaussianKernel g(0.9);
  for (int k = 1; k <= 8; ++k) {
    auto pts = random_sphere_points(k, 4, rng);
    GramView<GaussianKernel> view(g);
    double product = 1.0;
    for (const auto& p : pts) {
      product *= view.det_ratio(p);
      view.append(p);
    }
    const double direct = gram_det(g, pts);
    CHECK(product == Approx(direct).epsilon(1e-6));
  }
}

TEST_CASE("GramView reconstructs its Gram matrix and exposes log_det") {
  Rng rng(53);
  const GaussianKernel g(1.2);
  auto pts = random_sphere_points(6, 3, rng);
  auto view = GramView<GaussianKernel>::from_points(g, pts);
  REQUIRE(!view.singular());

  const Eigen::MatrixXd gram = oracles::gram_matrix(g, pts);
  const Eigen::MatrixXd l = view.chol().triangularView<Eigen::Lower>();
  CHECK(((l * l.transpose() - gram).norm() / gram.norm()) < 1e-8);

  const double direct = oracles::gram_det_bruteforce(g, pts);
  CHECK(std::exp(view.log_det()) == Approx(direct).epsilon(1e-8));
}

TEST_CASE("log_det is -inf exactly when the Gram matrix is numerically singular") {
  const GaussianKernel g(1.0);
  Rng rng(3);
  const Eigen::VectorXd x = uniform_sphere(3, rng);
  auto singular = GramView<GaussianKernel>::from_points(g, {x, x});
  CHECK(singular.singular());
  CHECK(std::isinf(singular.log_det()));
  CHECK(singular.log_det() < 0);
  CHECK_THROWS_AS(singular.det_ratio(x), std::invalid_argument);
  CHECK_THROWS_AS(singular.append(x), std::invalid_argument);

  auto healthy = GramView<GaussianKernel>::from_points(g, {x});
  CHECK(std::isfinite(healthy.log_det()));
}

TEST_CASE("downdate removes a point and agrees with fresh factorization") {
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.3, 0.3, 0.5;
  const MatrixKernel k(m);
  auto view = GramView<MatrixKernel>::from_points(k, {0, 1});
  auto reduced = view.downdated(0);
  REQUIRE(reduced.points() == std::vector<int>{1});
  CHECK(reduced.log_det() == Approx(std::log(0.5)));

  CHECK_THROWS_AS(view.downdated(2), std::out_of_range);
  CHECK_THROWS_AS(view.downdated(-1), std::out_of_range);
}

TEST_CASE("downdate then re-append restores log_det") {
  Rng rng(61);
  const GaussianKernel g(0.7);
  auto pts = random_sphere_points(5, 3, rng);
  auto view = GramView<GaussianKernel>::from_points(g, pts);
  REQUIRE(!view.singular());
  const double before = view.log_det();
  auto reduced = view.downdated(2);
  reduced.append(pts[2]);
  CHECK(reduced.log_det() == Approx(before).epsilon(1e-8));
}

TEST_CASE("downdate matches a fresh factorization on random views") {
  Rng rng(71);
  const GaussianKernel g(0.8);
  for (int trial = 0; trial < 10; ++trial) {
    auto pts = random_sphere_points(5, 4, rng);
    auto view = GramView<GaussianKernel>::from_points(g, pts);
    REQUIRE(!view.singular());
    for (int drop = 0; drop < 5; ++drop) {
      auto reduced = view.downdated(drop);
      auto remaining = pts;
      remaining.erase(remaining.begin() + drop);
      auto fresh = GramView<GaussianKernel>::from_points(g, remaining);
      CHECK(reduced.log_det() == Approx(fresh.log_det()).epsilon(1e-8));
      CHECK(reduced.points() == remaining);
    }
  }
}

TEST_CASE("kernel symmetry and PSD hold on random test sets") {
  Rng rng(83);
  const GaussianKernel g(1.0);
  CHECK(g.diag_bound() == 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto pts = random_sphere_points(6, 3, rng);
    for (const auto& a : pts) {
      CHECK(g(a, a) == 1.0);  // exactly
      for (const auto& b : pts) CHECK(std::abs(g(a, b) - g(b, a)) <= 1e-12);
    }
    const Eigen::MatrixXd gram = oracles::gram_matrix(g, pts);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * gram.trace());
  }
}
