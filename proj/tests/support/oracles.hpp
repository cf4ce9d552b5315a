#ifndef KDPP_TEST_ORACLES_HPP
#define KDPP_TEST_ORACLES_HPP

// Test-only oracles, deliberately independent of the library's Cholesky
// paths: determinants by cofactor expansion, distribution checks by direct
// quadrature, and classical goodness-of-fit statistics.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

// Determinant by recursive cofactor expansion (n <= ~10).
inline double cofactor_det(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * cofactor_det(minor);
  }
  return det;
}

template <class Kernel, class Point>
Eigen::MatrixXd gram_matrix(const Kernel& k, const std::vector<Point>& pts) {
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = k(pts[i], pts[j]);
  return g;
}

template <class Kernel, class Point>
double gram_det_bruteforce(const Kernel& k, const std::vector<Point>& pts) {
  return cofactor_det(gram_matrix(k, pts));
}

// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Kolmogorov-Smirnov one-sample test. cdf must be the exact CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

inline double ks_survival(double lambda) {
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) s += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  return std::clamp(s, 0.0, 1.0);
}

inline double ks_pvalue(const std::vector<double>& samples, const std::function<double(double)>& cdf) {
  const double d = ks_statistic(std::vector<double>(samples), cdf);
  const double rn = std::sqrt(static_cast<double>(samples.size()));
  return ks_survival((rn + 0.12 + 0.11 / rn) * d);
}

// Regularized incomplete gamma (series + continued fraction), for the
// chi-square survival function.
inline double gamma_p(double a, double x) {
  if (x < 0 || a <= 0) throw std::invalid_argument("gamma_p domain");
  if (x == 0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-14) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi_square_survival(double stat, int dof) { return 1.0 - gamma_p(0.5 * dof, 0.5 * stat); }

// Chi-square goodness-of-fit p-value of observed counts against expected.
inline double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& expected,
                                int fitted_params) {
  double stat = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < 5.0) continue;  // fold sparse bins out
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    ++bins;
  }
  const int dof = bins - 1 - fitted_params;
  if (dof < 1) throw std::invalid_argument("chi_square_pvalue: too few usable bins");
  return chi_square_survival(stat, dof);
}

// 3-sigma binomial check helper: |phat - p| <= 3 sqrt(p(1-p)/n).
inline bool binomial_3sigma(double phat, double p, double n) {
  return std::abs(phat - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n) + 1e-12;
}

inline double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace oracles

#endif
