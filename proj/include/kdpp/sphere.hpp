#ifndef KDPP_SPHERE_HPP
#define KDPP_SPHERE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kdpp/errors.hpp"
#include "kdpp/kernel.hpp"
#include "kdpp/rng.hpp"

namespace kdpp {

// Spherical Gaussian kernel G_sigma(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
// G(x, x) = 1 exactly, so 1 is a certified diagonal bound.
class GaussianKernel {
 public:
  using point_type = Eigen::VectorXd;

  explicit GaussianKernel(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianKernel: sigma must be positive");
    inv_two_sigma_sq_ = 1.0 / (2.0 * sigma * sigma);
  }

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return std::exp(-(x - y).squaredNorm() * inv_two_sigma_sq_);
  }

  double diag_bound() const { return 1.0; }
  double sigma() const { return sigma_; }

 private:
  double sigma_;
  double inv_two_sigma_sq_;
};

// Unit-norm d-vector, rotation invariant in distribution: d standard
// normals, normalized (resampling the measure-zero all-zeros draw).
inline Eigen::VectorXd uniform_sphere(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("uniform_sphere: require d >= 1");
  Eigen::VectorXd x(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) x[i] = rng.normal();
    norm = x.norm();
  } while (norm < 1e-150);
  return x / norm;
}

struct SphereDomain {
  using point_type = Eigen::VectorXd;
  int d;
  Eigen::VectorXd sample(Rng& rng) const { return uniform_sphere(d, rng); }
};

namespace detail {

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

using u128 = unsigned __int128;

inline std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s += static_cast<char>('0' + static_cast<int>(v % 10));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

inline u128 binomial_u128(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  u128 c = 1;
  for (int i = 1; i <= k; ++i) {
    const u128 f = static_cast<u128>(n - k + i);
    const u128 t = c * f;
    if (t / f != c) throw std::range_error("binomial overflows 128-bit integer");
    c = t / static_cast<u128>(i);  // exact: partial products are binomials
  }
  return c;
}

}  // namespace detail

// Dimension of the degree-ell spherical harmonics on S^{d-1}, exactly:
// N(d, ell) = C(ell + d - 2, ell) + C(ell + d - 3, ell - 1)
//           = (2 ell + d - 2) (ell + d - 3)! / (ell! (d - 2)!).
inline detail::u128 sphere_multiplicity_exact(int d, int ell) {
  if (d < 2 || ell < 0) throw std::invalid_argument("sphere_multiplicity: require d >= 2, ell >= 0");
  if (ell == 0) return 1;
  return detail::binomial_u128(ell + d - 2, ell) + detail::binomial_u128(ell + d - 3, ell - 1);
}

inline double sphere_multiplicity(int d, int ell) {
  return static_cast<double>(sphere_multiplicity_exact(d, ell));
}

// log I_nu(z) for the modified Bessel function of the first kind,
//   I_nu(z) = sum_i (z/2)^(nu + 2i) / (i! Gamma(nu + i + 1)),
// summed in log space so the result is usable far past the range where
// I_nu itself overflows. Terms rise to a peak near i ~ z/2 and then fall;
// truncate once a term drops below 1e-16 of the running sum.
inline double log_bessel_i(double nu, double z) {
  if (nu < 0.0 || z < 0.0 || !std::isfinite(nu) || !std::isfinite(z))
    throw std::invalid_argument("log_bessel_i: require nu >= 0 and z >= 0");
  if (z == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double log_half_z = std::log(0.5 * z);
  const double quarter_z_sq = 0.25 * z * z;
  double sum = -std::numeric_limits<double>::infinity();
  for (long i = 0;; ++i) {
    const double term = (nu + 2.0 * i) * log_half_z - std::lgamma(i + 1.0) - std::lgamma(nu + i + 1.0);
    sum = detail::logaddexp(sum, term);
    const bool past_peak = quarter_z_sq < (i + 1.0) * (nu + i + 1.0);
    if (past_peak && term < sum + std::log(1e-16)) return sum;
    if (i > 100000000L) throw std::range_error("log_bessel_i series failed to converge");
  }
}

inline double bessel_i(double nu, double z) {
  const double lv = log_bessel_i(nu, z);
  if (lv > 709.0)
    throw std::range_error("bessel_i(" + std::to_string(nu) + ", " + std::to_string(z) +
                           ") exceeds double range; use log_bessel_i");
  return std::exp(lv);
}

// Eigenvalue ladder of the uniform-measure-normalized spherical Gaussian
// kernel (Minh et al.): for every degree ell,
//   mu_ell = e^{-2/sigma^2} sigma^{d-2} I_{ell + d/2 - 1}(2 / sigma^2) Gamma(d/2)
// with multiplicity N(d, ell). The ladder has unit trace, which is the
// cross-check that pins the standard Gamma(nu + i + 1) series convention.
struct SpectralLadder {
  struct Entry {
    int ell;
    detail::u128 multiplicity;
    double log_mu;
    double mu;      // exp(log_mu); may underflow to 0 deep in the tail
    double weight;  // N(d, ell) * mu_ell, computed in log space
  };

  int d = 0;
  double sigma = 0.0;
  std::vector<Entry> entries;
  double tail_mass = 0.0;   // 1 - trace of the computed ladder
  int monotone_from = 0;    // mu is strictly decreasing from this index on

  double trace() const {
    double sum = 0.0, comp = 0.0;
    for (const auto& e : entries) {
      const double y = e.weight - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    return sum;
  }
};

// ell_max < 0 selects the trace-convergence stopping rule: grow the ladder
// until N(d, ell) mu_ell < 1e-14 for three consecutive degrees.
inline SpectralLadder eigen_ladder(int d, double sigma, int ell_max = -1) {
  if (d < 2) throw std::invalid_argument("eigen_ladder: require d >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("eigen_ladder: require sigma > 0");
  SpectralLadder lad;
  lad.d = d;
  lad.sigma = sigma;
  const double z = 2.0 / (sigma * sigma);
  const double log_scale = -z + (d - 2) * std::log(sigma) + std::lgamma(0.5 * d);
  int small_streak = 0;
  for (int ell = 0;; ++ell) {
    if (ell_max >= 0 && ell > ell_max) break;
    if (ell_max < 0 && (small_streak >= 3 || ell > 200000)) break;
    const detail::u128 mult = sphere_multiplicity_exact(d, ell);
    const double log_mu = log_scale + log_bessel_i(ell + 0.5 * d - 1.0, z);
    const double log_weight = log_mu + std::log(static_cast<double>(mult));
    lad.entries.push_back({ell, mult, log_mu, std::exp(log_mu), std::exp(log_weight)});
    small_streak = (lad.entries.back().weight < 1e-14) ? small_streak + 1 : 0;
  }
  lad.tail_mass = 1.0 - lad.trace();
  if (lad.tail_mass < -1e-8)
    throw verification_error("eigen_ladder trace exceeds 1 by " + std::to_string(-lad.tail_mass));
  lad.monotone_from = 0;
  for (std::size_t i = 1; i < lad.entries.size(); ++i)
    if (!(lad.entries[i].log_mu < lad.entries[i - 1].log_mu))
      lad.monotone_from = static_cast<int>(i);
  return lad;
}

// The Theorem 5.5 bracket on mu_ell:
//   (2e/sigma^2)^ell * A / (2 ell + d - 2)^(ell + (d-1)/2),
// with A = A1 for the lower and A = A2 = A1 e^{1/12 + 1/sigma^4} for the
// upper bound. Diagnostic only.
struct EigenvalueBracket {
  double lower;
  double upper;
};

inline EigenvalueBracket minh_bracket(int d, double sigma, int ell) {
  if (d < 3) throw std::invalid_argument("minh_bracket: require d >= 3");
  const double log_a1 = -2.0 / (sigma * sigma) - 1.0 / 12.0 - 0.5 * std::log(M_PI) +
                        (0.5 * d - 1.0) * std::log(2.0 * M_E) + std::lgamma(0.5 * d);
  const double log_common = ell * std::log(2.0 * M_E / (sigma * sigma)) -
                            (ell + 0.5 * (d - 1.0)) * std::log(2.0 * ell + d - 2.0);
  const double log_a2 = log_a1 + 1.0 / 12.0 + 1.0 / std::pow(sigma, 4);
  return {std::exp(log_common + log_a1), std::exp(log_common + log_a2)};
}

// Smallest t >= 1 with d^t / t! >= 2k. d^t/t! peaks near t = d, so if the
// inequality has not held by t = d it never will, which happens exactly when
// the standing assumption k <= exp(d/4) is violated too badly.
inline int threshold_t(int d, long k) {
  if (d < 2 || k < 1) throw std::invalid_argument("threshold_t: require d >= 2 and k >= 1");
  const double target = std::log(2.0 * static_cast<double>(k));
  const double log_d = std::log(static_cast<double>(d));
  for (int t = 1; t <= d; ++t)
    if (t * log_d - std::lgamma(t + 1.0) >= target - 1e-12) return t;
  throw assumption_error("threshold_t: no t <= d with d^t/t! >= 2k (d = " + std::to_string(d) +
                         ", k = " + std::to_string(k) + "); requires k <= exp(d/4)");
}

// Certified lower bound on the per-proposal acceptance probability of the
// rejection oracle for ANY conditioning set of size k: the projection
// residual kernel keeps all but at most k eigenvalues of the ladder, so its
// trace is at least the ladder trace minus the k largest eigenvalues.
// Levels are consumed in decreasing mu order (robust to any numerically
// non-monotone head), splitting the straddling level exactly.
inline double acceptance_lower_bound(int d, int k, double sigma) {
  if (k < 0) throw std::invalid_argument("acceptance_lower_bound: require k >= 0");
  if (k > 0) threshold_t(d, k);  // validates the k <= exp(d/4) regime
  const SpectralLadder lad = eigen_ladder(d, sigma);

  std::vector<std::size_t> order(lad.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lad.entries[a].log_mu > lad.entries[b].log_mu;
  });

  detail::u128 remaining = static_cast<detail::u128>(k);
  double tail = 0.0, comp = 0.0;
  for (const std::size_t idx : order) {
    const auto& e = lad.entries[idx];
    double take;
    if (remaining == 0) {
      take = e.weight;
    } else if (e.multiplicity <= remaining) {
      remaining -= e.multiplicity;
      continue;
    } else {
      const double kept = static_cast<double>(e.multiplicity - remaining);
      take = std::exp(e.log_mu + std::log(kept));
      remaining = 0;
    }
    const double y = take - comp;
    const double t = tail + y;
    comp = (t - tail) - y;
    tail = t;
  }
  return tail;
}

}  // namespace kdpp

#endif
