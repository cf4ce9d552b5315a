#ifndef KDPP_ERRORS_HPP
#define KDPP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kdpp {

// Kernel returned NaN/Inf for some pair of points.
class evaluation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Enumeration budget exceeded (states, cuts, orderings).
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejection sampler ran out of proposals. Carries the empirical
// acceptance estimate observed before giving up.
class budget_error : public std::runtime_error {
 public:
  budget_error(const std::string& what, long trials, double acceptance_estimate)
      : std::runtime_error(what), trials(trials), acceptance_estimate(acceptance_estimate) {}
  long trials;
  double acceptance_estimate;
};

// A standing assumption of the method does not hold for the requested
// parameters (e.g. no threshold t <= d with d^t/t! >= 2k).
class assumption_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A theorem-backed check failed. Surfacing this instead of asserting keeps
// counterexamples printable by the verify suites.
class verification_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdpp

#endif
