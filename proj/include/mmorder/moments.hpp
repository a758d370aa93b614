#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmorder/families.hpp"

namespace mmorder {

/// Closed forms a caller may register for a moment function. Every slot is
/// optional; missing pieces are computed numerically.
struct MomentClosedForm {
  RealFn m;
  RealFn inverse;
  RealFn derivative;
  std::optional<Interval> range;          ///< exact m(Theta)
  std::optional<Monotonicity> direction;  ///< declared; verified on a grid
};

/// m(theta) = E_theta g(X) for a one-parameter family, with its inversion data.
///
/// The monotone direction is detected (or checked, when declared) once at
/// construction from a 50-point parameter grid. A moment function that is
/// not monotone, or constant, is rejected with DomainError.
class MomentSpec {
 public:
  MomentSpec(FamilyPtr family, std::string g_name, RealFn g, MomentClosedForm closed = {});

  const Family& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }
  const std::string& g_name() const { return g_name_; }
  double g(double x) const { return g_(x); }

  Monotonicity direction() const { return direction_; }
  /// m(Theta). Exact when registered; otherwise the hull of m over the
  /// construction grid, which may be narrower than the true range.
  const Interval& m_range() const { return range_; }
  bool range_is_exact() const { return range_exact_; }
  bool has_closed_form() const { return static_cast<bool>(closed_.m); }
  bool has_closed_inverse() const { return static_cast<bool>(closed_.inverse); }
  bool has_derivative() const { return static_cast<bool>(closed_.derivative); }

  double evaluate(double theta) const;
  double derivative(double theta) const { return closed_.derivative(theta); }
  double closed_inverse(double t) const { return closed_.inverse(t); }

 private:
  double integrate_moment(double theta) const;

  FamilyPtr family_;
  std::string g_name_;
  RealFn g_;
  MomentClosedForm closed_;
  Monotonicity direction_ = Monotonicity::none;
  Interval range_{0.0, 0.0};
  bool range_exact_ = false;
};

/// Result of a moment estimate theta_hat = m^{-1}(gbar).
struct Estimate {
  double theta_hat = 0.0;
  double gbar = 0.0;
  int iterations = 0;     ///< bisection/Newton steps; 0 for a closed-form inverse
  double residual = 0.0;  ///< |m(theta_hat) - gbar|
};

/// Spec for a catalog family from a CLI-style selector: `mean`, `log`, `T`,
/// `k-th:<k>` or `abs-log`. Closed forms are registered where known.
MomentSpec make_builtin_spec(const Builtin& builtin, std::string_view selector);

/// m(theta); throws DomainError outside the parameter domain and
/// IntegrationError when the defining integral does not converge.
double moment_function(const MomentSpec& spec, double theta);

/// m^{-1}(t), taking the infimum endpoint when m is flat at level t. Throws
/// OutOfRange when t is not attainable.
double invert_moment(const MomentSpec& spec, double t);

/// Same as invert_moment but also reports iteration count and residual.
Estimate invert_moment_detailed(const MomentSpec& spec, double t);

/// Method-of-moments estimate from a sample. Values outside the family's
/// sample space are rejected; an unattainable gbar raises EstimationInfeasible.
Estimate estimate(const MomentSpec& spec, std::span<const double> sample);

/// (1/n) sum T(x_i) + [log c]'(theta) / eta'(theta); zero at the MLE.
double mle_residual(const ExpFamily& ef, std::span<const double> sample, double theta);

/// d^2/dtheta^2 log L at theta_hat: n [log c]'' + eta'' sum T(x_i).
double second_order_check(const ExpFamily& ef, std::span<const double> sample, double theta_hat);

/// log L(x; theta) for an exponential family, used to cross-check the curvature.
double exp_family_log_likelihood(const ExpFamily& ef, std::span<const double> sample, double theta);

/// 50-point probe grid inside a parameter domain (log-spaced on (0, inf),
/// linear otherwise).
std::vector<double> parameter_probe_grid(const Interval& domain, std::size_t points = 50);

}  // namespace mmorder
