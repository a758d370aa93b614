#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmorder/random.hpp"

namespace mmorder {

/// Interval of the real line with open or closed ends; bounds may be infinite.
struct Interval {
  double lower;
  double upper;
  bool lower_closed = false;
  bool upper_closed = false;

  bool contains(double x) const;
  bool bounded_below() const;
  bool bounded_above() const;
};

/// Support of a density. Endpoints are always open here; density() returns 0
/// exactly at an endpoint.
struct Support {
  double lower;
  double upper;

  bool contains(double x) const { return x > lower && x < upper; }
};

enum class ParameterRole { general, location, scale };
enum class Monotonicity { increasing, decreasing, none };

std::string_view to_string(Monotonicity m);

using FixedParams = std::map<std::string, double>;

/// A one-parameter family of densities f(x; theta).
///
/// Instances are immutable; share them through shared_ptr<const Family>.
class Family {
 public:
  virtual ~Family() = default;

  virtual std::string name() const = 0;
  virtual Interval param_domain() const = 0;
  virtual Support support(double theta) const = 0;
  /// Union of supports over the whole parameter domain.
  virtual Support sample_space() const = 0;

  virtual double density(double x, double theta) const = 0;
  /// Defaults to log(density); overridden where a direct form avoids underflow.
  virtual double log_density(double x, double theta) const;

  virtual bool has_cdf() const { return false; }
  virtual double cdf(double x, double theta) const;
  virtual bool has_quantile() const { return false; }
  virtual double quantile(double u, double theta) const;

  virtual double sample(double theta, RandomStream& rng) const = 0;

  /// True when the support endpoints depend on theta.
  virtual bool moving_support() const { return false; }
  virtual ParameterRole role() const { return ParameterRole::general; }

  const FixedParams& fixed_params() const { return fixed_; }

  /// Throws DomainError if theta lies outside param_domain().
  void check_theta(double theta) const;

 protected:
  FixedParams fixed_;
};

using FamilyPtr = std::shared_ptr<const Family>;
using RealFn = std::function<double(double)>;

/// Exponential-family form f(x; theta) = h(x) c(theta) exp(eta(theta) T(x)).
///
/// Derivative slots left empty fall back to central differences.
struct ExpFamily {
  FamilyPtr base;
  RealFn h;
  RealFn c;
  RealFn eta;
  RealFn big_t;
  RealFn eta_prime;
  RealFn eta_second;
  RealFn log_c_prime;
  RealFn log_c_second;
  Monotonicity eta_direction = Monotonicity::none;
  Monotonicity t_direction = Monotonicity::none;

  double density(double x, double theta) const;
  double d_eta(double theta) const;
  double d2_eta(double theta) const;
  double d_log_c(double theta) const;
  double d2_log_c(double theta) const;
};

/// E_theta T(X) = -[log c]'(theta) / eta'(theta).
double exp_family_mean_T(const ExpFamily& ef, double theta);

/// Var_theta T(X) = (-[log c]'' eta' + [log c]' eta'') / (eta')^3, the
/// derivative of the mean divided by eta'.
double exp_family_var_T(const ExpFamily& ef, double theta);

/// Grid check of the declared eta/T monotonicity flags. Returns true if the
/// first differences on the grids agree with the declared directions.
bool verify_exp_family_monotonicity(const ExpFamily& ef, const std::vector<double>& x_grid,
                                    const std::vector<double>& theta_grid);

/// A catalog entry: the family plus its exponential-family form, if any.
struct Builtin {
  FamilyPtr family;
  std::optional<ExpFamily> exp;
};

/// Names accepted by make_builtin.
const std::vector<std::string>& catalog_names();

/// Build a catalog family. Recognised fixed parameters: `alpha` for
/// gamma_scale and `lambda` for gamma_shape (both default to 1). Unknown
/// names throw CatalogError; bad or unexpected parameters throw DomainError.
Builtin make_builtin(const std::string& name, const FixedParams& fixed_params = {});

/// log(1 + exp(x)) without overflow.
double softplus(double x);

namespace detail {
/// Marsaglia–Tsang gamma(shape, 1) variate; alpha < 1 uses the U^{1/alpha} boost.
double sample_gamma(double alpha, RandomStream& rng);
}  // namespace detail

}  // namespace mmorder
