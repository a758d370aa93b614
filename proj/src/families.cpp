#include "mmorder/families.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mmorder/error.hpp"
#include "mmorder/specfun.hpp"

namespace mmorder {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

const Interval positive_reals{0.0, inf};
const Interval real_line{neg_inf, inf};

double first_step(double theta) { return std::max(1e-5, 1e-7 * std::abs(theta)); }
double second_step(double theta) { return std::max(1e-4, 1e-4 * std::abs(theta)); }

double central_first(const RealFn& f, double theta) {
  const double h = first_step(theta);
  return (f(theta + h) - f(theta - h)) / (2.0 * h);
}

double central_second(const RealFn& f, double theta) {
  const double h = second_step(theta);
  return (f(theta + h) - 2.0 * f(theta) + f(theta - h)) / (h * h);
}

void require_unit(double u, const char* fn) {
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream msg;
    msg << fn << ": probability must lie in (0, 1), got " << u;
    throw DomainError(msg.str());
  }
}

// ---------------------------------------------------------------------------

class UniformSym final : public Family {
 public:
  std::string name() const override { return "uniform_sym"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double theta) const override { return {-theta, theta}; }
  Support sample_space() const override { return {neg_inf, inf}; }
  double density(double x, double theta) const override {
    return std::abs(x) < theta ? 0.5 / theta : 0.0;
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    return std::clamp((x + theta) / (2.0 * theta), 0.0, 1.0);
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "uniform_sym quantile");
    return theta * (2.0 * u - 1.0);
  }
  double sample(double theta, RandomStream& rng) const override {
    return theta * (2.0 * rng.uniform() - 1.0);
  }
  bool moving_support() const override { return true; }
  ParameterRole role() const override { return ParameterRole::scale; }
};

class UniformScale final : public Family {
 public:
  std::string name() const override { return "uniform_scale"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double theta) const override { return {0.0, theta}; }
  Support sample_space() const override { return {0.0, inf}; }
  double density(double x, double theta) const override {
    return x > 0.0 && x < theta ? 1.0 / theta : 0.0;
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override { return std::clamp(x / theta, 0.0, 1.0); }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "uniform_scale quantile");
    return theta * u;
  }
  double sample(double theta, RandomStream& rng) const override { return theta * rng.uniform(); }
  bool moving_support() const override { return true; }
  ParameterRole role() const override { return ParameterRole::scale; }
};

// f(x; theta) = sqrt(theta / (pi x^3)) exp(-theta / x), x > 0.
class LevyType final : public Family {
 public:
  std::string name() const override { return "levy_type"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double) const override { return {0.0, inf}; }
  Support sample_space() const override { return {0.0, inf}; }
  double density(double x, double theta) const override {
    if (!(x > 0.0) || std::isinf(x)) return 0.0;
    return std::exp(log_density(x, theta));
  }
  double log_density(double x, double theta) const override {
    if (!(x > 0.0) || std::isinf(x)) return neg_inf;
    return 0.5 * std::log(theta / std::numbers::pi) - 1.5 * std::log(x) - theta / x;
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    if (x <= 0.0) return 0.0;
    return std::erfc(std::sqrt(theta / x));
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "levy_type quantile");
    const double r = boost::math::erfc_inv(u);
    return theta / (r * r);
  }
  // 1/X ~ Gamma(1/2, rate theta), i.e. Z^2 / (2 theta).
  double sample(double theta, RandomStream& rng) const override {
    double z = 0.0;
    do {
      z = rng.normal();
    } while (z == 0.0);
    return 2.0 * theta / (z * z);
  }
};

double gamma_log_density(double x, double alpha, double scale) {
  if (!(x > 0.0) || std::isinf(x)) return neg_inf;
  return (alpha - 1.0) * std::log(x) - x / scale - specfun::log_gamma(alpha) -
         alpha * std::log(scale);
}

// Gamma with known shape alpha; theta is the scale lambda.
class GammaScale final : public Family {
 public:
  explicit GammaScale(double alpha) : alpha_(alpha) { fixed_["alpha"] = alpha; }
  std::string name() const override { return "gamma_scale"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double) const override { return {0.0, inf}; }
  Support sample_space() const override { return {0.0, inf}; }
  double density(double x, double theta) const override {
    const double l = log_density(x, theta);
    return std::isinf(l) ? 0.0 : std::exp(l);
  }
  double log_density(double x, double theta) const override {
    return gamma_log_density(x, alpha_, theta);
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(alpha_, x / theta);
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "gamma_scale quantile");
    return theta * boost::math::gamma_p_inv(alpha_, u);
  }
  double sample(double theta, RandomStream& rng) const override {
    return theta * detail::sample_gamma(alpha_, rng);
  }
  ParameterRole role() const override { return ParameterRole::scale; }

 private:
  double alpha_;
};

// Gamma with known scale lambda; theta is the shape alpha.
class GammaShape final : public Family {
 public:
  explicit GammaShape(double lambda) : lambda_(lambda) { fixed_["lambda"] = lambda; }
  std::string name() const override { return "gamma_shape"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double) const override { return {0.0, inf}; }
  Support sample_space() const override { return {0.0, inf}; }
  double density(double x, double theta) const override {
    const double l = log_density(x, theta);
    return std::isinf(l) ? 0.0 : std::exp(l);
  }
  double log_density(double x, double theta) const override {
    return gamma_log_density(x, theta, lambda_);
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(theta, x / lambda_);
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "gamma_shape quantile");
    return lambda_ * boost::math::gamma_p_inv(theta, u);
  }
  double sample(double theta, RandomStream& rng) const override {
    return lambda_ * detail::sample_gamma(theta, rng);
  }

 private:
  double lambda_;
};

// f(x; theta) = theta e^{-x} / (1 + e^{-x})^{theta + 1}; F(x) = (1 + e^{-x})^{-theta}.
class ExpLogistic final : public Family {
 public:
  std::string name() const override { return "exp_logistic"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double) const override { return {neg_inf, inf}; }
  Support sample_space() const override { return {neg_inf, inf}; }
  double density(double x, double theta) const override {
    const double l = log_density(x, theta);
    return std::isinf(l) ? 0.0 : std::exp(l);
  }
  double log_density(double x, double theta) const override {
    if (std::isinf(x)) return neg_inf;
    return std::log(theta) - x - (theta + 1.0) * softplus(-x);
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    if (x == neg_inf) return 0.0;
    return std::exp(-theta * softplus(-x));
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "exp_logistic quantile");
    return -std::log(std::expm1(-std::log(u) / theta));
  }
  double sample(double theta, RandomStream& rng) const override {
    return -std::log(std::expm1(-std::log(rng.uniform()) / theta));
  }
};

// Standard logistic shifted by theta.
class LogisticLoc final : public Family {
 public:
  std::string name() const override { return "logistic_loc"; }
  Interval param_domain() const override { return real_line; }
  Support support(double) const override { return {neg_inf, inf}; }
  Support sample_space() const override { return {neg_inf, inf}; }
  double density(double x, double theta) const override {
    const double l = log_density(x, theta);
    return std::isinf(l) ? 0.0 : std::exp(l);
  }
  double log_density(double x, double theta) const override {
    if (std::isinf(x)) return neg_inf;
    const double z = x - theta;
    return -z - 2.0 * softplus(-z);
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    return 1.0 / (1.0 + std::exp(-(x - theta)));
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "logistic_loc quantile");
    return theta + std::log(u / (1.0 - u));
  }
  double sample(double theta, RandomStream& rng) const override {
    const double u = rng.uniform();
    return theta + std::log(u / (1.0 - u));
  }
  ParameterRole role() const override { return ParameterRole::location; }
};

// f(x; theta) = (1/theta) x^{1/theta - 1} exp(-x^{1/theta}), x > 0.
class WeibullTheta final : public Family {
 public:
  std::string name() const override { return "weibull_theta"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double) const override { return {0.0, inf}; }
  Support sample_space() const override { return {0.0, inf}; }
  double density(double x, double theta) const override {
    const double l = log_density(x, theta);
    return std::isinf(l) ? 0.0 : std::exp(l);
  }
  double log_density(double x, double theta) const override {
    if (!(x > 0.0) || std::isinf(x)) return neg_inf;
    const double lx = std::log(x);
    return -std::log(theta) + (1.0 / theta - 1.0) * lx - std::exp(lx / theta);
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override {
    if (x <= 0.0) return 0.0;
    return -std::expm1(-std::pow(x, 1.0 / theta));
  }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "weibull_theta quantile");
    return std::pow(-std::log1p(-u), theta);
  }
  double sample(double theta, RandomStream& rng) const override {
    return std::pow(-std::log(rng.uniform()), theta);
  }
};

// theta * W with W standard Gumbel, CDF exp(-exp(-x / theta)).
class GumbelStd final : public Family {
 public:
  std::string name() const override { return "gumbel_std"; }
  Interval param_domain() const override { return positive_reals; }
  Support support(double) const override { return {neg_inf, inf}; }
  Support sample_space() const override { return {neg_inf, inf}; }
  double density(double x, double theta) const override {
    const double l = log_density(x, theta);
    return std::isinf(l) ? 0.0 : std::exp(l);
  }
  double log_density(double x, double theta) const override {
    if (std::isinf(x)) return neg_inf;
    const double w = x / theta;
    return -std::log(theta) - w - std::exp(-w);
  }
  bool has_cdf() const override { return true; }
  double cdf(double x, double theta) const override { return std::exp(-std::exp(-x / theta)); }
  bool has_quantile() const override { return true; }
  double quantile(double u, double theta) const override {
    require_unit(u, "gumbel_std quantile");
    return -theta * std::log(-std::log(u));
  }
  double sample(double theta, RandomStream& rng) const override {
    return -theta * std::log(-std::log(rng.uniform()));
  }
  ParameterRole role() const override { return ParameterRole::scale; }
};

// ---------------------------------------------------------------------------

double take_param(const FixedParams& given, const std::string& key, double fallback) {
  auto it = given.find(key);
  return it == given.end() ? fallback : it->second;
}

void reject_unknown(const std::string& family, const FixedParams& given,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : given) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw DomainError("family '" + family + "' does not take fixed parameter '" + key + "'");
    }
  }
}

void require_positive_param(const std::string& key, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "fixed parameter '" << key << "' must be positive and finite, got " << v;
    throw DomainError(msg.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

bool Interval::contains(double x) const {
  if (std::isnan(x)) return false;
  const bool above = lower_closed ? x >= lower : x > lower;
  const bool below = upper_closed ? x <= upper : x < upper;
  return above && below;
}

bool Interval::bounded_below() const { return std::isfinite(lower); }
bool Interval::bounded_above() const { return std::isfinite(upper); }

std::string_view to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::increasing: return "increasing";
    case Monotonicity::decreasing: return "decreasing";
    case Monotonicity::none: return "none";
  }
  return "none";
}

double Family::log_density(double x, double theta) const {
  const double d = density(x, theta);
  return d > 0.0 ? std::log(d) : neg_inf;
}

double Family::cdf(double, double) const {
  throw DomainError("family '" + name() + "' has no closed-form CDF");
}

double Family::quantile(double, double) const {
  throw DomainError("family '" + name() + "' has no closed-form quantile");
}

void Family::check_theta(double theta) const {
  if (!param_domain().contains(theta)) {
    std::ostringstream msg;
    msg << "parameter " << theta << " outside the domain of family '" << name() << "'";
    throw DomainError(msg.str());
  }
}

double ExpFamily::density(double x, double theta) const {
  return h(x) * c(theta) * std::exp(eta(theta) * big_t(x));
}

double ExpFamily::d_eta(double theta) const {
  return eta_prime ? eta_prime(theta) : central_first(eta, theta);
}

double ExpFamily::d2_eta(double theta) const {
  return eta_second ? eta_second(theta) : central_second(eta, theta);
}

double ExpFamily::d_log_c(double theta) const {
  if (log_c_prime) return log_c_prime(theta);
  return central_first([this](double t) { return std::log(c(t)); }, theta);
}

double ExpFamily::d2_log_c(double theta) const {
  if (log_c_second) return log_c_second(theta);
  return central_second([this](double t) { return std::log(c(t)); }, theta);
}

double exp_family_mean_T(const ExpFamily& ef, double theta) {
  ef.base->check_theta(theta);
  const double ep = ef.d_eta(theta);
  if (ep == 0.0) throw DomainError("exp_family_mean_T: eta'(theta) = 0, degenerate parametrization");
  return -ef.d_log_c(theta) / ep;
}

double exp_family_var_T(const ExpFamily& ef, double theta) {
  ef.base->check_theta(theta);
  const double ep = ef.d_eta(theta);
  if (ep == 0.0) throw DomainError("exp_family_var_T: eta'(theta) = 0, degenerate parametrization");
  const double v = (-ef.d2_log_c(theta) * ep + ef.d_log_c(theta) * ef.d2_eta(theta)) / (ep * ep * ep);
  if (!(v > 0.0)) {
    std::ostringstream msg;
    msg << "exp_family_var_T: non-positive variance " << v << " at theta = " << theta
        << "; the exponential-family decomposition is inconsistent";
    throw NumericError(msg.str());
  }
  return v;
}

namespace {
Monotonicity detect_direction(const RealFn& fn, const std::vector<double>& grid) {
  bool inc = true;
  bool dec = true;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = fn(grid[i]) - fn(grid[i - 1]);
    if (d <= 0.0) inc = false;
    if (d >= 0.0) dec = false;
  }
  if (inc) return Monotonicity::increasing;
  if (dec) return Monotonicity::decreasing;
  return Monotonicity::none;
}
}  // namespace

bool verify_exp_family_monotonicity(const ExpFamily& ef, const std::vector<double>& x_grid,
                                    const std::vector<double>& theta_grid) {
  return detect_direction(ef.eta, theta_grid) == ef.eta_direction &&
         detect_direction(ef.big_t, x_grid) == ef.t_direction;
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace detail {

double sample_gamma(double alpha, RandomStream& rng) {
  if (alpha < 1.0) {
    const double boosted = sample_gamma(alpha + 1.0, rng);
    return boosted * std::pow(rng.uniform(), 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z = 0.0;
    double v = 0.0;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return d * v;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {
      "uniform_sym",   "levy_type",    "gamma_scale",   "gamma_shape", "exp_logistic",
      "uniform_scale", "logistic_loc", "weibull_theta", "gumbel_std"};
  return names;
}

Builtin make_builtin(const std::string& name, const FixedParams& fixed_params) {
  if (name == "uniform_sym") {
    reject_unknown(name, fixed_params, {});
    return {std::make_shared<UniformSym>(), std::nullopt};
  }
  if (name == "uniform_scale") {
    reject_unknown(name, fixed_params, {});
    return {std::make_shared<UniformScale>(), std::nullopt};
  }
  if (name == "logistic_loc") {
    reject_unknown(name, fixed_params, {});
    return {std::make_shared<LogisticLoc>(), std::nullopt};
  }
  if (name == "weibull_theta") {
    reject_unknown(name, fixed_params, {});
    return {std::make_shared<WeibullTheta>(), std::nullopt};
  }
  if (name == "gumbel_std") {
    reject_unknown(name, fixed_params, {});
    return {std::make_shared<GumbelStd>(), std::nullopt};
  }
  if (name == "levy_type") {
    reject_unknown(name, fixed_params, {});
    auto fam = std::make_shared<LevyType>();
    ExpFamily ef;
    ef.base = fam;
    ef.h = [](double x) { return 1.0 / std::sqrt(std::numbers::pi * x * x * x); };
    ef.c = [](double t) { return std::sqrt(t); };
    ef.eta = [](double t) { return -t; };
    ef.big_t = [](double x) { return 1.0 / x; };
    ef.eta_prime = [](double) { return -1.0; };
    ef.eta_second = [](double) { return 0.0; };
    ef.log_c_prime = [](double t) { return 0.5 / t; };
    ef.log_c_second = [](double t) { return -0.5 / (t * t); };
    ef.eta_direction = Monotonicity::decreasing;
    ef.t_direction = Monotonicity::decreasing;
    return {fam, ef};
  }
  if (name == "gamma_scale") {
    reject_unknown(name, fixed_params, {"alpha"});
    const double alpha = take_param(fixed_params, "alpha", 1.0);
    require_positive_param("alpha", alpha);
    auto fam = std::make_shared<GammaScale>(alpha);
    const double log_gamma_alpha = specfun::log_gamma(alpha);
    ExpFamily ef;
    ef.base = fam;
    ef.h = [alpha, log_gamma_alpha](double x) {
      return std::exp((alpha - 1.0) * std::log(x) - log_gamma_alpha);
    };
    ef.c = [alpha](double t) { return std::pow(t, -alpha); };
    ef.eta = [](double t) { return -1.0 / t; };
    ef.big_t = [](double x) { return x; };
    ef.eta_prime = [](double t) { return 1.0 / (t * t); };
    ef.eta_second = [](double t) { return -2.0 / (t * t * t); };
    ef.log_c_prime = [alpha](double t) { return -alpha / t; };
    ef.log_c_second = [alpha](double t) { return alpha / (t * t); };
    ef.eta_direction = Monotonicity::increasing;
    ef.t_direction = Monotonicity::increasing;
    return {fam, ef};
  }
  if (name == "gamma_shape") {
    reject_unknown(name, fixed_params, {"lambda"});
    const double lambda = take_param(fixed_params, "lambda", 1.0);
    require_positive_param("lambda", lambda);
    auto fam = std::make_shared<GammaShape>(lambda);
    const double log_lambda = std::log(lambda);
    ExpFamily ef;
    ef.base = fam;
    ef.h = [lambda](double x) { return std::exp(-x / lambda) / x; };
    ef.c = [log_lambda](double t) { return std::exp(-specfun::log_gamma(t) - t * log_lambda); };
    ef.eta = [](double t) { return t; };
    ef.big_t = [](double x) { return std::log(x); };
    ef.eta_prime = [](double) { return 1.0; };
    ef.eta_second = [](double) { return 0.0; };
    ef.log_c_prime = [log_lambda](double t) { return -specfun::digamma(t) - log_lambda; };
    ef.log_c_second = [](double t) { return -specfun::trigamma(t); };
    ef.eta_direction = Monotonicity::increasing;
    ef.t_direction = Monotonicity::increasing;
    return {fam, ef};
  }
  if (name == "exp_logistic") {
    reject_unknown(name, fixed_params, {});
    auto fam = std::make_shared<ExpLogistic>();
    ExpFamily ef;
    ef.base = fam;
    ef.h = [](double x) { return std::exp(-x - softplus(-x)); };
    ef.c = [](double t) { return t; };
    ef.eta = [](double t) { return -t; };
    ef.big_t = [](double x) { return softplus(-x); };
    ef.eta_prime = [](double) { return -1.0; };
    ef.eta_second = [](double) { return 0.0; };
    ef.log_c_prime = [](double t) { return 1.0 / t; };
    ef.log_c_second = [](double t) { return -1.0 / (t * t); };
    ef.eta_direction = Monotonicity::decreasing;
    ef.t_direction = Monotonicity::decreasing;
    return {fam, ef};
  }
  throw CatalogError("unknown family '" + name + "'");
}

}  // namespace mmorder
