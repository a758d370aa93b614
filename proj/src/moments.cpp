#include "mmorder/moments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mmorder/error.hpp"
#include "mmorder/quadrature.hpp"
#include "mmorder/specfun.hpp"

namespace mmorder {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

const Interval whole_line{neg_inf, inf};
const Interval positive_half{0.0, inf};
const Interval negative_half{neg_inf, 0.0};

bool attainable(const Interval& range, double t) { return range.contains(t); }

std::string describe(const Interval& r) {
  std::ostringstream s;
  s << (r.lower_closed ? "[" : "(") << r.lower << ", " << r.upper << (r.upper_closed ? "]" : ")");
  return s.str();
}

}  // namespace

std::vector<double> parameter_probe_grid(const Interval& domain, std::size_t points) {
  std::vector<double> grid(points);
  const bool lo = domain.bounded_below();
  const bool hi = domain.bounded_above();
  for (std::size_t i = 0; i < points; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
    if (lo && hi) {
      const double w = (static_cast<double>(i) + 1.0) / (static_cast<double>(points) + 1.0);
      grid[i] = domain.lower + w * (domain.upper - domain.lower);
    } else if (lo) {
      grid[i] = domain.lower + std::pow(10.0, -2.0 + 4.0 * frac);
    } else if (hi) {
      grid[i] = domain.upper - std::pow(10.0, 2.0 - 4.0 * frac);
    } else {
      grid[i] = -10.0 + 20.0 * frac;
    }
  }
  return grid;
}

MomentSpec::MomentSpec(FamilyPtr family, std::string g_name, RealFn g, MomentClosedForm closed)
    : family_(std::move(family)),
      g_name_(std::move(g_name)),
      g_(std::move(g)),
      closed_(std::move(closed)) {
  const auto grid = parameter_probe_grid(family_->param_domain());
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = evaluate(grid[i]);
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "moment function E g(X) with g = " << g_name_ << " is not finite at theta = "
          << grid[i] << " for family '" << family_->name() << "'";
      throw DomainError(msg.str());
    }
  }
  bool nondecreasing = true;
  bool nonincreasing = true;
  bool constant = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    const double tol = 1e-9 * (1.0 + std::abs(values[i]));
    if (d < -tol) nondecreasing = false;
    if (d > tol) nonincreasing = false;
    if (std::abs(d) > tol) constant = false;
  }
  if (constant) {
    throw DomainError("moment function with g = " + g_name_ + " is constant in theta for family '" +
                      family_->name() + "'; it carries no information about the parameter");
  }
  if (!nondecreasing && !nonincreasing) {
    throw DomainError("moment function with g = " + g_name_ + " is not monotone for family '" +
                      family_->name() + "'");
  }
  const Monotonicity detected = nondecreasing ? Monotonicity::increasing : Monotonicity::decreasing;
  if (closed_.direction && *closed_.direction != detected) {
    throw NumericError("declared direction of m for g = " + g_name_ +
                       " disagrees with the grid check for family '" + family_->name() + "'");
  }
  direction_ = detected;

  if (closed_.range) {
    range_ = *closed_.range;
    range_exact_ = true;
  } else {
    const double a = values.front();
    const double b = values.back();
    range_ = Interval{std::min(a, b), std::max(a, b), true, true};
    range_exact_ = false;
  }
}

double MomentSpec::integrate_moment(double theta) const {
  const Support s = family_->support(theta);
  const Family& fam = *family_;
  quadrature::Integrand integrand = [&](double x) {
    const double ld = fam.log_density(x, theta);
    if (std::isinf(ld)) return 0.0;
    return g_(x) * std::exp(ld);
  };
  return quadrature::integrate(integrand, s.lower, s.upper).value;
}

double MomentSpec::evaluate(double theta) const {
  family_->check_theta(theta);
  return closed_.m ? closed_.m(theta) : integrate_moment(theta);
}

double moment_function(const MomentSpec& spec, double theta) { return spec.evaluate(theta); }

Estimate invert_moment_detailed(const MomentSpec& spec, double t) {
  if (!std::isfinite(t)) {
    throw OutOfRange("invert_moment: target is not finite", spec.m_range().lower,
                     spec.m_range().upper);
  }
  if (spec.range_is_exact() && !attainable(spec.m_range(), t)) {
    std::ostringstream msg;
    msg << "invert_moment: target " << t << " outside attainable range "
        << describe(spec.m_range());
    throw OutOfRange(msg.str(), spec.m_range().lower, spec.m_range().upper);
  }
  const Family& fam = spec.family();
  const Interval domain = fam.param_domain();

  if (spec.has_closed_inverse()) {
    const double theta = spec.closed_inverse(t);
    if (!domain.contains(theta)) {
      std::ostringstream msg;
      msg << "invert_moment: target " << t << " maps outside the parameter domain";
      throw OutOfRange(msg.str(), spec.m_range().lower, spec.m_range().upper);
    }
    return {theta, t, 0, std::abs(spec.evaluate(theta) - t)};
  }

  // phi(theta) >= 0 on the solution side; we seek inf{theta : phi(theta) >= 0}.
  const double sign = spec.direction() == Monotonicity::increasing ? 1.0 : -1.0;
  int evals = 0;
  auto phi = [&](double theta) {
    ++evals;
    return sign * (spec.evaluate(theta) - t);
  };

  const bool lo_bounded = domain.bounded_below();
  const bool hi_bounded = domain.bounded_above();
  const bool positive_scale = lo_bounded && !hi_bounded;
  double seed = 0.0;
  if (lo_bounded && hi_bounded) {
    seed = 0.5 * (domain.lower + domain.upper);
  } else if (lo_bounded) {
    seed = domain.lower + 1.0;
  } else if (hi_bounded) {
    seed = domain.upper - 1.0;
  }

  auto unreachable = [&](double explored_lo, double explored_hi) {
    const double a = spec.evaluate(explored_lo);
    const double b = spec.evaluate(explored_hi);
    std::ostringstream msg;
    msg << "invert_moment: target " << t << " not attained; explored m values span ["
        << std::min(a, b) << ", " << std::max(a, b) << "]";
    return OutOfRange(msg.str(), std::min(a, b), std::max(a, b));
  };

  double lo = seed;
  double hi = seed;
  constexpr int max_expansions = 2000;
  if (phi(seed) >= 0.0) {
    // Walk down until phi < 0.
    double step = 1.0;
    for (int k = 0;; ++k) {
      double next = 0.0;
      if (positive_scale) {
        next = domain.lower + 0.5 * (lo - domain.lower);
      } else if (lo_bounded) {
        next = domain.lower + 0.5 * (lo - domain.lower);
      } else {
        next = lo - step;
        step *= 2.0;
      }
      if (k >= max_expansions || !domain.contains(next) || next == lo) {
        throw unreachable(lo, seed);
      }
      hi = lo;
      lo = next;
      if (phi(lo) < 0.0) break;
    }
  } else {
    double step = 1.0;
    for (int k = 0;; ++k) {
      double next = 0.0;
      if (positive_scale) {
        next = domain.lower + 2.0 * (hi - domain.lower);
      } else if (hi_bounded) {
        next = domain.upper - 0.5 * (domain.upper - hi);
      } else {
        next = hi + step;
        step *= 2.0;
      }
      if (k >= max_expansions || !domain.contains(next) || next == hi || !std::isfinite(next)) {
        throw unreachable(seed, hi);
      }
      lo = hi;
      hi = next;
      if (phi(hi) >= 0.0) break;
    }
  }

  // Invariant: phi(lo) < 0 <= phi(hi).
  int iterations = 0;
  while (hi - lo > 1e-12 * (1.0 + std::abs(hi))) {
    const double mid = positive_scale && hi > 4.0 * lo && lo > domain.lower
                           ? domain.lower + std::sqrt((lo - domain.lower) * (hi - domain.lower))
                           : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    ++iterations;
    if (phi(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  double theta = hi;
  double residual = std::abs(spec.evaluate(theta) - t);
  if (spec.has_derivative()) {
    const double slope = spec.derivative(theta);
    if (slope != 0.0 && std::isfinite(slope)) {
      const double polished = theta - (spec.evaluate(theta) - t) / slope;
      if (polished >= lo && polished <= hi && domain.contains(polished)) {
        const double r = std::abs(spec.evaluate(polished) - t);
        if (r < residual) {
          theta = polished;
          residual = r;
        }
      }
      ++iterations;
    }
  }
  if (residual > 1e-6 * (1.0 + std::abs(t))) {
    std::ostringstream msg;
    msg << "invert_moment: bisection ended with residual " << residual << " at theta = " << theta
        << "; m appears discontinuous near the target";
    throw NumericError(msg.str());
  }
  (void)evals;
  return {theta, t, iterations, residual};
}

double invert_moment(const MomentSpec& spec, double t) {
  return invert_moment_detailed(spec, t).theta_hat;
}

Estimate estimate(const MomentSpec& spec, std::span<const double> sample) {
  if (sample.empty()) throw InvalidInput("estimate: sample is empty");
  const Support space = spec.family().sample_space();
  double sum = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = sample[i];
    if (std::isnan(x)) throw InvalidInput("estimate: sample contains NaN");
    if (!space.contains(x)) {
      std::ostringstream msg;
      msg << "estimate: sample value " << x << " (index " << i << ") lies outside the support of '"
          << spec.family().name() << "'";
      throw DomainError(msg.str());
    }
    sum += spec.g(x);
  }
  const double gbar = sum / static_cast<double>(sample.size());
  try {
    Estimate e = invert_moment_detailed(spec, gbar);
    e.gbar = gbar;
    return e;
  } catch (const OutOfRange& err) {
    throw EstimationInfeasible(std::string("estimate: empirical moment infeasible: ") + err.what(),
                               err.lower(), err.upper());
  }
}

double mle_residual(const ExpFamily& ef, std::span<const double> sample, double theta) {
  if (sample.empty()) throw InvalidInput("mle_residual: sample is empty");
  ef.base->check_theta(theta);
  double sum = 0.0;
  for (double x : sample) sum += ef.big_t(x);
  return sum / static_cast<double>(sample.size()) + ef.d_log_c(theta) / ef.d_eta(theta);
}

double second_order_check(const ExpFamily& ef, std::span<const double> sample, double theta_hat) {
  if (sample.empty()) throw InvalidInput("second_order_check: sample is empty");
  ef.base->check_theta(theta_hat);
  double sum = 0.0;
  for (double x : sample) sum += ef.big_t(x);
  return static_cast<double>(sample.size()) * ef.d2_log_c(theta_hat) + ef.d2_eta(theta_hat) * sum;
}

double exp_family_log_likelihood(const ExpFamily& ef, std::span<const double> sample,
                                 double theta) {
  double ll = 0.0;
  const double log_c = std::log(ef.c(theta));
  const double eta = ef.eta(theta);
  for (double x : sample) ll += std::log(ef.h(x)) + log_c + eta * ef.big_t(x);
  return ll;
}

// ---------------------------------------------------------------------------

namespace {

MomentSpec spec_for_t(const Builtin& b) {
  if (!b.exp) {
    throw DomainError("selector 'T' needs an exponential family; '" + b.family->name() +
                      "' is not one");
  }
  const ExpFamily ef = *b.exp;
  const std::string name = b.family->name();
  MomentClosedForm cf;
  cf.m = [ef](double theta) { return exp_family_mean_T(ef, theta); };
  if (name == "levy_type") {
    cf.inverse = [](double t) { return 0.5 / t; };
    cf.derivative = [](double theta) { return -0.5 / (theta * theta); };
    cf.range = positive_half;
  } else if (name == "exp_logistic") {
    cf.inverse = [](double t) { return 1.0 / t; };
    cf.derivative = [](double theta) { return -1.0 / (theta * theta); };
    cf.range = positive_half;
  } else if (name == "gamma_scale") {
    const double alpha = b.family->fixed_params().at("alpha");
    cf.inverse = [alpha](double t) { return t / alpha; };
    cf.derivative = [alpha](double) { return alpha; };
    cf.range = positive_half;
  } else if (name == "gamma_shape") {
    const double log_lambda = std::log(b.family->fixed_params().at("lambda"));
    cf.inverse = [log_lambda](double t) { return specfun::inverse_digamma(t - log_lambda); };
    cf.derivative = [](double theta) { return specfun::trigamma(theta); };
    cf.range = whole_line;
  }
  return MomentSpec(b.family, "T", ef.big_t, std::move(cf));
}

MomentSpec spec_for_power(const Builtin& b, double k, const std::string& label) {
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidInput("k-th moment needs k > 0");
  const bool integral = std::floor(k) == k;
  const Support space = b.family->sample_space();
  if (!integral && space.lower < 0.0) {
    throw DomainError("non-integer moment order needs a nonnegative support");
  }
  RealFn g = [k, integral](double x) {
    return integral ? std::pow(x, static_cast<int>(k)) : std::pow(x, k);
  };
  const std::string name = b.family->name();
  MomentClosedForm cf;
  if (name == "uniform_scale") {
    cf.m = [k](double theta) { return std::pow(theta, k) / (k + 1.0); };
    cf.inverse = [k](double t) { return std::pow((k + 1.0) * t, 1.0 / k); };
    cf.derivative = [k](double theta) { return k * std::pow(theta, k - 1.0) / (k + 1.0); };
    cf.range = positive_half;
  } else if (name == "uniform_sym" && integral && static_cast<long>(k) % 2 == 0) {
    cf.m = [k](double theta) { return std::pow(theta, k) / (k + 1.0); };
    cf.inverse = [k](double t) { return std::pow((k + 1.0) * t, 1.0 / k); };
    cf.derivative = [k](double theta) { return k * std::pow(theta, k - 1.0) / (k + 1.0); };
    cf.range = positive_half;
  } else if (name == "gamma_scale") {
    const double alpha = b.family->fixed_params().at("alpha");
    const double mu_k = std::exp(specfun::log_gamma(alpha + k) - specfun::log_gamma(alpha));
    cf.m = [k, mu_k](double theta) { return mu_k * std::pow(theta, k); };
    cf.inverse = [k, mu_k](double t) { return std::pow(t / mu_k, 1.0 / k); };
    cf.derivative = [k, mu_k](double theta) { return k * mu_k * std::pow(theta, k - 1.0); };
    cf.range = positive_half;
  } else if (name == "gamma_shape" && k == 1.0) {
    const double lambda = b.family->fixed_params().at("lambda");
    cf.m = [lambda](double theta) { return lambda * theta; };
    cf.inverse = [lambda](double t) { return t / lambda; };
    cf.derivative = [lambda](double) { return lambda; };
    cf.range = positive_half;
  } else if (name == "logistic_loc" && k == 1.0) {
    cf.m = [](double theta) { return theta; };
    cf.inverse = [](double t) { return t; };
    cf.derivative = [](double) { return 1.0; };
    cf.range = whole_line;
  } else if (name == "gumbel_std" && k == 1.0) {
    cf.m = [](double theta) { return specfun::euler_gamma * theta; };
    cf.inverse = [](double t) { return t / specfun::euler_gamma; };
    cf.derivative = [](double) { return specfun::euler_gamma; };
    cf.range = positive_half;
  } else if (name == "levy_type") {
    throw DomainError("levy_type has no finite positive moments");
  } else if (name == "weibull_theta") {
    cf.m = [k](double theta) { return std::exp(specfun::log_gamma(1.0 + k * theta)); };
  }
  return MomentSpec(b.family, label, std::move(g), std::move(cf));
}

MomentSpec spec_for_log(const Builtin& b) {
  if (b.family->sample_space().lower < 0.0) {
    throw DomainError("selector 'log' needs a positive support; '" + b.family->name() +
                      "' is not positive");
  }
  RealFn g = [](double x) { return std::log(x); };
  const std::string name = b.family->name();
  MomentClosedForm cf;
  if (name == "uniform_scale") {
    cf.m = [](double theta) { return std::log(theta) - 1.0; };
    cf.inverse = [](double t) { return std::exp(t + 1.0); };
    cf.derivative = [](double theta) { return 1.0 / theta; };
    cf.range = whole_line;
  } else if (name == "gamma_shape") {
    const double log_lambda = std::log(b.family->fixed_params().at("lambda"));
    cf.m = [log_lambda](double theta) { return specfun::digamma(theta) + log_lambda; };
    cf.inverse = [log_lambda](double t) { return specfun::inverse_digamma(t - log_lambda); };
    cf.derivative = [](double theta) { return specfun::trigamma(theta); };
    cf.range = whole_line;
  } else if (name == "gamma_scale") {
    const double psi_alpha = specfun::digamma(b.family->fixed_params().at("alpha"));
    cf.m = [psi_alpha](double theta) { return psi_alpha + std::log(theta); };
    cf.inverse = [psi_alpha](double t) { return std::exp(t - psi_alpha); };
    cf.derivative = [](double theta) { return 1.0 / theta; };
    cf.range = whole_line;
  } else if (name == "weibull_theta") {
    constexpr double g0 = specfun::euler_gamma;
    cf.m = [](double theta) { return -g0 * theta; };
    cf.inverse = [](double t) { return -t / g0; };
    cf.derivative = [](double) { return -g0; };
    cf.range = negative_half;
  }
  return MomentSpec(b.family, "log", std::move(g), std::move(cf));
}

MomentSpec spec_for_abs_log(const Builtin& b) {
  if (b.family->sample_space().lower < 0.0) {
    throw DomainError("selector 'abs-log' needs a positive support; '" + b.family->name() +
                      "' is not positive");
  }
  RealFn g = [](double x) { return std::abs(std::log(x)); };
  MomentClosedForm cf;
  if (b.family->name() == "weibull_theta") {
    const double mu = specfun::gumbel_abs_mean();
    cf.m = [mu](double theta) { return mu * theta; };
    cf.inverse = [mu](double t) { return t / mu; };
    cf.derivative = [mu](double) { return mu; };
    cf.range = positive_half;
  }
  return MomentSpec(b.family, "abs-log", std::move(g), std::move(cf));
}

}  // namespace

MomentSpec make_builtin_spec(const Builtin& builtin, std::string_view selector) {
  if (selector == "mean") return spec_for_power(builtin, 1.0, "mean");
  if (selector == "T") return spec_for_t(builtin);
  if (selector == "log") return spec_for_log(builtin);
  if (selector == "abs-log") return spec_for_abs_log(builtin);
  constexpr std::string_view kth = "k-th:";
  if (selector.substr(0, kth.size()) == kth) {
    const std::string digits(selector.substr(kth.size()));
    std::size_t used = 0;
    double k = 0.0;
    try {
      k = std::stod(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != digits.size()) {
      throw InvalidInput("malformed moment selector '" + std::string(selector) + "'");
    }
    return spec_for_power(builtin, k, std::string(selector));
  }
  throw InvalidInput("unknown moment selector '" + std::string(selector) +
                     "' (expected mean, log, T, k-th:<k> or abs-log)");
}

}  // namespace mmorder
