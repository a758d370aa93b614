#include "mmorder/specfun.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mmorder/error.hpp"

namespace mmorder::specfun {

namespace {

constexpr double shift_threshold = 6.0;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Asymptotic expansion of Psi for x >= 6.
double digamma_asymptotic(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_{2k} / (2k x^{2k}), Horner in 1/x^2.
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return std::log(x) - 0.5 * inv - series;
}

double trigamma_asymptotic(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * inv2 *
      (1.0 / 6.0 -
       inv2 * (1.0 / 30.0 -
               inv2 * (1.0 / 42.0 -
                       inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0))))));
  return inv + 0.5 * inv2 + series;
}

// E1(z) for 0 < z <= 1 from the convergent power series.
double e1_series(double z) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -z / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return -euler_gamma - std::log(z) - sum;
}

// E1(z) for z >= 1, modified Lentz evaluation of the continued fraction.
double e1_continued_fraction(double z) {
  constexpr double tiny = 1e-300;
  double b = z + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) return h * std::exp(-z);
  }
  throw NumericError("expint_ei: continued fraction did not converge");
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  while (x < shift_threshold) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  return acc + digamma_asymptotic(x);
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double acc = 0.0;
  while (x < shift_threshold) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  return acc + trigamma_asymptotic(x);
}

double inverse_digamma(double y) {
  if (!std::isfinite(y)) throw DomainError("inverse_digamma: argument must be finite");

  double x = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y + euler_gamma);

  // Bracket the root. Psi is increasing, so expand geometrically.
  double lo = x;
  double hi = x;
  while (digamma(lo) > y) lo *= 0.5;
  while (digamma(hi) < y) hi *= 2.0;

  for (int iter = 0; iter < 200; ++iter) {
    const double f = digamma(x) - y;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x - f / trigamma(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
    x = next;
  }
  return x;
}

double expint_ei(double x) {
  if (!(x < 0.0) || !std::isfinite(x)) {
    throw DomainError("expint_ei: only the negative axis is supported, got " + std::to_string(x));
  }
  const double z = -x;
  return z < 1.0 ? -e1_series(z) : -e1_continued_fraction(z);
}

double gumbel_abs_mean() { return euler_gamma - 2.0 * expint_ei(-1.0); }

double gumbel_abs_variance() {
  const double ei = expint_ei(-1.0);
  return std::numbers::pi * std::numbers::pi / 6.0 + 4.0 * (euler_gamma - ei) * ei;
}

}  // namespace mmorder::specfun
