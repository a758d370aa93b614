#pragma once

#include <numbers>

namespace mmorder::specfun {

/// Euler–Mascheroni constant.
inline constexpr double euler_gamma = std::numbers::egamma;

/// log Gamma(x) for x > 0. Throws DomainError otherwise.
double log_gamma(double x);

/// Psi(x) = d/dx log Gamma(x) for x > 0.
///
/// The argument is shifted up to x >= 6 with Psi(x) = Psi(x + 1) - 1/x and
/// the asymptotic Bernoulli series is summed from there.
double digamma(double x);

/// Psi'(x) for x > 0. Same shift-then-asymptotic scheme as digamma.
double trigamma(double x);

/// The unique x > 0 with digamma(x) == y.
///
/// Safeguarded Newton: the iterate is kept inside a bracket [lo, hi] with
/// digamma(lo) <= y <= digamma(hi) and bisected whenever a Newton step
/// leaves it.
double inverse_digamma(double y);

/// Exponential integral Ei(x) on the negative axis, Ei(x) = -E1(-x).
/// Throws DomainError for x >= 0.
double expint_ei(double x);

/// E|W| for a standard Gumbel W (CDF exp(-exp(-x))): gamma - 2 Ei(-1).
double gumbel_abs_mean();

/// Var|W| for a standard Gumbel W: pi^2/6 + 4 (gamma - Ei(-1)) Ei(-1).
double gumbel_abs_variance();

}  // namespace mmorder::specfun
