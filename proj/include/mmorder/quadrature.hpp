#pragma once

#include <functional>

namespace mmorder::quadrature {

using Integrand = std::function<double(double)>;

struct Options {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;   ///< estimated absolute error
  int evaluations = 0;
};

/// Integrate f over [a, b]; either endpoint may be infinite.
///
/// Globally adaptive Gauss–Kronrod 7/15: the subinterval with the largest
/// error estimate is bisected until the total estimate drops below
/// max(abs_tol, rel_tol * |value|). Half-infinite ranges use
/// x = a + t/(1-t), the whole line uses x = t/(1-t^2). Nodes never touch
/// the endpoints, so integrable endpoint singularities are fine.
///
/// Throws IntegrationError (carrying the achieved estimate) when the
/// interval budget runs out, or when f produces a non-finite value.
Result integrate(const Integrand& f, double a, double b, const Options& opts = {});

}  // namespace mmorder::quadrature
