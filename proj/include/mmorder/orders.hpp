#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmorder/families.hpp"

namespace mmorder {

enum class GridSource { explicit_points, linear, log_spaced, quantile_spaced };

/// Strictly increasing evaluation points, at least two of them.
class Grid {
 public:
  explicit Grid(std::vector<double> points, GridSource source = GridSource::explicit_points);

  static Grid linear(double lower, double upper, std::size_t n);
  static Grid log_spaced(double lower, double upper, std::size_t n);
  /// Quantiles of f(.; theta) at evenly spaced probabilities in [clip, 1 - clip].
  static Grid quantile_spaced(const Family& family, double theta, std::size_t n,
                              double clip = 1e-4);
  /// Merged quantile grids over several parameter values, n points in total.
  static Grid quantile_spaced(const Family& family, std::span<const double> thetas,
                              std::size_t n, double clip = 1e-4);

  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  GridSource source() const { return source_; }

 private:
  std::vector<double> points_;
  GridSource source_;
};

enum class Verdict { holds, fails, inconclusive };
std::string_view to_string(Verdict v);

/// A grid location where a defining inequality is violated. For two-argument
/// checks `y` holds the second coordinate; otherwise it is NaN.
struct Witness {
  double x;
  double y;
  double violation;
};

struct OrderReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<Witness> witnesses;  ///< first max_witnesses violations, grid order
  std::size_t violations = 0;      ///< total count, may exceed witnesses.size()
  std::size_t marginal = 0;        ///< cells with a violation inside the tolerance band
  std::size_t checked = 0;         ///< cells examined
  std::size_t skipped = 0;         ///< cells skipped (outside common support)
  double max_violation = 0.0;
  double tolerance = 0.0;          ///< relative tolerance used
};

inline constexpr double default_order_tolerance = 1e-9;
inline constexpr std::size_t max_witnesses = 100;

using ScalarFn = std::function<double(double)>;
using KernelFn = std::function<double(double, double)>;

/// X <=_st Y with CDFs F (for X) and G: F(x) >= G(x) on the grid.
OrderReport check_st(const ScalarFn& cdf_f, const ScalarFn& cdf_g, const Grid& grid,
                     double tol = default_order_tolerance);

/// X <=_lr Y: g/f nondecreasing, evaluated as log g - log f with the
/// conventions a/0 = +inf and 0/a = 0. Points where both densities vanish
/// are skipped.
OrderReport check_lr(const ScalarFn& density_f, const ScalarFn& density_g, const Grid& grid,
                     double tol = default_order_tolerance);
/// check_lr on log densities (-inf marks zero density).
OrderReport check_lr_log(const ScalarFn& log_f, const ScalarFn& log_g, const Grid& grid,
                         double tol = default_order_tolerance);

/// X <=_disp Y: G^{-1}(a) - F^{-1}(a) nondecreasing on a grid inside (0, 1).
OrderReport check_disp(const ScalarFn& quantile_f, const ScalarFn& quantile_g,
                       const Grid& alpha_grid, double tol = default_order_tolerance);

/// TP2 of f(x; theta) from adjacent grid cells. Fixed-support families use
/// the mixed difference of log f; moving-support families use the 2x2
/// minor of raw densities so that exact zeros are handled.
OrderReport check_tp2_mixed(const Family& family, const Grid& x_grid, const Grid& theta_grid,
                            double tol = default_order_tolerance);

/// All m x m minors (m <= r) of kernel(x_i, y_j). Exhaustive when both grids
/// have at most 12 points, otherwise 10,000 random ordered subsets per order.
OrderReport check_tpr_minors(const KernelFn& kernel, const Grid& x_grid, const Grid& y_grid,
                             int r, double tol = default_order_tolerance);

/// f >= 0 with log f concave on the grid (zero allowed only at the edges).
OrderReport check_logconcave(const ScalarFn& f, const Grid& grid,
                             double tol = default_order_tolerance);
/// Same check given log f directly (-inf for zero).
OrderReport check_logconcave_log(const ScalarFn& log_f, const Grid& grid,
                                 double tol = default_order_tolerance);

/// Sign alternations after deleting zeros.
int sign_changes(std::span<const double> values);

}  // namespace mmorder
