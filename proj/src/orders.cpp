#include "mmorder/orders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mmorder/error.hpp"
#include "mmorder/random.hpp"

namespace mmorder {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double roundoff = 256.0 * std::numeric_limits<double>::epsilon();

// Sorts each checked quantity q (required q >= 0) into ok / marginal / violation.
// `mag` is the size of the terms that produced q; the tolerance band is
// tol * mag and anything above -roundoff * mag counts as satisfied.
class Tally {
 public:
  explicit Tally(double tol) { report_.tolerance = tol; }

  void add(double q, double mag, double x, double y = nan) {
    ++report_.checked;
    if (std::isnan(q)) throw InvalidInput("order check produced NaN");
    if (q >= -roundoff * mag) return;
    const double violation = -q;
    if (violation <= report_.tolerance * mag) {
      ++report_.marginal;
      return;
    }
    ++report_.violations;
    report_.max_violation = std::max(report_.max_violation, violation);
    if (report_.witnesses.size() < max_witnesses) report_.witnesses.push_back({x, y, violation});
  }

  void skip() { ++report_.skipped; }

  OrderReport finish() {
    if (report_.violations > 0) {
      report_.verdict = Verdict::fails;
    } else if (report_.checked == 0) {
      report_.verdict = Verdict::inconclusive;
    } else if (report_.marginal > 0 &&
               static_cast<double>(report_.marginal) >= 0.01 * static_cast<double>(report_.checked)) {
      report_.verdict = Verdict::inconclusive;
    } else {
      report_.verdict = Verdict::holds;
    }
    return std::move(report_);
  }

 private:
  OrderReport report_;
};

void require_probability(double p, double x, const char* which) {
  if (std::isnan(p) || p < -1e-9 || p > 1.0 + 1e-9) {
    std::ostringstream msg;
    msg << "check_st: CDF " << which << " returned " << p << " at x = " << x;
    throw InvalidInput(msg.str());
  }
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : -inf; }

OrderReport logconcave_core(const std::vector<double>& logs, const Grid& grid, double tol) {
  Tally tally(tol);
  const std::size_t n = logs.size();
  std::size_t first = n;
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (logs[i] > -inf) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == n) return tally.finish();
  // Zeros strictly inside the positive run break concavity of log f.
  for (std::size_t i = first; i <= last; ++i) {
    if (logs[i] == -inf) tally.add(-inf, 1.0, grid[i]);
  }
  for (std::size_t i = first; i + 2 <= last; ++i) {
    const double l0 = logs[i];
    const double l1 = logs[i + 1];
    const double l2 = logs[i + 2];
    if (l0 == -inf || l1 == -inf || l2 == -inf) continue;
    const double h0 = grid[i + 1] - grid[i];
    const double h1 = grid[i + 2] - grid[i + 1];
    const double s0 = (l1 - l0) / h0;
    const double s1 = (l2 - l1) / h1;
    const double mag = (std::abs(l0) + std::abs(l1)) / h0 + (std::abs(l1) + std::abs(l2)) / h1;
    tally.add(s0 - s1, mag, grid[i + 1]);
  }
  return tally.finish();
}

double determinant(std::vector<double> a, int m) {
  double det = 1.0;
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r) {
      if (std::abs(a[r * m + col]) > std::abs(a[pivot * m + col])) pivot = r;
    }
    if (a[pivot * m + col] == 0.0) return 0.0;
    if (pivot != col) {
      for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[pivot * m + c]);
      det = -det;
    }
    const double p = a[col * m + col];
    det *= p;
    for (int r = col + 1; r < m; ++r) {
      const double factor = a[r * m + col] / p;
      for (int c = col; c < m; ++c) a[r * m + c] -= factor * a[col * m + c];
    }
  }
  return det;
}

// Advance `idx` to the next m-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t m = idx.size();
  for (std::size_t i = m; i-- > 0;) {
    if (idx[i] < n - m + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> random_subset(std::size_t n, std::size_t m, RandomStream& rng) {
  // Floyd's algorithm, then sort to get an ordered subset.
  std::vector<std::size_t> out;
  out.reserve(m);
  for (std::size_t j = n - m; j < n; ++j) {
    const std::size_t t = static_cast<std::size_t>(rng.next_u64() % (j + 1));
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Grid::Grid(std::vector<double> points, GridSource source)
    : points_(std::move(points)), source_(source) {
  if (points_.size() < 2) throw InvalidInput("grid needs at least two points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw InvalidInput("grid points must be finite");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw InvalidInput("grid points must be strictly increasing");
    }
  }
}

Grid Grid::linear(double lower, double upper, std::size_t n) {
  if (n < 2 || !(upper > lower)) throw InvalidInput("linear grid needs n >= 2 and lower < upper");
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  p.back() = upper;
  return Grid(std::move(p), GridSource::linear);
}

Grid Grid::log_spaced(double lower, double upper, std::size_t n) {
  if (!(lower > 0.0)) throw InvalidInput("log-spaced grid needs a positive lower bound");
  if (n < 2 || !(upper > lower)) throw InvalidInput("log-spaced grid needs n >= 2 and lower < upper");
  std::vector<double> p(n);
  const double a = std::log(lower);
  const double b = std::log(upper);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  p.front() = lower;
  p.back() = upper;
  return Grid(std::move(p), GridSource::log_spaced);
}

Grid Grid::quantile_spaced(const Family& family, double theta, std::size_t n, double clip) {
  const double t[] = {theta};
  return quantile_spaced(family, t, n, clip);
}

Grid Grid::quantile_spaced(const Family& family, std::span<const double> thetas, std::size_t n,
                           double clip) {
  if (!family.has_quantile()) {
    throw InvalidInput("family '" + family.name() + "' has no quantile function for grid spacing");
  }
  if (thetas.empty() || n < 2) throw InvalidInput("quantile grid needs parameters and n >= 2");
  if (!(clip > 0.0 && clip < 0.5)) throw InvalidInput("quantile clip must lie in (0, 0.5)");
  const std::size_t per = std::max<std::size_t>(2, n / thetas.size());
  std::vector<double> p;
  p.reserve(per * thetas.size());
  for (double theta : thetas) {
    family.check_theta(theta);
    for (std::size_t i = 0; i < per; ++i) {
      const double u = clip + (1.0 - 2.0 * clip) * static_cast<double>(i) / static_cast<double>(per - 1);
      p.push_back(family.quantile(u, theta));
    }
  }
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return Grid(std::move(p), GridSource::quantile_spaced);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

OrderReport check_st(const ScalarFn& cdf_f, const ScalarFn& cdf_g, const Grid& grid, double tol) {
  Tally tally(tol);
  for (double x : grid.points()) {
    const double f = cdf_f(x);
    const double g = cdf_g(x);
    require_probability(f, x, "F");
    require_probability(g, x, "G");
    tally.add(f - g, std::max(std::abs(f), std::abs(g)), x);
  }
  return tally.finish();
}

OrderReport check_lr(const ScalarFn& density_f, const ScalarFn& density_g, const Grid& grid,
                     double tol) {
  auto check_nonnegative = [](double v, double x) {
    if (std::isnan(v) || v < 0.0) {
      std::ostringstream msg;
      msg << "check_lr: density value " << v << " at x = " << x;
      throw InvalidInput(msg.str());
    }
    return v;
  };
  return check_lr_log([&](double x) { return safe_log(check_nonnegative(density_f(x), x)); },
                      [&](double x) { return safe_log(check_nonnegative(density_g(x), x)); },
                      grid, tol);
}

OrderReport check_lr_log(const ScalarFn& log_f, const ScalarFn& log_g, const Grid& grid,
                         double tol) {
  Tally tally(tol);
  bool have_prev = false;
  double prev_ratio = 0.0;
  double prev_mag = 0.0;
  for (double x : grid.points()) {
    const double lf = log_f(x);
    const double lg = log_g(x);
    if (std::isnan(lf) || std::isnan(lg)) throw InvalidInput("check_lr: NaN log density");
    if (lf == -inf && lg == -inf) {
      tally.skip();
      continue;
    }
    double ratio = 0.0;
    double mag = 0.0;
    if (lf == -inf) {
      ratio = inf;
    } else if (lg == -inf) {
      ratio = -inf;
    } else {
      ratio = lg - lf;
      mag = std::abs(lg) + std::abs(lf);
    }
    if (have_prev) {
      if (std::isinf(prev_ratio) || std::isinf(ratio)) {
        // Extended-real comparison: any decrease involving an infinity is a violation.
        tally.add(ratio >= prev_ratio ? 0.0 : -inf, 1.0, x);
      } else {
        tally.add(ratio - prev_ratio, mag + prev_mag, x);
      }
    }
    have_prev = true;
    prev_ratio = ratio;
    prev_mag = mag;
  }
  return tally.finish();
}

OrderReport check_disp(const ScalarFn& quantile_f, const ScalarFn& quantile_g,
                       const Grid& alpha_grid, double tol) {
  if (!(alpha_grid[0] > 0.0) || !(alpha_grid[alpha_grid.size() - 1] < 1.0)) {
    throw InvalidInput("check_disp: probability grid must lie inside (0, 1)");
  }
  Tally tally(tol);
  double prev_diff = 0.0;
  double prev_mag = 0.0;
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    const double a = alpha_grid[i];
    const double qf = quantile_f(a);
    const double qg = quantile_g(a);
    if (!std::isfinite(qf) || !std::isfinite(qg)) {
      std::ostringstream msg;
      msg << "check_disp: non-finite quantile at alpha = " << a;
      throw InvalidInput(msg.str());
    }
    const double diff = qg - qf;
    const double mag = std::abs(qg) + std::abs(qf);
    if (i > 0) tally.add(diff - prev_diff, mag + prev_mag, a);
    prev_diff = diff;
    prev_mag = mag;
  }
  return tally.finish();
}

OrderReport check_tp2_mixed(const Family& family, const Grid& x_grid, const Grid& theta_grid,
                            double tol) {
  for (double t : theta_grid.points()) family.check_theta(t);
  Tally tally(tol);
  const std::size_t nx = x_grid.size();
  const std::size_t nt = theta_grid.size();

  if (family.moving_support()) {
    std::vector<double> dens(nx * nt);
    for (std::size_t j = 0; j < nt; ++j) {
      for (std::size_t i = 0; i < nx; ++i) dens[j * nx + i] = family.density(x_grid[i], theta_grid[j]);
    }
    for (std::size_t j = 0; j + 1 < nt; ++j) {
      for (std::size_t i = 0; i + 1 < nx; ++i) {
        const double f11 = dens[j * nx + i];
        const double f21 = dens[j * nx + i + 1];
        const double f12 = dens[(j + 1) * nx + i];
        const double f22 = dens[(j + 1) * nx + i + 1];
        if (f11 == 0.0 && f21 == 0.0 && f12 == 0.0 && f22 == 0.0) {
          tally.skip();
          continue;
        }
        const double a = f11 * f22;
        const double b = f12 * f21;
        tally.add(a - b, a + b, x_grid[i], theta_grid[j]);
      }
    }
    return tally.finish();
  }

  std::vector<double> logs(nx * nt);
  std::vector<char> inside(nx * nt);
  for (std::size_t j = 0; j < nt; ++j) {
    const Support s = family.support(theta_grid[j]);
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = x_grid[i];
      const bool in = s.contains(x);
      inside[j * nx + i] = in;
      if (!in) continue;
      const double l = family.log_density(x, theta_grid[j]);
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "check_tp2_mixed: density of '" << family.name() << "' is zero or non-finite at x = "
            << x << ", theta = " << theta_grid[j] << " inside its support";
        throw InvalidInput(msg.str());
      }
      logs[j * nx + i] = l;
    }
  }
  for (std::size_t j = 0; j + 1 < nt; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const std::size_t c11 = j * nx + i;
      const std::size_t c21 = j * nx + i + 1;
      const std::size_t c12 = (j + 1) * nx + i;
      const std::size_t c22 = (j + 1) * nx + i + 1;
      if (!inside[c11] || !inside[c21] || !inside[c12] || !inside[c22]) {
        tally.skip();
        continue;
      }
      const double q = (logs[c22] - logs[c12]) - (logs[c21] - logs[c11]);
      const double mag = std::abs(logs[c22]) + std::abs(logs[c12]) + std::abs(logs[c21]) +
                         std::abs(logs[c11]);
      tally.add(q, mag, x_grid[i], theta_grid[j]);
    }
  }
  return tally.finish();
}

OrderReport check_tpr_minors(const KernelFn& kernel, const Grid& x_grid, const Grid& y_grid, int r,
                             double tol) {
  if (r < 2 || r > 4) throw InvalidInput("check_tpr_minors: order r must be between 2 and 4");
  const std::size_t nx = x_grid.size();
  const std::size_t ny = y_grid.size();
  if (nx < static_cast<std::size_t>(r) || ny < static_cast<std::size_t>(r)) {
    throw InvalidInput("check_tpr_minors: grids need at least r points");
  }
  std::vector<double> k(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double v = kernel(x_grid[i], y_grid[j]);
      if (std::isnan(v)) throw InvalidInput("check_tpr_minors: kernel returned NaN");
      k[i * ny + j] = v;
    }
  }

  Tally tally(tol);
  auto minor = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    const int m = static_cast<int>(rows.size());
    std::vector<double> a(static_cast<std::size_t>(m * m));
    double mag = 1.0;
    for (int i = 0; i < m; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < m; ++j) {
        const double v = k[rows[i] * ny + cols[j]];
        a[static_cast<std::size_t>(i * m + j)] = v;
        row_sum += std::abs(v);
      }
      mag *= row_sum;
    }
    tally.add(determinant(std::move(a), m), mag, x_grid[rows[0]], y_grid[cols[0]]);
  };

  const bool exhaustive = nx <= 12 && ny <= 12;
  RandomStream rng(0x7072u);
  for (int m = 1; m <= r; ++m) {
    const auto mm = static_cast<std::size_t>(m);
    if (exhaustive) {
      std::vector<std::size_t> rows(mm);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      do {
        std::vector<std::size_t> cols(mm);
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        do {
          minor(rows, cols);
        } while (next_combination(cols, ny));
      } while (next_combination(rows, nx));
    } else {
      for (int s = 0; s < 10000; ++s) {
        minor(random_subset(nx, mm, rng), random_subset(ny, mm, rng));
      }
    }
  }
  return tally.finish();
}

OrderReport check_logconcave(const ScalarFn& f, const Grid& grid, double tol) {
  std::vector<double> logs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (std::isnan(v) || v < 0.0) {
      std::ostringstream msg;
      msg << "check_logconcave: function value " << v << " at x = " << grid[i]
          << " is negative or NaN";
      throw InvalidInput(msg.str());
    }
    logs[i] = safe_log(v);
  }
  return logconcave_core(logs, grid, tol);
}

OrderReport check_logconcave_log(const ScalarFn& log_f, const Grid& grid, double tol) {
  std::vector<double> logs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    logs[i] = log_f(grid[i]);
    if (std::isnan(logs[i]) || logs[i] == inf) {
      throw InvalidInput("check_logconcave_log: log value is NaN or +inf");
    }
  }
  return logconcave_core(logs, grid, tol);
}

int sign_changes(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("sign_changes: empty sequence");
  int changes = 0;
  int last = 0;
  for (double v : values) {
    if (std::isnan(v)) throw InvalidInput("sign_changes: NaN value");
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace mmorder
