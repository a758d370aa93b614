#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmorder/families.hpp"
#include "mmorder/moments.hpp"
#include "mmorder/orders.hpp"

namespace mmorder::mc {

inline constexpr std::uint64_t default_seed = 20240915;
inline constexpr double default_confidence = 0.999;
inline constexpr int default_bins = 20;

enum class EstimatorKind {
  moment_spec,          ///< m^{-1}(gbar) for a moment selector
  location_mean,        ///< Xbar - mu_1
  scale_kth_moment,     ///< (m_k / mu_k)^{1/k}
  scale_sample_sd,      ///< sqrt(m_2 - m_1^2) / sigma
  weibull_abslog_sd,    ///< sample sd of |log X| over sigma
  weibull_abslog_mean,  ///< mean of |log X| over mu
};

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view name);

struct EstimatorChoice {
  EstimatorKind kind = EstimatorKind::moment_spec;
  std::string selector = "mean";  ///< moment selector for moment_spec
  int k = 1;                      ///< order for scale_kth_moment
};

struct McConfig {
  Builtin family;
  EstimatorChoice estimator;
  double theta1 = 1.0;
  double theta2 = 2.0;
  std::size_t n = 20;
  std::size_t reps = 20000;
  std::uint64_t seed = default_seed;
  double confidence = default_confidence;
  int bins = default_bins;
  unsigned threads = 1;  ///< 0 = hardware concurrency; results never depend on it

  /// Throws DomainError / InvalidInput on a malformed configuration.
  void validate() const;
};

/// Estimator values from reps independent samples at one parameter value.
/// Infeasible replicates are dropped; `replicate` keeps the original index.
struct EstimatorSamples {
  double theta = 0.0;
  std::vector<std::size_t> replicate;
  std::vector<double> values;
  std::size_t failures = 0;
};

/// Compiled estimator for a configuration. Calling it on an infeasible
/// sample throws EstimationInfeasible.
class Estimator {
 public:
  explicit Estimator(const McConfig& cfg);
  double operator()(std::span<const double> sample) const;
  /// Constant the estimator divides by (mu_1, mu_k, sigma, mu), if any.
  std::optional<double> constant() const { return constant_; }

 private:
  std::function<double(std::span<const double>)> fn_;
  std::optional<double> constant_;
};

/// Simulate the sampling distribution of the configured estimator at theta.
/// `theta_index` keys the random substreams. Throws ExperimentInvalid when
/// more than 1% of replicates are infeasible.
EstimatorSamples estimator_distribution(const McConfig& cfg, double theta, int theta_index = 0);

enum class ScaleMode { kth_moment, sample_sd };

struct ScaleEstimate {
  double value = 0.0;
  bool degenerate = false;  ///< constant sample in sample_sd mode
};

/// kth_moment: (m_k / constant)^{1/k}; sample_sd: sqrt(m_2 - m_1^2) / constant.
ScaleEstimate scale_estimators(std::span<const double> sample, double constant, ScaleMode mode,
                               int k = 1);

/// Gaps between consecutive order statistics with X_{0:n} = 0.
std::vector<double> spacings(std::span<const double> sample);

/// (1/n^2) sum_{i<j} (U_{i+1} + ... + U_j)^2 from a spacings vector.
double variance_from_spacings(std::span<const double> spacings);

struct StReport {
  double sup_deviation = 0.0;  ///< sup_x ECDF_2(x) - ECDF_1(x), clipped at 0
  double at = 0.0;             ///< where the sup is attained
  double epsilon = 0.0;        ///< combined DKW band
  double confidence = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

/// Empirical check of samples1 <=_st samples2 with a DKW band at `confidence`.
StReport empirical_st(std::span<const double> samples1, std::span<const double> samples2,
                      double confidence = default_confidence);

struct LrReport {
  std::vector<double> edges;  ///< bins - 1 interior pooled quantiles
  std::vector<std::size_t> counts1;
  std::vector<std::size_t> counts2;
  std::vector<double> ratios;  ///< (count2 + 1/2) / (count1 + 1/2)
  double inversion_mass = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

/// Binned check of samples1 <=_lr samples2 on pooled-quantile bins.
///
/// Per bin, share = p2 / (p1 + p2) on add-half smoothed proportions. The
/// inversion mass is sum (p1 + p2) |share - fit| with fit the weighted
/// isotonic (nondecreasing) fit of share, i.e. the L1 distance from p2 to
/// the nearest proportions with a nondecreasing ratio on the pooled scale. Holds below 2 sqrt(bins/reps), fails above
/// twice that, inconclusive in between.
LrReport empirical_lr(std::span<const double> samples1, std::span<const double> samples2,
                      int bins = default_bins);

enum class Theorem { mean_lr, moment_st, statistic_st, location_lr, scale_st };
std::string_view to_string(Theorem t);
Theorem theorem_from_string(std::string_view name);

struct HypothesisCheck {
  std::string name;
  Verdict verdict = Verdict::inconclusive;
  std::string detail;
};

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;
};

struct McResult {
  Theorem theorem = Theorem::moment_st;
  EstimatorSamples samples1;
  EstimatorSamples samples2;
  SampleSummary summary1;
  SampleSummary summary2;
  StReport st;
  std::optional<LrReport> lr;
  std::vector<HypothesisCheck> hypotheses;
  bool hypotheses_met = false;
};

/// Run the estimator at theta1 and theta2 and test the order the theorem
/// predicts. The theorem's hypotheses are checked first and reported; the
/// empirical test runs even when they are unmet.
McResult verify_theorem(const McConfig& cfg, Theorem which);

SampleSummary summarize(std::span<const double> values);

}  // namespace mmorder::mc
