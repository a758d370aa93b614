#include "mmorder/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <sstream>
#include <thread>

#include "mmorder/error.hpp"
#include "mmorder/quadrature.hpp"
#include "mmorder/specfun.hpp"

namespace mmorder::mc {

namespace {

double family_moment(const Family& family, double theta, const RealFn& g) {
  const Support s = family.support(theta);
  quadrature::Integrand integrand = [&](double x) {
    const double ld = family.log_density(x, theta);
    return std::isinf(ld) ? 0.0 : g(x) * std::exp(ld);
  };
  return quadrature::integrate(integrand, s.lower, s.upper).value;
}

bool positive_support(const Family& f) { return f.sample_space().lower >= 0.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::moment_spec: return "moment";
    case EstimatorKind::location_mean: return "location-mean";
    case EstimatorKind::scale_kth_moment: return "scale-kth";
    case EstimatorKind::scale_sample_sd: return "scale-sd";
    case EstimatorKind::weibull_abslog_sd: return "weibull-abslog-sd";
    case EstimatorKind::weibull_abslog_mean: return "weibull-abslog-mean";
  }
  return "moment";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
  for (auto k : {EstimatorKind::moment_spec, EstimatorKind::location_mean,
                 EstimatorKind::scale_kth_moment, EstimatorKind::scale_sample_sd,
                 EstimatorKind::weibull_abslog_sd, EstimatorKind::weibull_abslog_mean}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidInput("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::mean_lr: return "mean-lr";
    case Theorem::moment_st: return "moment-st";
    case Theorem::statistic_st: return "statistic-st";
    case Theorem::location_lr: return "location-lr";
    case Theorem::scale_st: return "scale-st";
  }
  return "moment-st";
}

Theorem theorem_from_string(std::string_view name) {
  for (auto t : {Theorem::mean_lr, Theorem::moment_st, Theorem::statistic_st, Theorem::location_lr,
                 Theorem::scale_st}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidInput("unknown theorem '" + std::string(name) + "'");
}

void McConfig::validate() const {
  if (!family.family) throw InvalidInput("McConfig: no family");
  const Family& f = *family.family;
  f.check_theta(theta1);
  f.check_theta(theta2);
  if (!(theta1 < theta2)) throw DomainError("McConfig: need theta1 < theta2");
  require(n >= 1, "McConfig: sample size n must be at least 1");
  require(reps >= 1000, "McConfig: at least 1000 replications are required");
  require(confidence > 0.9 && confidence < 1.0, "McConfig: confidence must lie in (0.9, 1)");
  require(bins >= 5, "McConfig: at least 5 bins are required");
  if ((estimator.kind == EstimatorKind::scale_sample_sd ||
       estimator.kind == EstimatorKind::weibull_abslog_sd) &&
      n < 2) {
    throw InvalidInput("McConfig: sample-sd estimators need n >= 2");
  }
  if (estimator.kind == EstimatorKind::scale_kth_moment) {
    require(estimator.k >= 1, "McConfig: moment order k must be at least 1");
  }
}

// ---------------------------------------------------------------------------

Estimator::Estimator(const McConfig& cfg) {
  const Builtin& b = cfg.family;
  const FamilyPtr fam = b.family;
  switch (cfg.estimator.kind) {
    case EstimatorKind::moment_spec: {
      auto spec = std::make_shared<const MomentSpec>(make_builtin_spec(b, cfg.estimator.selector));
      fn_ = [spec](std::span<const double> s) { return estimate(*spec, s).theta_hat; };
      break;
    }
    case EstimatorKind::location_mean: {
      if (fam->role() != ParameterRole::location) {
        throw DomainError("location-mean estimator needs a location family; '" + fam->name() +
                          "' is not one");
      }
      const double mu1 = make_builtin_spec(b, "mean").evaluate(0.0);
      constant_ = mu1;
      fn_ = [mu1](std::span<const double> s) {
        double sum = 0.0;
        for (double x : s) sum += x;
        return sum / static_cast<double>(s.size()) - mu1;
      };
      break;
    }
    case EstimatorKind::scale_kth_moment: {
      if (fam->role() != ParameterRole::scale || !positive_support(*fam)) {
        throw DomainError("scale estimators need a scale family on (0, inf); '" + fam->name() +
                          "' is not one");
      }
      const int k = cfg.estimator.k;
      const double mu_k = family_moment(*fam, 1.0, [k](double x) { return std::pow(x, k); });
      constant_ = mu_k;
      fn_ = [mu_k, k](std::span<const double> s) {
        return scale_estimators(s, mu_k, ScaleMode::kth_moment, k).value;
      };
      break;
    }
    case EstimatorKind::scale_sample_sd: {
      if (fam->role() != ParameterRole::scale || !positive_support(*fam)) {
        throw DomainError("scale estimators need a scale family on (0, inf); '" + fam->name() +
                          "' is not one");
      }
      const double m1 = family_moment(*fam, 1.0, [](double x) { return x; });
      const double var = family_moment(*fam, 1.0, [m1](double x) { return (x - m1) * (x - m1); });
      const double sigma = std::sqrt(var);
      constant_ = sigma;
      fn_ = [sigma](std::span<const double> s) {
        return scale_estimators(s, sigma, ScaleMode::sample_sd).value;
      };
      break;
    }
    case EstimatorKind::weibull_abslog_sd:
    case EstimatorKind::weibull_abslog_mean: {
      if (fam->name() != "weibull_theta") {
        throw DomainError("weibull |log X| estimators need the weibull_theta family");
      }
      const bool sd = cfg.estimator.kind == EstimatorKind::weibull_abslog_sd;
      const double c =
          sd ? std::sqrt(specfun::gumbel_abs_variance()) : specfun::gumbel_abs_mean();
      constant_ = c;
      fn_ = [c, sd](std::span<const double> s) {
        std::vector<double> z(s.size());
        std::transform(s.begin(), s.end(), z.begin(),
                       [](double x) { return std::abs(std::log(x)); });
        return scale_estimators(z, c, sd ? ScaleMode::sample_sd : ScaleMode::kth_moment, 1).value;
      };
      break;
    }
  }
}

double Estimator::operator()(std::span<const double> sample) const { return fn_(sample); }

EstimatorSamples estimator_distribution(const McConfig& cfg, double theta, int theta_index) {
  cfg.validate();
  cfg.family.family->check_theta(theta);
  const Estimator est(cfg);
  const Family& fam = *cfg.family.family;

  const std::size_t reps = cfg.reps;
  std::vector<double> values(reps, 0.0);
  std::vector<char> failed(reps, 0);

  auto run_block = [&](std::size_t begin, std::size_t end) {
    std::vector<double> sample(cfg.n);
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream rng = RandomStream::substream(cfg.seed, static_cast<std::uint64_t>(theta_index), r);
      for (double& x : sample) x = fam.sample(theta, rng);
      try {
        values[r] = est(sample);
      } catch (const EstimationInfeasible&) {
        failed[r] = 1;
      }
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));
  if (threads <= 1) {
    run_block(0, reps);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (reps + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(reps, t * chunk);
      const std::size_t end = std::min(reps, begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          run_block(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EstimatorSamples out;
  out.theta = theta;
  out.values.reserve(reps);
  out.replicate.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    if (failed[r]) {
      ++out.failures;
      continue;
    }
    out.replicate.push_back(r);
    out.values.push_back(values[r]);
  }
  if (static_cast<double>(out.failures) > 0.01 * static_cast<double>(reps)) {
    std::ostringstream msg;
    msg << out.failures << " of " << reps << " replicates at theta = " << theta
        << " had an infeasible empirical moment (limit 1%)";
    throw ExperimentInvalid(msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------

ScaleEstimate scale_estimators(std::span<const double> sample, double constant, ScaleMode mode,
                               int k) {
  if (sample.empty()) throw InvalidInput("scale_estimators: sample is empty");
  if (!(constant > 0.0) || !std::isfinite(constant)) {
    throw InvalidInput("scale_estimators: family constant must be positive");
  }
  for (double x : sample) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw DomainError("scale_estimators: sample values must be nonnegative and finite");
    }
  }
  const double n = static_cast<double>(sample.size());
  if (mode == ScaleMode::kth_moment) {
    if (k < 1) throw InvalidInput("scale_estimators: k must be at least 1");
    double mk = 0.0;
    for (double x : sample) mk += std::pow(x, k);
    mk /= n;
    return {std::pow(mk / constant, 1.0 / k), false};
  }
  if (sample.size() < 2) throw InvalidInput("scale_estimators: sample-sd mode needs n >= 2");
  double m1 = 0.0;
  for (double x : sample) m1 += x;
  m1 /= n;
  double s2 = 0.0;
  for (double x : sample) s2 += (x - m1) * (x - m1);
  s2 /= n;
  if (!(s2 >= 0.0)) throw NumericError("scale_estimators: negative sample variance");
  if (s2 == 0.0) return {0.0, true};
  return {std::sqrt(s2) / constant, false};
}

std::vector<double> spacings(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(sorted.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out[i] = sorted[i] - prev;
    prev = sorted[i];
  }
  return out;
}

double variance_from_spacings(std::span<const double> u) {
  const std::size_t n = u.size();
  if (n == 0) throw InvalidInput("variance_from_spacings: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double partial = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      partial += u[j];
      total += partial * partial;
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n));
}

// ---------------------------------------------------------------------------

StReport empirical_st(std::span<const double> samples1, std::span<const double> samples2,
                      double confidence) {
  require(samples1.size() >= 1000 && samples2.size() >= 1000,
          "empirical_st: each sample list needs at least 1000 values");
  require(confidence > 0.9 && confidence < 1.0, "empirical_st: confidence must lie in (0.9, 1)");
  std::vector<double> a(samples1.begin(), samples1.end());
  std::vector<double> b(samples2.begin(), samples2.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  StReport rep;
  rep.confidence = confidence;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    double x = 0.0;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    const double d = static_cast<double>(j) / nb - static_cast<double>(i) / na;
    if (d > rep.sup_deviation) {
      rep.sup_deviation = d;
      rep.at = x;
    }
  }
  const double log_term = std::log(2.0 / (1.0 - confidence));
  rep.epsilon = std::sqrt(log_term / (2.0 * na)) + std::sqrt(log_term / (2.0 * nb));
  if (rep.sup_deviation <= rep.epsilon) {
    rep.verdict = Verdict::holds;
  } else if (rep.sup_deviation > 2.0 * rep.epsilon) {
    rep.verdict = Verdict::fails;
  } else {
    rep.verdict = Verdict::inconclusive;
  }
  return rep;
}

namespace {

// Weighted least-squares nondecreasing fit (pool adjacent violators).
std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& w) {
  struct Block {
    double value;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double weight = prev.weight + top.weight;
      prev.value = (prev.value * prev.weight + top.value * top.weight) / weight;
      prev.weight = weight;
      prev.count += top.count;
    }
  }
  std::vector<double> fit;
  fit.reserve(y.size());
  for (const Block& b : blocks) fit.insert(fit.end(), b.count, b.value);
  return fit;
}

}  // namespace

LrReport empirical_lr(std::span<const double> samples1, std::span<const double> samples2, int bins) {
  require(samples1.size() >= 1000 && samples2.size() >= 1000,
          "empirical_lr: each sample list needs at least 1000 values");
  require(bins >= 5, "empirical_lr: at least 5 bins are required");
  std::vector<double> pooled;
  pooled.reserve(samples1.size() + samples2.size());
  pooled.insert(pooled.end(), samples1.begin(), samples1.end());
  pooled.insert(pooled.end(), samples2.begin(), samples2.end());
  std::sort(pooled.begin(), pooled.end());

  const auto nbins = static_cast<std::size_t>(bins);
  LrReport rep;
  rep.edges.resize(nbins - 1);
  for (std::size_t b = 1; b < nbins; ++b) {
    rep.edges[b - 1] = pooled[b * pooled.size() / nbins];
  }
  auto count = [&](std::span<const double> s) {
    std::vector<std::size_t> c(nbins, 0);
    for (double x : s) {
      const auto it = std::upper_bound(rep.edges.begin(), rep.edges.end(), x);
      ++c[static_cast<std::size_t>(it - rep.edges.begin())];
    }
    return c;
  };
  rep.counts1 = count(samples1);
  rep.counts2 = count(samples2);

  const double half_bins = 0.5 * static_cast<double>(nbins);
  const double n1 = static_cast<double>(samples1.size()) + half_bins;
  const double n2 = static_cast<double>(samples2.size()) + half_bins;
  // share = p2 / (p1 + p2) is a bounded increasing transform of the ratio.
  // The mass is sum |p2 - (p1 + p2) * fit|, fit isotonic in share.
  std::vector<double> share(nbins);
  std::vector<double> weight(nbins);
  rep.ratios.resize(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    const double c1 = static_cast<double>(rep.counts1[b]) + 0.5;
    const double c2 = static_cast<double>(rep.counts2[b]) + 0.5;
    rep.ratios[b] = c2 / c1;
    const double p1 = c1 / n1;
    const double p2 = c2 / n2;
    share[b] = p2 / (p1 + p2);
    weight[b] = p1 + p2;
  }
  const std::vector<double> fit = isotonic_fit(share, weight);
  for (std::size_t b = 0; b < nbins; ++b) {
    rep.inversion_mass += weight[b] * std::abs(share[b] - fit[b]);
  }

  const double reps = static_cast<double>(std::min(samples1.size(), samples2.size()));
  rep.threshold = 2.0 * std::sqrt(static_cast<double>(nbins) / reps);
  if (rep.inversion_mass <= rep.threshold) {
    rep.verdict = Verdict::holds;
  } else if (rep.inversion_mass > 2.0 * rep.threshold) {
    rep.verdict = Verdict::fails;
  } else {
    rep.verdict = Verdict::inconclusive;
  }
  return rep;
}

SampleSummary summarize(std::span<const double> values) {
  SampleSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
  s.variance = values.size() > 1 ? s.variance / (n - 1.0) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

HypothesisCheck from_report(std::string name, const OrderReport& rep) {
  std::ostringstream detail;
  detail << rep.violations << " violations over " << rep.checked << " cells";
  if (!rep.witnesses.empty()) {
    detail << "; first at x = " << rep.witnesses.front().x;
    if (!std::isnan(rep.witnesses.front().y)) detail << ", theta = " << rep.witnesses.front().y;
  }
  return {std::move(name), rep.verdict, detail.str()};
}

HypothesisCheck flag(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? Verdict::holds : Verdict::fails, std::move(detail)};
}

HypothesisCheck tp2_check(const McConfig& cfg) {
  const Family& f = *cfg.family.family;
  const double thetas[] = {cfg.theta1, cfg.theta2};
  const Grid xs = Grid::quantile_spaced(f, thetas, 512);
  const Grid ts = Grid::linear(cfg.theta1, cfg.theta2, 64);
  return from_report("tp2", check_tp2_mixed(f, xs, ts));
}

HypothesisCheck logconcave_check(const McConfig& cfg, double theta) {
  const Family& f = *cfg.family.family;
  const Grid xs = Grid::quantile_spaced(f, theta, 512);
  std::ostringstream name;
  name << "logconcave(theta=" << theta << ")";
  return from_report(name.str(), check_logconcave_log(
                                     [&f, theta](double x) { return f.log_density(x, theta); }, xs));
}

void require_estimator(const McConfig& cfg, bool ok, Theorem which) {
  if (!ok) {
    throw InvalidInput("estimator '" + std::string(to_string(cfg.estimator.kind)) +
                       "' is not the one theorem " + std::string(to_string(which)) + " concerns");
  }
}

}  // namespace

McResult verify_theorem(const McConfig& cfg, Theorem which) {
  cfg.validate();
  const Family& fam = *cfg.family.family;
  const EstimatorKind kind = cfg.estimator.kind;
  McResult res;
  res.theorem = which;
  bool want_lr = false;

  switch (which) {
    case Theorem::mean_lr: {
      require_estimator(cfg, kind == EstimatorKind::moment_spec && cfg.estimator.selector == "mean",
                        which);
      res.hypotheses.push_back(tp2_check(cfg));
      res.hypotheses.push_back(logconcave_check(cfg, cfg.theta1));
      res.hypotheses.push_back(logconcave_check(cfg, cfg.theta2));
      want_lr = true;
      break;
    }
    case Theorem::moment_st: {
      require_estimator(cfg, kind == EstimatorKind::moment_spec, which);
      res.hypotheses.push_back(tp2_check(cfg));
      const MomentSpec spec = make_builtin_spec(cfg.family, cfg.estimator.selector);
      const double thetas[] = {cfg.theta1, cfg.theta2};
      const Grid xs = Grid::quantile_spaced(fam, thetas, 128);
      bool increasing = true;
      for (std::size_t i = 1; i < xs.size(); ++i) {
        increasing = increasing && spec.g(xs[i]) > spec.g(xs[i - 1]);
      }
      res.hypotheses.push_back(flag("g increasing", increasing, "g = " + spec.g_name()));
      break;
    }
    case Theorem::statistic_st: {
      require_estimator(cfg, kind == EstimatorKind::moment_spec && cfg.estimator.selector == "T",
                        which);
      if (!cfg.family.exp) {
        res.hypotheses.push_back(flag("exponential family", false, fam.name() + " has no form"));
        break;
      }
      const ExpFamily& ef = *cfg.family.exp;
      const double thetas[] = {cfg.theta1, cfg.theta2};
      const Grid xs = Grid::quantile_spaced(fam, thetas, 64);
      const Grid ts = Grid::linear(cfg.theta1, cfg.theta2, 16);
      const std::vector<double> xv(xs.points().begin(), xs.points().end());
      const std::vector<double> tv(ts.points().begin(), ts.points().end());
      const bool declared_ok = verify_exp_family_monotonicity(ef, xv, tv);
      const bool same = ef.eta_direction == ef.t_direction && ef.eta_direction != Monotonicity::none;
      res.hypotheses.push_back(
          flag("eta and T monotone in the same direction", declared_ok && same,
               "eta " + std::string(to_string(ef.eta_direction)) + ", T " +
                   std::string(to_string(ef.t_direction))));
      break;
    }
    case Theorem::location_lr: {
      require_estimator(cfg, kind == EstimatorKind::location_mean, which);
      res.hypotheses.push_back(flag("location family", fam.role() == ParameterRole::location,
                                    fam.name()));
      res.hypotheses.push_back(logconcave_check(cfg, cfg.theta1));
      want_lr = true;
      break;
    }
    case Theorem::scale_st: {
      const bool weibull = kind == EstimatorKind::weibull_abslog_sd ||
                           kind == EstimatorKind::weibull_abslog_mean;
      require_estimator(cfg, weibull || kind == EstimatorKind::scale_kth_moment ||
                                 kind == EstimatorKind::scale_sample_sd,
                        which);
      if (weibull) {
        res.hypotheses.push_back(flag("scale family on (0, inf)", fam.name() == "weibull_theta",
                                      "|log X| = theta |W| with W standard Gumbel"));
      } else {
        res.hypotheses.push_back(
            flag("scale family on (0, inf)",
                 fam.role() == ParameterRole::scale && positive_support(fam), fam.name()));
      }
      break;
    }
  }
  res.hypotheses_met = std::all_of(res.hypotheses.begin(), res.hypotheses.end(),
                                   [](const HypothesisCheck& h) { return h.verdict == Verdict::holds; });

  res.samples1 = estimator_distribution(cfg, cfg.theta1, 0);
  res.samples2 = estimator_distribution(cfg, cfg.theta2, 1);
  res.summary1 = summarize(res.samples1.values);
  res.summary2 = summarize(res.samples2.values);
  res.st = empirical_st(res.samples1.values, res.samples2.values, cfg.confidence);
  if (want_lr) res.lr = empirical_lr(res.samples1.values, res.samples2.values, cfg.bins);
  return res;
}

}  // namespace mmorder::mc
