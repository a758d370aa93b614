#include "mmorder/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "mmorder/error.hpp"
#include "mmorder/moments.hpp"
#include "mmorder/orders.hpp"
#include "mmorder/report_json.hpp"

namespace mmorder::cli {

using nlohmann::json;
using mmorder::to_json;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return exit_domain;
    case ErrorKind::input: return exit_input;
    case ErrorKind::numeric: return exit_numeric;
  }
  return exit_numeric;
}

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::input: return "input";
    case ErrorKind::numeric: return "numeric";
  }
  return "numeric";
}

CommandOutcome error_outcome(int code, std::string_view kind, const std::string& message,
                             json extra = json::object()) {
  CommandOutcome out;
  out.exit_code = code;
  json err = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  for (auto& [k, v] : extra.items()) err[k] = v;
  out.report = {{"spec_version", spec_version}, {"error", std::move(err)}};
  return out;
}

// Runs a command body and turns library exceptions into exit codes.
template <typename Body>
CommandOutcome guarded(const RunRequest& req, Body&& body) {
  try {
    CommandOutcome out = body();
    out.report["spec_version"] = spec_version;
    out.report["request"] = to_json(req);
    return out;
  } catch (const OutOfRange& e) {
    return error_outcome(exit_domain, "infeasible", e.what(),
                         {{"lower", json_number(e.lower())}, {"upper", json_number(e.upper())}});
  } catch (const Error& e) {
    return error_outcome(exit_code_for(e.kind()), kind_name(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error_outcome(exit_numeric, "internal", e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open input file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Builtin resolve_family(const RunRequest& req) {
  if (req.family.empty()) throw InvalidInput("--family is required");
  return make_builtin(req.family, req.params);
}

double require_theta(const std::optional<double>& v, const char* flag) {
  if (!v) throw InvalidInput(std::string(flag) + " is required");
  return *v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> probe_thetas(const Family& fam, double lo, double hi, std::size_t n) {
  const bool positive = lo > 0.0 && fam.param_domain().lower >= 0.0;
  const Grid g = positive ? Grid::log_spaced(lo, hi, n) : Grid::linear(lo, hi, n);
  return {g.points().begin(), g.points().end()};
}

}  // namespace

json to_json(const RunRequest& req) {
  json params = json::object();
  for (const auto& [k, v] : req.params) params[k] = v;
  // Output destinations and the thread count do not change results and are
  // left out so that equivalent runs produce identical documents.
  return {{"command", req.command},
          {"family", req.family},
          {"params", std::move(params)},
          {"spec", req.spec},
          {"estimator", req.estimator},
          {"theorem", req.theorem},
          {"theta", req.theta ? json(*req.theta) : json(nullptr)},
          {"theta2", req.theta2 ? json(*req.theta2) : json(nullptr)},
          {"n", req.n},
          {"reps", req.reps},
          {"seed", req.seed},
          {"input", req.input},
          {"format", req.format},
          {"grid_size", req.grid_size},
          {"confidence", req.confidence},
          {"bins", req.bins}};
}

std::vector<double> parse_values_csv(const std::string& text) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string tok = trim(line);
    if (tok.empty()) continue;
    if (!seen_content && tok == "x") {
      seen_content = true;
      continue;
    }
    seen_content = true;
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw InvalidInput("line " + std::to_string(lineno) + ": cannot parse '" + tok + "' as a number");
    }
    if (!std::isfinite(v)) {
      throw InvalidInput("line " + std::to_string(lineno) + ": value is not finite");
    }
    values.push_back(v);
  }
  if (values.empty()) throw InvalidInput("line " + std::to_string(lineno) + ": input has no values");
  return values;
}

void write_atomically(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw InvalidInput("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidInput("cannot rename output into '" + path + "'");
  }
}

CommandOutcome cmd_estimate(const RunRequest& req) {
  return guarded(req, [&] {
    if (req.input.empty()) throw InvalidInput("--input is required");
    const std::vector<double> sample = parse_values_csv(read_file(req.input));
    const Builtin b = resolve_family(req);
    const MomentSpec spec = make_builtin_spec(b, req.spec);
    const Estimate est = estimate(spec, sample);
    CommandOutcome out;
    out.report = {{"theta_hat", est.theta_hat},
                  {"gbar", est.gbar},
                  {"residual", est.residual},
                  {"iterations", est.iterations},
                  {"n", sample.size()},
                  {"family", b.family->name()},
                  {"spec", spec.g_name()}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "theta_hat,gbar,residual,n\n"
        << est.theta_hat << ',' << est.gbar << ',' << est.residual << ',' << sample.size() << '\n';
    out.csv = csv.str();
    return out;
  });
}

CommandOutcome cmd_check_family(const RunRequest& req) {
  return guarded(req, [&] {
    const Builtin b = resolve_family(req);
    const Family& fam = *b.family;
    const double lo = require_theta(req.theta, "--theta");
    const double hi = require_theta(req.theta2, "--theta2");
    fam.check_theta(lo);
    fam.check_theta(hi);
    if (!(lo < hi)) throw InvalidInput("need --theta < --theta2");
    if (req.grid_size < 3) throw InvalidInput("--grid-size must be at least 3");

    const double ends[] = {lo, hi};
    const Grid xs = Grid::quantile_spaced(fam, ends, req.grid_size);
    const Grid ts = Grid::linear(lo, hi, 64);
    CommandOutcome out;
    const OrderReport tp2 = check_tp2_mixed(fam, xs, ts);
    out.report["tp2"] = to_json(tp2);

    json lc = json::array();
    Verdict lc_all = Verdict::holds;
    for (double theta : probe_thetas(fam, lo, hi, 5)) {
      const Grid xt = Grid::quantile_spaced(fam, theta, req.grid_size);
      const OrderReport r =
          check_logconcave_log([&fam, theta](double x) { return fam.log_density(x, theta); }, xt);
      if (r.verdict == Verdict::fails) {
        lc_all = Verdict::fails;
      } else if (r.verdict == Verdict::inconclusive && lc_all == Verdict::holds) {
        lc_all = Verdict::inconclusive;
      }
      json item = to_json(r);
      item["theta"] = theta;
      lc.push_back(std::move(item));
    }
    out.report["logconcave"] = {{"verdict", std::string(to_string(lc_all))}, {"per_theta", std::move(lc)}};

    json mono = {{"spec", req.spec}};
    try {
      const MomentSpec spec = make_builtin_spec(b, req.spec);
      const auto grid = probe_thetas(fam, lo, hi, 64);
      const double sgn = spec.direction() == Monotonicity::increasing ? 1.0 : -1.0;
      std::size_t bad = 0;
      json witnesses = json::array();
      double prev = spec.evaluate(grid[0]);
      for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = spec.evaluate(grid[i]);
        if (!(sgn * (cur - prev) > 0.0)) {
          ++bad;
          if (witnesses.size() < max_witnesses) {
            witnesses.push_back({{"x", grid[i]}, {"violation", json_number(sgn * (prev - cur))}});
          }
        }
        prev = cur;
      }
      mono["direction"] = std::string(to_string(spec.direction()));
      mono["verdict"] = bad == 0 ? "holds" : "fails";
      mono["checked"] = grid.size() - 1;
      mono["witnesses"] = std::move(witnesses);
    } catch (const DomainError& e) {
      mono["direction"] = "none";
      mono["verdict"] = "fails";
      mono["detail"] = e.what();
    }
    out.report["m_monotone"] = std::move(mono);
    out.report["family"] = fam.name();
    out.summary_lines.push_back("tp2: " + std::string(to_string(tp2.verdict)));
    out.summary_lines.push_back("logconcave: " + std::string(to_string(lc_all)));
    out.summary_lines.push_back("m monotone: " + out.report["m_monotone"]["verdict"].get<std::string>());
    return out;
  });
}

CommandOutcome cmd_check_order(const RunRequest& req) {
  return guarded(req, [&] {
    const Builtin b = resolve_family(req);
    const Family& fam = *b.family;
    const double t1 = require_theta(req.theta, "--theta");
    const double t2 = require_theta(req.theta2, "--theta2");
    fam.check_theta(t1);
    fam.check_theta(t2);
    if (req.grid_size < 3) throw InvalidInput("--grid-size must be at least 3");

    const double thetas[] = {t1, t2};
    const Grid xs = Grid::quantile_spaced(fam, thetas, req.grid_size);
    CommandOutcome out;
    out.report["family"] = fam.name();
    if (fam.has_cdf()) {
      const OrderReport st = check_st([&](double x) { return fam.cdf(x, t1); },
                                      [&](double x) { return fam.cdf(x, t2); }, xs);
      out.report["st"] = to_json(st);
      out.summary_lines.push_back("st: " + std::string(to_string(st.verdict)));
    } else {
      out.report["st"] = nullptr;
    }
    const OrderReport lr = check_lr_log([&](double x) { return fam.log_density(x, t1); },
                                        [&](double x) { return fam.log_density(x, t2); }, xs);
    out.report["lr"] = to_json(lr);
    out.summary_lines.push_back("lr: " + std::string(to_string(lr.verdict)));
    if (fam.has_quantile()) {
      const Grid alphas = Grid::linear(1e-4, 1.0 - 1e-4, req.grid_size);
      const OrderReport disp = check_disp([&](double u) { return fam.quantile(u, t1); },
                                          [&](double u) { return fam.quantile(u, t2); }, alphas);
      out.report["disp"] = to_json(disp);
      out.summary_lines.push_back("disp: " + std::string(to_string(disp.verdict)));
    } else {
      out.report["disp"] = nullptr;
    }
    return out;
  });
}

mc::Theorem infer_theorem(const RunRequest& req) {
  if (!req.theorem.empty()) return mc::theorem_from_string(req.theorem);
  switch (mc::estimator_kind_from_string(req.estimator)) {
    case mc::EstimatorKind::moment_spec:
      return req.spec == "T" ? mc::Theorem::statistic_st : mc::Theorem::moment_st;
    case mc::EstimatorKind::location_mean:
      return mc::Theorem::location_lr;
    default:
      return mc::Theorem::scale_st;
  }
}

mc::McConfig make_mc_config(const RunRequest& req) {
  mc::McConfig cfg;
  cfg.family = resolve_family(req);
  cfg.estimator.kind = mc::estimator_kind_from_string(req.estimator);
  cfg.estimator.selector = req.spec;
  if (cfg.estimator.kind == mc::EstimatorKind::scale_kth_moment && req.spec.starts_with("k-th:")) {
    const std::string digits = req.spec.substr(5);
    int k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1) {
      throw InvalidInput("bad moment order in '" + req.spec + "'");
    }
    cfg.estimator.k = k;
  }
  cfg.theta1 = req.theta.value_or(1.0);
  cfg.theta2 = req.theta2.value_or(2.0);
  cfg.n = req.n;
  cfg.reps = req.reps;
  cfg.seed = req.seed;
  cfg.confidence = req.confidence;
  cfg.bins = req.bins;
  cfg.threads = req.threads;
  cfg.validate();
  return cfg;
}

CommandOutcome cmd_simulate(const RunRequest& req) {
  return guarded(req, [&] {
    const mc::McConfig cfg = make_mc_config(req);
    const mc::Theorem which = infer_theorem(req);
    const mc::McResult res = mc::verify_theorem(cfg, which);
    CommandOutcome out;
    out.report = to_json(res);
    out.report["config"] = to_json(cfg);
    std::ostringstream csv;
    write_replicates_csv(csv, res);
    out.csv = csv.str();

    const std::string tag = std::string(mc::to_string(which)) + " " + cfg.family.family->name();
    std::ostringstream st;
    st << tag << " st: " << to_string(res.st.verdict) << " (D = " << res.st.sup_deviation
       << ", eps = " << res.st.epsilon << ")";
    out.summary_lines.push_back(st.str());
    if (res.lr) {
      std::ostringstream lr;
      lr << tag << " lr: " << to_string(res.lr->verdict) << " (mass = " << res.lr->inversion_mass
         << ", threshold = " << res.lr->threshold << ")";
      out.summary_lines.push_back(lr.str());
    }
    return out;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Method-of-moments estimators and stochastic order checks"};
  app.require_subcommand(1);
  RunRequest req;
  std::vector<std::string> params;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--family", req.family, "catalog family name")->required();
    sub->add_option("--param", params, "fixed parameter k=v (repeatable)");
    sub->add_option("--spec", req.spec, "moment selector: mean, log, T, k-th:<k>, abs-log");
    sub->add_option("--output", req.output, "output file (default stdout)");
    sub->add_option("--format", req.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };
  auto add_theta = [&](CLI::App* sub) {
    sub->add_option("--theta", req.theta, "parameter value (first of a pair)");
    sub->add_option("--theta2", req.theta2, "second parameter value");
  };

  CLI::App* est = app.add_subcommand("estimate", "estimate theta from a CSV sample");
  add_common(est);
  est->add_option("--input", req.input, "CSV file, one value per line")->required();

  CLI::App* fam = app.add_subcommand("check-family", "TP2, logconcavity and moment monotonicity");
  add_common(fam);
  add_theta(fam);
  fam->add_option("--grid-size", req.grid_size, "x grid points");

  CLI::App* ord = app.add_subcommand("check-order", "st, lr and disp orders between two parameters");
  add_common(ord);
  add_theta(ord);
  ord->add_option("--grid-size", req.grid_size, "x grid points");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo check of estimator ordering");
  add_common(sim);
  add_theta(sim);
  sim->add_option("--n", req.n, "sample size");
  sim->add_option("--reps", req.reps, "replicates per parameter value");
  sim->add_option("--seed", req.seed, "random seed");
  sim->add_option("--confidence", req.confidence, "DKW band confidence");
  sim->add_option("--estimator", req.estimator,
                  "moment, location-mean, scale-kth, scale-sd, weibull-abslog-sd, weibull-abslog-mean");
  sim->add_option("--theorem", req.theorem,
                  "mean-lr, moment-st, statistic-st, location-lr, scale-st (default from estimator)");
  sim->add_option("--bins", req.bins, "bins for the lr test");
  sim->add_option("--threads", req.threads, "worker threads (0 = all cores)");
  sim->add_option("--csv", req.csv, "per-replicate CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_outcome(exit_input, "input", e.what()).report.dump() << '\n';
    return exit_input;
  }

  CommandOutcome outcome;
  try {
    for (const std::string& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) throw InvalidInput("--param expects k=v, got '" + p + "'");
      double v = 0.0;
      const std::string val = p.substr(eq + 1);
      const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec != std::errc() || ptr != val.data() + val.size() || !std::isfinite(v)) {
        throw InvalidInput("--param value is not a number: '" + p + "'");
      }
      req.params[p.substr(0, eq)] = v;
    }
    req.command = app.get_subcommands().front()->get_name();
  } catch (const Error& e) {
    err << error_outcome(exit_input, "input", e.what()).report.dump() << '\n';
    return exit_input;
  }

  if (req.command == "estimate") {
    outcome = cmd_estimate(req);
  } else if (req.command == "check-family") {
    outcome = cmd_check_family(req);
  } else if (req.command == "check-order") {
    outcome = cmd_check_order(req);
  } else {
    outcome = cmd_simulate(req);
  }

  if (outcome.exit_code != exit_ok) {
    err << outcome.report.dump() << '\n';
    return outcome.exit_code;
  }

  try {
    std::string body;
    if (req.format == "csv") {
      if (outcome.csv.empty()) throw InvalidInput("--format csv is available for estimate and simulate");
      body = outcome.csv;
    } else {
      body = outcome.report.dump(2) + "\n";
    }
    if (!req.csv.empty()) write_atomically(req.csv, outcome.csv);
    if (req.output.empty()) {
      out << body;
      for (const auto& line : outcome.summary_lines) err << line << '\n';
    } else {
      write_atomically(req.output, body);
      for (const auto& line : outcome.summary_lines) out << line << '\n';
    }
  } catch (const Error& e) {
    err << error_outcome(exit_code_for(e.kind()), kind_name(e.kind()), e.what()).report.dump() << '\n';
    return exit_code_for(e.kind());
  }
  return exit_ok;
}

}  // namespace mmorder::cli
