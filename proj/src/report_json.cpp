#include "mmorder/report_json.hpp"

#include <cmath>
#include <ostream>

namespace mmorder {

using nlohmann::json;

json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json to_json(const OrderReport& report) {
  json witnesses = json::array();
  for (const Witness& w : report.witnesses) {
    json item = {{"x", json_number(w.x)}, {"violation", json_number(w.violation)}};
    if (!std::isnan(w.y)) item["y"] = json_number(w.y);
    witnesses.push_back(std::move(item));
  }
  return {{"verdict", std::string(to_string(report.verdict))},
          {"witnesses", std::move(witnesses)},
          {"violations", report.violations},
          {"marginal", report.marginal},
          {"checked", report.checked},
          {"skipped", report.skipped},
          {"max_violation", json_number(report.max_violation)},
          {"tolerance", report.tolerance}};
}

json to_json(const mc::StReport& report) {
  return {{"verdict", std::string(to_string(report.verdict))},
          {"sup_deviation", report.sup_deviation},
          {"at", json_number(report.at)},
          {"epsilon", report.epsilon},
          {"confidence", report.confidence}};
}

json to_json(const mc::LrReport& report) {
  json edges = json::array();
  for (double e : report.edges) edges.push_back(json_number(e));
  return {{"verdict", std::string(to_string(report.verdict))},
          {"inversion_mass", report.inversion_mass},
          {"threshold", report.threshold},
          {"edges", std::move(edges)},
          {"counts1", report.counts1},
          {"counts2", report.counts2},
          {"ratios", report.ratios}};
}

json to_json(const mc::McConfig& cfg) {
  json params = json::object();
  for (const auto& [k, v] : cfg.family.family->fixed_params()) params[k] = v;
  json estimator = {{"kind", std::string(mc::to_string(cfg.estimator.kind))}};
  if (cfg.estimator.kind == mc::EstimatorKind::moment_spec) estimator["spec"] = cfg.estimator.selector;
  if (cfg.estimator.kind == mc::EstimatorKind::scale_kth_moment) estimator["k"] = cfg.estimator.k;
  return {{"family", cfg.family.family->name()},
          {"params", std::move(params)},
          {"estimator", std::move(estimator)},
          {"theta1", cfg.theta1},
          {"theta2", cfg.theta2},
          {"n", cfg.n},
          {"reps", cfg.reps},
          {"seed", cfg.seed},
          {"confidence", cfg.confidence},
          {"bins", cfg.bins}};
}

json to_json(const mc::McResult& result) {
  json hyps = json::array();
  for (const auto& h : result.hypotheses) {
    hyps.push_back({{"name", h.name},
                    {"verdict", std::string(to_string(h.verdict))},
                    {"detail", h.detail}});
  }
  auto side = [](const mc::EstimatorSamples& s, const mc::SampleSummary& sum) {
    return json{{"theta", s.theta},
                {"kept", s.values.size()},
                {"failures", s.failures},
                {"mean", sum.mean},
                {"variance", sum.variance}};
  };
  json out = {{"theorem", std::string(mc::to_string(result.theorem))},
              {"hypotheses", std::move(hyps)},
              {"hypotheses_met", result.hypotheses_met},
              {"sample1", side(result.samples1, result.summary1)},
              {"sample2", side(result.samples2, result.summary2)},
              {"st", to_json(result.st)}};
  out["lr"] = result.lr ? to_json(*result.lr) : json(nullptr);
  return out;
}

void write_replicates_csv(std::ostream& out, const mc::McResult& result) {
  out << "replicate,theta,theta_hat\n";
  const auto prev = out.precision(17);
  for (const mc::EstimatorSamples* s : {&result.samples1, &result.samples2}) {
    for (std::size_t i = 0; i < s->values.size(); ++i) {
      out << s->replicate[i] << ',' << s->theta << ',' << s->values[i] << '\n';
    }
  }
  out.precision(prev);
}

}  // namespace mmorder
