#include "dv/serialize.hpp"

namespace dv {

using nlohmann::json;

std::string estimated_spec(const ValueEstimate& v) {
  return v.estimator == "permutation_shapley" ? "shapley" : "banzhaf";
}

void to_json(json& j, const ValueVector& v) {
  j = json{{"spec", v.spec_label}, {"n", v.values.size()}, {"exact", v.exact}, {"values", v.values}};
}

void to_json(json& j, const ValueEstimate& v) {
  j = json{{"spec", estimated_spec(v)},
           {"n", v.values.size()},
           {"exact", false},
           {"values", v.values},
           {"m", v.m},
           {"estimator", v.estimator},
           {"degenerate_points", v.degenerate_points},
           {"oracle_calls", v.oracle_calls}};
}

void to_json(json& j, const SafetyMarginReport& r) {
  j = json{{"spec", r.spec_label},     {"n", r.n},
           {"tau", r.tau},             {"margin", r.margin},
           {"l2_flip_margin", r.l2_flip_margin}, {"per_term", r.per_term}};
}

void to_json(json& j, const LipschitzReport& r) {
  j = json{{"spec", r.spec_label}, {"n", r.n},     {"d1", r.d1},
           {"d2", r.d2},           {"closed_form", r.closed_form}};
  j["numeric_operator_norm"] =
      r.numeric_operator_norm ? json(*r.numeric_operator_norm) : json(nullptr);
}

void to_json(json& j, const FlipTestResult& r) {
  json trace = json::array();
  for (const auto& s : r.trace) {
    trace.push_back({{"lo", s.lo}, {"hi", s.hi}, {"magnitude", s.magnitude}, {"flipped", s.flipped}});
  }
  j = json{{"spec", r.spec_label},
           {"n", r.n},
           {"tau", r.tau},
           {"i", r.i},
           {"j", r.j},
           {"empirical_threshold", r.empirical_threshold},
           {"closed_form_margin", r.closed_form_margin},
           {"l2_threshold", r.l2_threshold},
           {"ratio_to_closed_form", r.ratio_to_closed_form()},
           {"trace", trace}};
}

void to_json(json& j, const RankReport& r) {
  j = json{{"spearman", r.spearman}, {"n", r.n}, {"tie_policy", r.tie_policy},
           {"degenerate", r.degenerate}};
}

void to_json(json& j, const DetectionReport& r) {
  j = json{{"threshold_percentile", r.threshold_percentile},
           {"threshold_value", r.threshold_value},
           {"predicted", r.predicted},
           {"precision", r.precision},
           {"recall", r.recall},
           {"f1", r.f1},
           {"undefined", r.undefined}};
}

void to_json(json& j, const WeightedTrainingReport& r) {
  j = json{{"mean_accuracy", r.mean_accuracy},
           {"stderr_accuracy", r.stderr_accuracy},
           {"accuracies", r.accuracies},
           {"degenerate_weights", r.degenerate_weights}};
}

void to_json(json& j, const TrainerConfig& c) {
  j = json{{"model", to_string(c.model)},
           {"optimizer", to_string(c.optimizer)},
           {"learning_rate", c.learning_rate},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"init", c.init == InitKind::kZeros ? "zeros" : "gaussian"},
           {"init_scale", c.init_scale},
           {"smoothing_radius", c.smoothing_radius},
           {"smoothing_samples", c.smoothing_samples},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainerConfig& c) {
  if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
  if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("init")) {
    c.init = j.at("init").get<std::string>() == "gaussian" ? InitKind::kGaussian : InitKind::kZeros;
  }
  if (j.contains("init_scale")) c.init_scale = j.at("init_scale").get<double>();
  if (j.contains("smoothing_radius")) c.smoothing_radius = j.at("smoothing_radius").get<double>();
  if (j.contains("smoothing_samples")) c.smoothing_samples = j.at("smoothing_samples").get<std::size_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace dv
