#pragma once

#include <nlohmann/json.hpp>

#include "dv/estimators.hpp"
#include "dv/evalkit.hpp"
#include "dv/robustness.hpp"
#include "dv/semivalue.hpp"
#include "dv/trainer.hpp"

namespace dv {

// {"spec": label, "n": n, "exact": bool, "values": [...]}
void to_json(nlohmann::json& j, const ValueVector& v);
// ValueVector schema plus "m", "estimator", "degenerate_points", "oracle_calls".
void to_json(nlohmann::json& j, const ValueEstimate& v);
void to_json(nlohmann::json& j, const SafetyMarginReport& r);
void to_json(nlohmann::json& j, const LipschitzReport& r);
void to_json(nlohmann::json& j, const FlipTestResult& r);
void to_json(nlohmann::json& j, const RankReport& r);
void to_json(nlohmann::json& j, const DetectionReport& r);
void to_json(nlohmann::json& j, const WeightedTrainingReport& r);
void to_json(nlohmann::json& j, const TrainerConfig& c);
void from_json(const nlohmann::json& j, TrainerConfig& c);

// Semivalue label an estimator approximates ("banzhaf" or "shapley").
std::string estimated_spec(const ValueEstimate& v);

}  // namespace dv
