#pragma once

#include <string>

#include "json.hpp"

#include "teachsim/env.hpp"
#include "teachsim/feedback.hpp"
#include "teachsim/harness.hpp"
#include "teachsim/learner.hpp"

namespace teachsim {

using json = nlohmann::json;

// Parse errors surface as std::invalid_argument with the offending key.

json to_json(const Environment& env);
Environment environment_from_json(const json& j);

json to_json(const Feedback& fb);
Feedback feedback_from_json(const json& j);

json to_json(const FeedbackMode& mode);
FeedbackMode feedback_mode_from_json(const json& j);

json to_json(const PriorKind& prior);
PriorKind prior_from_json(const json& j);

json to_json(const FeatureSpaceVariant& v);
FeatureSpaceVariant variant_from_json(const json& j);

json to_json(const LearnerConfig& config);
LearnerConfig learner_config_from_json(const json& j);

// Keys missing from `j` keep the defaults of `base`. `teacher`, `mismatch` and
// `feedback` accept a single value or an array.
json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const json& j, const ExperimentConfig& base = {});
ExperimentConfig load_experiment_config(const std::string& path);

json to_json(const AggregateCurve& curve);
json results_to_json(const ExperimentResult& result);

// Resolved config plus per-cell row counts.
json manifest_json(const ExperimentResult& result);

} // namespace teachsim
