#include "teachsim/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace teachsim {

namespace {

Prediction argmax_marginal(const std::vector<double>& marginal) {
  const auto it = std::max_element(marginal.begin(), marginal.end());
  return {static_cast<int>(it - marginal.begin()), *it};
}

Feedback from_prediction(const Prediction& p, const FeedbackMode& mode, const SpeedLimits& limits) {
  const double speed = mode.kind == FeedbackMode::Kind::Partial
                           ? mode.fixed_speed
                           : feedback_speed(p.confidence, 1.0, limits.v_max, limits.v_min);
  return {p.bin, speed, p.confidence, mode.kind};
}

} // namespace

std::string FeedbackMode::label() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Partial: return "partial";
    case Kind::Full: return "full";
  }
  return "none";
}

void FeedbackMode::validate(double v_max) const {
  if (kind == Kind::Partial && !(fixed_speed > 0.0 && fixed_speed <= v_max))
    throw std::invalid_argument("partial feedback speed must lie in (0, v_max]");
}

FeedbackMode parse_feedback_mode(const std::string& name, double fixed_speed) {
  if (name == "none") return FeedbackMode::none();
  if (name == "full") return FeedbackMode::full();
  if (name == "partial") return FeedbackMode::partial(fixed_speed);
  throw std::invalid_argument("unknown feedback mode '" + name + "'");
}

Prediction predict_action(const Belief& belief, const Environment& env, const ObjectState& object,
                          double beta) {
  if (object.id < 0 || static_cast<std::size_t>(object.id) >= env.n_objects() || !(env.object(object.id) == object))
    throw std::invalid_argument("object is not a member of this environment");
  std::vector<double> marginal(env.n_bins(), 0.0);
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const double w = belief.weight(i);
    if (w == 0.0) continue;
    const auto l = action_likelihoods(env, object.id, belief.theta(i), beta);
    for (std::size_t a = 0; a < marginal.size(); ++a) marginal[a] += w * l[a];
  }
  return argmax_marginal(marginal);
}

std::vector<double> action_marginals(const Belief& belief, const ObservationModel& model, int object_id) {
  if (!model.compatible(belief))
    throw std::invalid_argument("belief and observation model use different theta sets");
  model.env().object(object_id);
  std::vector<double> marginal(model.n_bins(), 0.0);
  const auto& logw = belief.log_weights();
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (logw[i] == -std::numeric_limits<double>::infinity()) continue;
    const auto l = model.log_likelihoods(i, object_id);
    for (std::size_t a = 0; a < marginal.size(); ++a) marginal[a] += std::exp(logw[i] + l[a]);
  }
  return marginal;
}

Prediction predict_action(const Belief& belief, const ObservationModel& model, int object_id) {
  return argmax_marginal(action_marginals(belief, model, object_id));
}

PlacementState predict_state(const Environment& env, const ObjectState& object, int bin_id) {
  env.object(object.id);
  env.bin(bin_id);
  return {object.id, bin_id};
}

int recover_action(const Environment& env, const PlacementState& state) {
  return env.bin(state.bin_id).id;
}

double feedback_speed(double confidence, double transition_prob, double v_max, double v_min) {
  if (!(confidence >= 0.0 && confidence <= 1.0) || !(transition_prob >= 0.0 && transition_prob <= 1.0))
    throw std::invalid_argument("feedback speed inputs must be probabilities");
  if (!(v_min < v_max)) throw std::invalid_argument("feedback speed needs v_min < v_max");
  return std::clamp(v_max * transition_prob * confidence, v_min, v_max);
}

std::optional<Feedback> generate_feedback(const Belief& belief, const Environment& env,
                                          const ObjectState& object, double beta,
                                          const FeedbackMode& mode, const SpeedLimits& limits) {
  if (!mode.enabled()) return std::nullopt;
  mode.validate(limits.v_max);
  return from_prediction(predict_action(belief, env, object, beta), mode, limits);
}

std::optional<Feedback> generate_feedback(const Belief& belief, const ObservationModel& model,
                                          int object_id, const FeedbackMode& mode,
                                          const SpeedLimits& limits) {
  if (!mode.enabled()) return std::nullopt;
  mode.validate(limits.v_max);
  return from_prediction(predict_action(belief, model, object_id), mode, limits);
}

} // namespace teachsim
