#pragma once

#include <optional>
#include <string>

#include "teachsim/env.hpp"
#include "teachsim/learner.hpp"

namespace teachsim {

struct FeedbackMode {
  enum class Kind { None, Partial, Full };
  Kind kind = Kind::None;
  double fixed_speed = 0.5;  // Partial only

  static FeedbackMode none() { return {Kind::None, 0.5}; }
  static FeedbackMode partial(double speed) { return {Kind::Partial, speed}; }
  static FeedbackMode full() { return {Kind::Full, 0.5}; }

  bool enabled() const { return kind != Kind::None; }
  std::string label() const;  // "none" | "partial" | "full"
  void validate(double v_max) const;

  bool operator==(const FeedbackMode&) const = default;
};

FeedbackMode parse_feedback_mode(const std::string& name, double fixed_speed = 0.5);

struct SpeedLimits {
  double v_max = 1.0;
  double v_min = 0.05;
};

struct Feedback {
  int target_bin = 0;
  double speed = 0.0;
  double confidence = 0.0;  // marginal p(a_hat | b, s)
  FeedbackMode::Kind mode = FeedbackMode::Kind::Full;

  bool operator==(const Feedback&) const = default;
};

struct Prediction {
  int bin = 0;
  double confidence = 0.0;
};

// a_hat = argmax_a sum_i w_i p(a | s, theta_i); lowest bin id on ties.
Prediction predict_action(const Belief& belief, const Environment& env, const ObjectState& object,
                          double beta);
Prediction predict_action(const Belief& belief, const ObservationModel& model, int object_id);

// Marginal p(a | b, s) for every bin.
std::vector<double> action_marginals(const Belief& belief, const ObservationModel& model, int object_id);

// Placement outcome s' = f(s, a): the object ends up in the bin.
struct PlacementState {
  int object_id = 0;
  int bin_id = 0;
  bool operator==(const PlacementState&) const = default;
};

PlacementState predict_state(const Environment& env, const ObjectState& object, int bin_id);

// Inverse dynamics: the action that produced a placement.
int recover_action(const Environment& env, const PlacementState& state);

// v = clamp(v_max * p(s'|s,a) * confidence, v_min, v_max)
double feedback_speed(double confidence, double transition_prob, double v_max, double v_min);

std::optional<Feedback> generate_feedback(const Belief& belief, const Environment& env,
                                          const ObjectState& object, double beta,
                                          const FeedbackMode& mode, const SpeedLimits& limits = {});
std::optional<Feedback> generate_feedback(const Belief& belief, const ObservationModel& model,
                                          int object_id, const FeedbackMode& mode,
                                          const SpeedLimits& limits = {});

} // namespace teachsim
