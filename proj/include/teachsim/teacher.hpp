#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teachsim/feedback.hpp"
#include "teachsim/learner.hpp"
#include "teachsim/metrics.hpp"
#include "teachsim/random.hpp"

namespace teachsim {

// A demonstration is always a correct placement: bin == a*(object).
struct DemoChoice {
  int object = 0;
  int bin = 0;
  bool operator==(const DemoChoice&) const = default;
};

DemoChoice correct_demo(const Environment& env, int object_id);

// How the iterative teacher decides that feedback "agrees" with what it
// already believes (win-stay-lose-shift).
//
//   BeliefPrediction  compare with the feedback the tracked belief itself
//                     would produce (marginal argmax and its speed)
//   MapParticle       compare with the MAP particle's most likely bin and
//                     v_max * p(bin | s, theta_MAP)
enum class GateRule { BeliefPrediction, MapParticle };

std::string to_string(GateRule g);
GateRule parse_gate_rule(const std::string& name);

struct TeacherParams {
  double beta = 20.0;         // assumed learner rationality
  double v_max = 1.0;
  double v_min = 0.05;
  double v_var = 0.0025;      // variance of the speed likelihood
  double gate_tolerance = 0.05;  // fraction of v_max
  GateRule gate = GateRule::BeliefPrediction;

  void validate() const;
};

// log N(v; mean, var)
double log_gaussian_density(double v, double mean, double var);

// ---------------------------------------------------------------------------
// Iterative teacher: a single tracked estimate of the learner's belief.

struct IterativeTeacherState {
  ObservationModelPtr model;
  Belief tracked;
  TeacherParams params;
};

IterativeTeacherState make_iterative_teacher(ObservationModelPtr model, const TeacherParams& params,
                                             const PriorKind& prior = UniformPrior{});

// True when the feedback contradicts the teacher's current estimate and must be
// incorporated.
bool feedback_gate_open(const IterativeTeacherState& state, int object_id, const Feedback& feedback);

// Reweights every particle by p(x | theta, s) N(v; v_max p(x | theta, s), v_var)
// when the gate is open; returns the state unchanged otherwise.
IterativeTeacherState iterative_observe_feedback(const IterativeTeacherState& state, int object_id,
                                                 const Feedback& feedback);

// Applies the learner's own Bayes update to the tracked belief.
IterativeTeacherState iterative_observe_demo(const IterativeTeacherState& state, const DemoChoice& demo);

// g(b') for the tracked belief after demonstrating each candidate.
double performance_after_demo(const Belief& belief, const ObservationModel& model, const DemoChoice& demo);

// argmax over remaining objects of g(b_{t+1}); lowest id among scores within
// 1e-12 of the best.
DemoChoice iterative_select(const IterativeTeacherState& state, const std::set<int>& remaining);

// ---------------------------------------------------------------------------
// Uncertainty-aware teacher: a weighted set of learner models, each carrying
// its own evolved copy of that learner's belief.

struct LearnerHypothesis {
  std::string label;
  FeatureSpaceVariant variant;
  PriorKind prior;
  ObservationModelPtr model;
  Belief evolved;
  double log_weight = 0.0;
};

struct UATeacherState {
  std::vector<LearnerHypothesis> hypotheses;
  std::size_t default_index = 0;
  TeacherParams params;

  std::vector<double> weights() const;
  std::size_t map_hypothesis() const;
};

// Builds a normalized state from unnormalized hypothesis weights.
UATeacherState make_ua_teacher(std::vector<LearnerHypothesis> hypotheses, std::size_t default_index,
                               const TeacherParams& params);

// log p(x, v | b_h, s): marginal probability of the target times the Gaussian speed density.
double feedback_log_likelihood(const Belief& belief, const ObservationModel& model, int object_id,
                               const Feedback& feedback, const TeacherParams& params);

// Particle-filter step: reweight hypotheses by the feedback (if any), then
// advance every evolved belief with the demonstration.
UATeacherState ua_observe(const UATeacherState& state, int object_id, const DemoChoice& demo,
                          const std::optional<Feedback>& feedback);

// argmax over remaining objects of sum_h w_h g(b^h_{t+1}); lowest id on ties.
DemoChoice ua_select(const UATeacherState& state, const std::set<int>& remaining);

// Uniform draw from `remaining`, paired with the correct bin.
DemoChoice random_select(Rng& rng, const Environment& env, const std::set<int>& remaining);

double teacher_estimated_performance(const IterativeTeacherState& state);
double teacher_estimated_performance(const UATeacherState& state);

// ---------------------------------------------------------------------------
// Learner-model construction shared by the harness and the teachers.

enum class MismatchCondition { None, Prior, Feature, Generalization };

std::string to_string(MismatchCondition c);
MismatchCondition parse_mismatch(const std::string& name);

// Observation models for one environment, one per feature-space variant. The
// theta set of a variant depends only on (seed, variant), so a teacher and a
// learner that assume the same variant reason over identical particles.
class ModelProvider {
public:
  ModelProvider(std::shared_ptr<const Environment> env, double beta, std::size_t n_particles,
                std::uint64_t seed, ThetaSource source = ThetaSource::Sampled);

  ObservationModelPtr model(const FeatureSpaceVariant& variant);
  const std::shared_ptr<const Environment>& env() const { return env_; }
  double beta() const { return beta_; }

private:
  std::shared_ptr<const Environment> env_;
  double beta_;
  std::size_t n_particles_;
  std::uint64_t seed_;
  ThetaSource source_;
  std::map<std::string, ObservationModelPtr> cache_;
};

std::uint64_t variant_seed(std::uint64_t seed, const FeatureSpaceVariant& variant);

struct HypothesisOptions {
  std::size_t p = 5;                       // biased alternatives in the prior condition
  std::vector<double> learner_theta_prime; // the bias the real learner has (prior condition)
  double beta_prime = 50.0;
  double default_weight_ratio = 10.0;
  std::uint64_t seed = 0;                  // for the random bias directions
};

UATeacherState build_ua_hypotheses(MismatchCondition condition, ModelProvider& provider,
                                   const HypothesisOptions& options, const TeacherParams& params);

} // namespace teachsim
