#include "teachsim/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace teachsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> linear_weights(const Belief& b) { return b.weights(); }

// g(b') for every candidate (object, a*(object)). Linear arithmetic on the
// cached correct-bin likelihoods; falls back to log space if the evidence
// underflows.
std::vector<double> scores_after_correct_demo(const Belief& belief, const ObservationModel& model,
                                              const std::set<int>& remaining) {
  const std::vector<double> w = linear_weights(belief);
  std::vector<double> out;
  out.reserve(remaining.size());
  for (int o : remaining) {
    double den = 0.0, num = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double m = w[i] * model.correct_likelihood(i, o);
      den += m;
      num += m * model.accuracy(i);
    }
    if (den > std::numeric_limits<double>::min() * 1e3)
      out.push_back(num / den);
    else
      out.push_back(performance_after_demo(belief, model, {o, model.correct_bin(o)}));
  }
  return out;
}

// Scores this close count as ties: candidates whose correct-bin likelihoods
// saturate produce equal scores up to rounding.
constexpr double kTieTolerance = 1e-12;

DemoChoice argmax_candidate(const std::set<int>& remaining, const std::vector<double>& scores,
                            const ObservationModel& model) {
  const double best = *std::max_element(scores.begin(), scores.end());
  std::size_t k = 0;
  for (auto it = remaining.begin(); it != remaining.end(); ++it, ++k)
    if (scores[k] >= best - kTieTolerance) return {*it, model.correct_bin(*it)};
  throw std::logic_error("no candidate reached the maximum score");
}

void require_candidates(const std::set<int>& remaining, const Environment& env) {
  if (remaining.empty()) throw std::invalid_argument("no remaining objects to select from");
  for (int o : remaining) env.object(o);
}

} // namespace

DemoChoice correct_demo(const Environment& env, int object_id) {
  return {object_id, optimal_action(env, env.theta_star(), object_id)};
}

std::string to_string(GateRule g) {
  return g == GateRule::BeliefPrediction ? "belief" : "map";
}

GateRule parse_gate_rule(const std::string& name) {
  if (name == "belief") return GateRule::BeliefPrediction;
  if (name == "map") return GateRule::MapParticle;
  throw std::invalid_argument("unknown gate rule '" + name + "'");
}

void TeacherParams::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("teacher beta must be >= 0");
  if (!(v_min < v_max) || !(v_min >= 0.0)) throw std::invalid_argument("need 0 <= v_min < v_max");
  if (!(v_var > 0.0)) throw std::invalid_argument("v_var must be > 0");
  if (!(gate_tolerance >= 0.0)) throw std::invalid_argument("gate tolerance must be >= 0");
}

double log_gaussian_density(double v, double mean, double var) {
  const double diff = v - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
}

// ---------------------------------------------------------------------------

IterativeTeacherState make_iterative_teacher(ObservationModelPtr model, const TeacherParams& params,
                                             const PriorKind& prior) {
  params.validate();
  if (!model) throw std::invalid_argument("iterative teacher needs an observation model");
  Belief b = make_prior(model->theta_set(), prior);
  return {std::move(model), std::move(b), params};
}

bool feedback_gate_open(const IterativeTeacherState& state, int object_id, const Feedback& feedback) {
  const auto& p = state.params;
  const ObservationModel& model = *state.model;
  if (p.gate == GateRule::MapParticle) {
    const std::size_t map = state.tracked.map_index();
    const auto l = model.log_likelihoods(map, object_id);
    const auto best = std::max_element(l.begin(), l.end());
    const int map_bin = static_cast<int>(best - l.begin());
    const double map_speed = p.v_max * std::exp(*best);
    return !(feedback.target_bin == map_bin &&
             std::abs(map_speed - feedback.speed) <= p.gate_tolerance * p.v_max);
  }
  const Prediction expected = predict_action(state.tracked, model, object_id);
  const double expected_speed = feedback_speed(std::min(expected.confidence, 1.0), 1.0, p.v_max, p.v_min);
  return !(feedback.target_bin == expected.bin &&
           std::abs(expected_speed - feedback.speed) <= p.gate_tolerance * p.v_max);
}

IterativeTeacherState iterative_observe_feedback(const IterativeTeacherState& state, int object_id,
                                                 const Feedback& feedback) {
  state.model->env().object(object_id);
  state.model->env().bin(feedback.target_bin);
  if (!feedback_gate_open(state, object_id, feedback)) return state;

  const auto& p = state.params;
  std::vector<double> logw = state.tracked.log_weights();
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double log_px = state.model->log_likelihood(i, object_id, feedback.target_bin);
    logw[i] += log_px + log_gaussian_density(feedback.speed, p.v_max * std::exp(log_px), p.v_var);
  }
  if (!std::isfinite(log_sum_exp(logw)))
    throw DegeneratePosterior("tracked belief mass vanished on feedback for object " +
                              std::to_string(object_id) + " (target bin " +
                              std::to_string(feedback.target_bin) + ")");
  IterativeTeacherState next = state;
  next.tracked = Belief::from_log_weights(state.tracked.theta_set(), std::move(logw));
  return next;
}

IterativeTeacherState iterative_observe_demo(const IterativeTeacherState& state, const DemoChoice& demo) {
  IterativeTeacherState next = state;
  next.tracked = update_belief(state.tracked, *state.model, demo.object, demo.bin);
  return next;
}

double performance_after_demo(const Belief& belief, const ObservationModel& model, const DemoChoice& demo) {
  if (!model.compatible(belief))
    throw std::invalid_argument("belief and observation model use different theta sets");
  const auto& logw = belief.log_weights();
  std::vector<double> t(logw.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = logw[i] + model.log_likelihood(i, demo.object, demo.bin);
  const double z = log_sum_exp(t);
  if (!std::isfinite(z)) return 0.0;
  double g = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] != kNegInf) g += std::exp(t[i] - z) * model.accuracy(i);
  return g;
}

DemoChoice iterative_select(const IterativeTeacherState& state, const std::set<int>& remaining) {
  require_candidates(remaining, state.model->env());
  return argmax_candidate(remaining, scores_after_correct_demo(state.tracked, *state.model, remaining),
                          *state.model);
}

// ---------------------------------------------------------------------------

std::vector<double> UATeacherState::weights() const {
  std::vector<double> w(hypotheses.size());
  for (std::size_t h = 0; h < w.size(); ++h) w[h] = std::exp(hypotheses[h].log_weight);
  return w;
}

std::size_t UATeacherState::map_hypothesis() const {
  std::size_t best = 0;
  for (std::size_t h = 1; h < hypotheses.size(); ++h)
    if (hypotheses[h].log_weight > hypotheses[best].log_weight) best = h;
  return best;
}

UATeacherState make_ua_teacher(std::vector<LearnerHypothesis> hypotheses, std::size_t default_index,
                               const TeacherParams& params) {
  params.validate();
  if (hypotheses.empty()) throw std::invalid_argument("uncertainty-aware teacher needs >= 1 hypothesis");
  if (default_index >= hypotheses.size()) throw std::invalid_argument("default hypothesis out of range");
  std::vector<double> lw;
  for (const auto& h : hypotheses) {
    if (!h.model || !h.model->compatible(h.evolved))
      throw std::invalid_argument("hypothesis belief does not match its observation model");
    lw.push_back(h.log_weight);
  }
  const double z = log_sum_exp(lw);
  if (!std::isfinite(z)) throw std::invalid_argument("hypothesis weights must have positive mass");
  for (auto& h : hypotheses) h.log_weight -= z;
  return {std::move(hypotheses), default_index, params};
}

double feedback_log_likelihood(const Belief& belief, const ObservationModel& model, int object_id,
                               const Feedback& feedback, const TeacherParams& params) {
  const auto marginal = action_marginals(belief, model, object_id);
  const double px = marginal.at(static_cast<std::size_t>(feedback.target_bin));
  if (px <= 0.0) return kNegInf;
  return std::log(px) + log_gaussian_density(feedback.speed, params.v_max * px, params.v_var);
}

UATeacherState ua_observe(const UATeacherState& state, int object_id, const DemoChoice& demo,
                          const std::optional<Feedback>& feedback) {
  UATeacherState next = state;
  if (feedback) {
    std::vector<double> lw(next.hypotheses.size());
    for (std::size_t h = 0; h < lw.size(); ++h) {
      auto& hyp = next.hypotheses[h];
      lw[h] = hyp.log_weight == kNegInf
                  ? kNegInf
                  : hyp.log_weight + feedback_log_likelihood(hyp.evolved, *hyp.model, object_id, *feedback,
                                                             state.params);
    }
    const double z = log_sum_exp(lw);
    if (!std::isfinite(z))
      throw DegeneratePosterior("every learner hypothesis lost its mass on feedback for object " +
                                std::to_string(object_id));
    for (std::size_t h = 0; h < lw.size(); ++h) next.hypotheses[h].log_weight = lw[h] - z;
  }
  for (auto& hyp : next.hypotheses) hyp.evolved = update_belief(hyp.evolved, *hyp.model, demo.object, demo.bin);
  return next;
}

DemoChoice ua_select(const UATeacherState& state, const std::set<int>& remaining) {
  const ObservationModel& ref = *state.hypotheses.front().model;
  require_candidates(remaining, ref.env());
  std::vector<double> total(remaining.size(), 0.0);
  for (const auto& hyp : state.hypotheses) {
    const double w = std::exp(hyp.log_weight);
    if (w == 0.0) continue;
    const auto s = scores_after_correct_demo(hyp.evolved, *hyp.model, remaining);
    for (std::size_t k = 0; k < s.size(); ++k) total[k] += w * s[k];
  }
  return argmax_candidate(remaining, total, ref);
}

DemoChoice random_select(Rng& rng, const Environment& env, const std::set<int>& remaining) {
  require_candidates(remaining, env);
  std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
  auto it = remaining.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(pick(rng)));
  return correct_demo(env, *it);
}

double teacher_estimated_performance(const IterativeTeacherState& state) {
  return learner_performance(state.tracked, *state.model);
}

double teacher_estimated_performance(const UATeacherState& state) {
  double g = 0.0;
  for (const auto& hyp : state.hypotheses) {
    const double w = std::exp(hyp.log_weight);
    if (w != 0.0) g += w * learner_performance(hyp.evolved, *hyp.model);
  }
  return g;
}

// ---------------------------------------------------------------------------

std::string to_string(MismatchCondition c) {
  switch (c) {
    case MismatchCondition::None: return "none";
    case MismatchCondition::Prior: return "prior";
    case MismatchCondition::Feature: return "feature";
    case MismatchCondition::Generalization: return "generalization";
  }
  return "none";
}

MismatchCondition parse_mismatch(const std::string& name) {
  if (name == "none") return MismatchCondition::None;
  if (name == "prior") return MismatchCondition::Prior;
  if (name == "feature") return MismatchCondition::Feature;
  if (name == "generalization") return MismatchCondition::Generalization;
  throw std::invalid_argument("unknown mismatch condition '" + name + "'");
}

std::uint64_t variant_seed(std::uint64_t seed, const FeatureSpaceVariant& variant) {
  return derive_seed(seed, {static_cast<std::uint64_t>(variant.kind()), variant.feature_dim(),
                            variant.dropped_index(), variant.n_bins()});
}

ModelProvider::ModelProvider(std::shared_ptr<const Environment> env, double beta, std::size_t n_particles,
                             std::uint64_t seed, ThetaSource source)
    : env_(std::move(env)), beta_(beta), n_particles_(n_particles), seed_(seed), source_(source) {
  if (source_ == ThetaSource::File) throw std::invalid_argument("model provider samples its own theta sets");
}

ObservationModelPtr ModelProvider::model(const FeatureSpaceVariant& variant) {
  const std::string key = variant.label() + "/" + std::to_string(variant.feature_dim()) + "/" +
                          std::to_string(variant.n_bins());
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const std::uint64_t s = variant_seed(seed_, variant);
  ThetaSetPtr thetas = source_ == ThetaSource::Study ? study_theta_set(variant, s, n_particles_)
                                                     : sample_theta_set(variant, n_particles_, s);
  auto m = std::make_shared<const ObservationModel>(env_, std::move(thetas), beta_);
  cache_.emplace(key, m);
  return m;
}

UATeacherState build_ua_hypotheses(MismatchCondition condition, ModelProvider& provider,
                                   const HypothesisOptions& options, const TeacherParams& params) {
  const Environment& env = *provider.env();
  const std::size_t d = env.feature_dim();
  const auto shared = FeatureSpaceVariant::shared(d);
  const double alt_lw = 0.0;
  const double default_lw = std::log(options.default_weight_ratio);

  auto hypothesis = [&](std::string label, FeatureSpaceVariant v, PriorKind prior, double lw) {
    auto model = provider.model(v);
    Belief b = make_prior(model->theta_set(), prior);
    return LearnerHypothesis{std::move(label), v, std::move(prior), std::move(model), std::move(b), lw};
  };

  std::vector<LearnerHypothesis> hyps;
  hyps.push_back(hypothesis("default", shared, UniformPrior{}, default_lw));
  switch (condition) {
    case MismatchCondition::None: break;
    case MismatchCondition::Prior: {
      if (options.p == 0) throw std::invalid_argument("prior condition needs p >= 1");
      if (options.learner_theta_prime.size() != d)
        throw std::invalid_argument("prior condition needs the learner's bias direction");
      Rng rng(derive_seed(options.seed, {0x70726f72ULL}));
      hyps.push_back(hypothesis("biased0", shared, BiasedPrior{options.learner_theta_prime, options.beta_prime}, alt_lw));
      for (std::size_t k = 1; k < options.p; ++k)
        hyps.push_back(hypothesis("biased" + std::to_string(k), shared,
                                  BiasedPrior{sample_unit_sphere(rng, d), options.beta_prime}, alt_lw));
      break;
    }
    case MismatchCondition::Feature:
      for (std::size_t k = 0; k < d; ++k) {
        const auto v = FeatureSpaceVariant::missing_feature(d, k);
        hyps.push_back(hypothesis(v.label(), v, UniformPrior{}, alt_lw));
      }
      break;
    case MismatchCondition::Generalization: {
      const auto v = FeatureSpaceVariant::per_bin(env.n_bins(), d);
      hyps.push_back(hypothesis(v.label(), v, UniformPrior{}, alt_lw));
      break;
    }
  }
  return make_ua_teacher(std::move(hyps), 0, params);
}

} // namespace teachsim
