#include "teachsim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace teachsim {

PerformancePoint make_performance_point(std::size_t iteration, double true_g, double estimate_g) {
  return {iteration, true_g, estimate_g, mental_model_discrepancy(estimate_g, true_g)};
}

double learner_performance(const Belief& belief, const Environment& env, double beta) {
  const std::size_t n = env.n_objects();
  std::vector<int> correct(n);
  for (std::size_t o = 0; o < n; ++o) correct[o] = optimal_action(env, env.theta_star(), static_cast<int>(o));

  double g = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const double w = belief.weight(i);
    if (w == 0.0) continue;
    double acc = 0.0;
    for (std::size_t o = 0; o < n; ++o)
      acc += action_likelihoods(env, static_cast<int>(o), belief.theta(i), beta)[static_cast<std::size_t>(correct[o])];
    g += w * acc / static_cast<double>(n);
  }
  return g;
}

double learner_performance(const Belief& belief, const ObservationModel& model) {
  if (!model.compatible(belief))
    throw std::invalid_argument("belief and observation model use different theta sets");
  double g = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) g += belief.weight(i) * model.accuracy(i);
  return g;
}

double learner_performance_on(const Belief& belief, const ObservationModel& model,
                              std::span<const int> object_ids) {
  if (!model.compatible(belief))
    throw std::invalid_argument("belief and observation model use different theta sets");
  double g = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const double w = belief.weight(i);
    if (w != 0.0) g += w * model.accuracy_on(i, object_ids);
  }
  return g;
}

double mental_model_discrepancy(double estimate, double true_g) { return estimate - true_g; }

MeanStderr mean_stderr(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

AggregateCurve aggregate(const std::vector<std::vector<PerformancePoint>>& curves) {
  if (curves.empty()) throw std::invalid_argument("aggregate needs at least one series");
  const std::size_t len = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != len) throw std::invalid_argument("aggregate: ragged series");

  AggregateCurve out;
  out.trials = curves.size();
  std::vector<double> t(curves.size()), e(curves.size()), d(curves.size()), a(curves.size());
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t j = 0; j < curves.size(); ++j) {
      const auto& p = curves[j][k];
      if (p.iteration != curves.front()[k].iteration)
        throw std::invalid_argument("aggregate: series disagree on iteration numbering");
      t[j] = p.true_g;
      e[j] = p.teacher_estimate_g;
      d[j] = p.discrepancy;
      a[j] = std::abs(p.discrepancy);
    }
    const auto mt = mean_stderr(t), me = mean_stderr(e), md = mean_stderr(d);
    out.iteration.push_back(curves.front()[k].iteration);
    out.mean_true_g.push_back(mt.mean);
    out.stderr_true_g.push_back(mt.std_error);
    out.mean_estimate_g.push_back(me.mean);
    out.stderr_estimate_g.push_back(me.std_error);
    out.mean_discrepancy.push_back(md.mean);
    out.stderr_discrepancy.push_back(md.std_error);
    out.mean_abs_discrepancy.push_back(mean_stderr(a).mean);
  }
  return out;
}

} // namespace teachsim
