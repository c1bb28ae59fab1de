#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "teachsim/env.hpp"
#include "teachsim/learner.hpp"

namespace teachsim {

struct PerformancePoint {
  std::size_t iteration = 0;
  double true_g = 0.0;
  double teacher_estimate_g = 0.0;
  double discrepancy = 0.0;  // teacher_estimate_g - true_g
};

PerformancePoint make_performance_point(std::size_t iteration, double true_g, double estimate_g);

// Expected soft classification accuracy of a belief:
//   g(b) = E_{theta~b} [ (1/|S|) sum_s p(a*(s) | s, theta) ]
// with a*(s) the ground-truth bin and S every object of the environment.
double learner_performance(const Belief& belief, const Environment& env, double beta);
double learner_performance(const Belief& belief, const ObservationModel& model);

// g restricted to a subset of objects (e.g. the inner or outer ring).
double learner_performance_on(const Belief& belief, const ObservationModel& model,
                              std::span<const int> object_ids);

// Positive when the estimate overshoots.
double mental_model_discrepancy(double estimate, double true_g);

struct AggregateCurve {
  std::vector<std::size_t> iteration;
  std::vector<double> mean_true_g;
  std::vector<double> stderr_true_g;
  std::vector<double> mean_estimate_g;
  std::vector<double> stderr_estimate_g;
  std::vector<double> mean_discrepancy;
  std::vector<double> stderr_discrepancy;
  std::vector<double> mean_abs_discrepancy;
  std::size_t trials = 0;

  std::size_t size() const { return iteration.size(); }
};

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean and standard error (sample stddev / sqrt(n)); stderr is 0 for n == 1.
MeanStderr mean_stderr(std::span<const double> values);

// Pointwise aggregation of equal-length series. Throws std::invalid_argument on
// an empty or ragged input.
AggregateCurve aggregate(const std::vector<std::vector<PerformancePoint>>& curves);

} // namespace teachsim
