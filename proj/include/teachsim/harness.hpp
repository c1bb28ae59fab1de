#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "teachsim/env.hpp"
#include "teachsim/feedback.hpp"
#include "teachsim/metrics.hpp"
#include "teachsim/teacher.hpp"

namespace teachsim {

enum class TaskKind { Random, Ring };
enum class TeacherKind { Random, Iterative, UncertaintyAware };

std::string to_string(TaskKind t);
std::string to_string(TeacherKind t);
TaskKind parse_task(const std::string& name);
TeacherKind parse_teacher(const std::string& name);

// Demonstration order: chosen by the teacher, or k independent uniformly
// random orders per trial (the teacher then only tracks).
struct SequenceSource {
  bool random_sequences = false;
  std::size_t k = 1;

  std::size_t runs_per_trial() const { return random_sequences ? k : 1; }
  std::string label() const;
};

struct ExperimentConfig {
  std::string name = "custom";
  TaskKind task = TaskKind::Random;
  std::size_t n_bins = 3;
  std::size_t n_objects = 50;
  std::size_t d = 3;
  RingLayout ring_layout;

  double beta = 20.0;
  double beta_prime = 50.0;
  double v_max = 1.0;
  double v_min = 0.05;
  double v_var = 0.0025;

  std::vector<TeacherKind> teachers{TeacherKind::Iterative};
  std::vector<MismatchCondition> mismatches{MismatchCondition::Prior};
  std::vector<FeedbackMode> feedbacks{FeedbackMode::none(), FeedbackMode::full()};

  std::size_t horizon = 30;
  std::size_t trials = 100;
  SequenceSource sequence_source;
  std::uint64_t master_seed = 0;

  std::size_t n_particles = 1000;
  ThetaSource theta_source = ThetaSource::Sampled;
  std::size_t ua_p = 5;
  GateRule gate = GateRule::BeliefPrediction;

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  // Object count of the generated task (ring tasks derive it from the layout).
  std::size_t task_objects() const;
  TeacherParams teacher_params() const;
};

// fig2 | fig3 | study-biased
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct Cell {
  TeacherKind teacher = TeacherKind::Iterative;
  MismatchCondition mismatch = MismatchCondition::Prior;
  FeedbackMode feedback = FeedbackMode::none();

  std::string label() const;
};

// Cross product in (mismatch, teacher, feedback) order.
std::vector<Cell> cells(const ExperimentConfig& config);

struct TraceStep {
  DemoChoice demo;
  std::optional<Feedback> feedback;
  PerformancePoint point;
};

struct TrialTrace {
  std::uint64_t env_fingerprint = 0;
  std::vector<TraceStep> steps;
};

// Every teaching run of one trial in one cell, and the per-iteration mean over
// those runs (the trial's contribution to the aggregate).
struct TrialResult {
  std::vector<TrialTrace> runs;
  std::vector<PerformancePoint> curve;
};

// Error raised while running a trial, tagged with where it happened.
class TrialError : public std::runtime_error {
public:
  TrialError(std::size_t trial, const std::string& what)
      : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial) {}
  std::size_t trial() const { return trial_; }

private:
  std::size_t trial_;
};

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_index);

// Environment, learner models and bias direction shared by every cell of one trial.
struct TrialContext {
  std::size_t trial_index = 0;
  std::uint64_t seed = 0;
  std::shared_ptr<const Environment> env;
  std::shared_ptr<ModelProvider> provider;
  std::vector<double> learner_theta_prime;
};

TrialContext make_trial_context(const ExperimentConfig& config, std::size_t trial_index);

// The learner's actual feature space and prior under a mismatch condition.
FeatureSpaceVariant learner_variant(const ExperimentConfig& config, MismatchCondition mismatch);
PriorKind learner_prior(const ExperimentConfig& config, MismatchCondition mismatch,
                        const std::vector<double>& theta_prime);

TrialResult run_trial(const ExperimentConfig& config, const Cell& cell, TrialContext& context);
TrialResult run_trial(const ExperimentConfig& config, const Cell& cell, std::size_t trial_index);

struct CellResult {
  Cell cell;
  std::vector<TrialResult> trials;
  AggregateCurve curve;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;
};

// Runs every trial (on `jobs` worker threads) and aggregates per cell. The
// output does not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

// experiment,condition,teacher,feedback,trial,iteration,true_g,estimate_g,discrepancy
void write_curves_csv(std::ostream& out, const ExperimentResult& result);
// per-cell mean and standard error per iteration
void write_aggregate_csv(std::ostream& out, const ExperimentResult& result);
// per-run demonstration, feedback and performance
void write_traces_csv(std::ostream& out, const ExperimentResult& result);
void write_results_json(std::ostream& out, const ExperimentResult& result);

// Writes curves/aggregate/traces (csv) or results.json (json) plus manifest.json into `dir`.
void write_outputs(const std::string& dir, const ExperimentResult& result, const std::string& format);

const CellResult& find_cell(const ExperimentResult& result, TeacherKind teacher, MismatchCondition mismatch,
                            FeedbackMode::Kind feedback);

} // namespace teachsim
