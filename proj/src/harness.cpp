#include "teachsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <variant>

#include "teachsim/serialize.hpp"

namespace teachsim {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string feedback_label(const FeedbackMode& m) {
  if (m.kind == FeedbackMode::Kind::Partial) return "partial(" + fmt_double(m.fixed_speed) + ")";
  return m.label();
}

// Teacher state for one run. The random teacher tracks exactly like the
// iterative one; only its selection differs.
using TeacherState = std::variant<IterativeTeacherState, UATeacherState>;

double estimate(const TeacherState& t) {
  return std::visit([](const auto& s) { return teacher_estimated_performance(s); }, t);
}

} // namespace

std::string to_string(TaskKind t) { return t == TaskKind::Random ? "random" : "ring"; }

std::string to_string(TeacherKind t) {
  switch (t) {
    case TeacherKind::Random: return "random";
    case TeacherKind::Iterative: return "iterative";
    case TeacherKind::UncertaintyAware: return "ua";
  }
  return "random";
}

TaskKind parse_task(const std::string& name) {
  if (name == "random") return TaskKind::Random;
  if (name == "ring") return TaskKind::Ring;
  throw std::invalid_argument("unknown task '" + name + "'");
}

TeacherKind parse_teacher(const std::string& name) {
  if (name == "random") return TeacherKind::Random;
  if (name == "iterative") return TeacherKind::Iterative;
  if (name == "ua" || name == "uncertainty-aware") return TeacherKind::UncertaintyAware;
  throw std::invalid_argument("unknown teacher '" + name + "'");
}

std::string SequenceSource::label() const {
  return random_sequences ? "random-sequences(" + std::to_string(k) + ")" : "teacher-selected";
}

std::size_t ExperimentConfig::task_objects() const {
  if (task == TaskKind::Ring)
    return 3 * static_cast<std::size_t>(ring_layout.inner_per_bin + ring_layout.outer_per_bin);
  return n_objects;
}

TeacherParams ExperimentConfig::teacher_params() const {
  TeacherParams p;
  p.beta = beta;
  p.v_max = v_max;
  p.v_min = v_min;
  p.v_var = v_var;
  p.gate = gate;
  return p;
}

void ExperimentConfig::validate() const {
  if (task == TaskKind::Random && (n_bins < 2 || n_objects < 1 || d < 1))
    throw std::invalid_argument("random task needs n_bins >= 2, n_objects >= 1, d >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (horizon < 1 || horizon > task_objects())
    throw std::invalid_argument("horizon must lie in [1, number of objects]");
  if (!(beta >= 0.0) || !(beta_prime >= 0.0) || !std::isfinite(beta) || !std::isfinite(beta_prime))
    throw std::invalid_argument("beta and beta' must be finite and >= 0");
  if (sequence_source.random_sequences && sequence_source.k < 1)
    throw std::invalid_argument("random-sequences needs k >= 1");
  if (teachers.empty() || mismatches.empty() || feedbacks.empty())
    throw std::invalid_argument("teacher, mismatch and feedback lists must be non-empty");
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (theta_source == ThetaSource::File) throw std::invalid_argument("experiments sample their own theta sets");
  if (theta_source == ThetaSource::Study && task != TaskKind::Ring)
    throw std::invalid_argument("the study theta set is defined for the ring task only");
  teacher_params().validate();
  for (const auto& f : feedbacks) f.validate(v_max);
  for (auto m : mismatches)
    if (task == TaskKind::Ring && m == MismatchCondition::Generalization)
      throw std::invalid_argument("per-bin generalization needs descriptor (random) tasks");
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "fig2") {
    c.mismatches = {MismatchCondition::Prior};
    c.teachers = {TeacherKind::Random, TeacherKind::Iterative, TeacherKind::UncertaintyAware};
    c.feedbacks = {FeedbackMode::none(), FeedbackMode::full()};
    return c;
  }
  if (name == "fig3") {
    c.mismatches = {MismatchCondition::Prior, MismatchCondition::Feature, MismatchCondition::Generalization};
    c.teachers = {TeacherKind::Iterative, TeacherKind::UncertaintyAware};
    c.feedbacks = {FeedbackMode::none(), FeedbackMode::full()};
    c.sequence_source = {true, 10};
    return c;
  }
  if (name == "study-biased") {
    c.task = TaskKind::Ring;
    c.n_bins = 3;
    c.d = ring_feature::count;
    c.n_objects = c.task_objects();
    c.theta_source = ThetaSource::Study;
    c.n_particles = 1024;
    c.mismatches = {MismatchCondition::Prior};
    c.teachers = {TeacherKind::Random, TeacherKind::Iterative, TeacherKind::UncertaintyAware};
    c.feedbacks = {FeedbackMode::none(), FeedbackMode::partial(0.5), FeedbackMode::full()};
    c.horizon = 15;
    return c;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "study-biased"}; }

std::string Cell::label() const {
  return to_string(mismatch) + "/" + to_string(teacher) + "/" + feedback_label(feedback);
}

std::vector<Cell> cells(const ExperimentConfig& config) {
  std::vector<Cell> out;
  for (auto m : config.mismatches)
    for (auto t : config.teachers)
      for (const auto& f : config.feedbacks) out.push_back({t, m, f});
  return out;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_index) {
  return derive_seed(master_seed, {0x747269616cULL, trial_index});
}

FeatureSpaceVariant learner_variant(const ExperimentConfig& config, MismatchCondition mismatch) {
  const std::size_t d = config.task == TaskKind::Ring ? ring_feature::count : config.d;
  switch (mismatch) {
    case MismatchCondition::None:
    case MismatchCondition::Prior: return FeatureSpaceVariant::shared(d);
    case MismatchCondition::Feature:
      return FeatureSpaceVariant::missing_feature(
          d, config.task == TaskKind::Ring ? ring_feature::outer_shape_match : d - 1);
    case MismatchCondition::Generalization: return FeatureSpaceVariant::per_bin(config.n_bins, d);
  }
  throw std::logic_error("unknown mismatch condition");
}

PriorKind learner_prior(const ExperimentConfig& config, MismatchCondition mismatch,
                        const std::vector<double>& theta_prime) {
  if (mismatch != MismatchCondition::Prior) return UniformPrior{};
  return BiasedPrior{theta_prime, config.beta_prime};
}

TrialContext make_trial_context(const ExperimentConfig& config, std::size_t trial_index) {
  TrialContext ctx;
  ctx.trial_index = trial_index;
  ctx.seed = trial_seed(config.master_seed, trial_index);
  const std::uint64_t env_seed = derive_seed(ctx.seed, {1});
  ctx.env = std::make_shared<const Environment>(
      config.task == TaskKind::Ring ? generate_ring_task(env_seed, config.ring_layout)
                                    : generate_random_task(config.n_bins, config.n_objects, config.d, env_seed));
  ctx.provider = std::make_shared<ModelProvider>(ctx.env, config.beta, config.n_particles,
                                                 derive_seed(ctx.seed, {2}), config.theta_source);
  if (config.task == TaskKind::Ring) {
    ctx.learner_theta_prime = closest_bin_rule(FeatureSpaceVariant::shared(ring_feature::count)).weights;
  } else {
    Rng rng(derive_seed(ctx.seed, {3}));
    ctx.learner_theta_prime = sample_unit_sphere(rng, config.d);
  }
  return ctx;
}

TrialResult run_trial(const ExperimentConfig& config, const Cell& cell, TrialContext& ctx) {
  const Environment& env = *ctx.env;
  const TeacherParams tparams = config.teacher_params();
  const SpeedLimits limits{config.v_max, config.v_min};

  const auto lvariant = learner_variant(config, cell.mismatch);
  const ObservationModelPtr learner_model = ctx.provider->model(lvariant);
  const Belief learner_prior_belief =
      make_prior(learner_model->theta_set(), learner_prior(config, cell.mismatch, ctx.learner_theta_prime));

  const std::size_t d = env.feature_dim();
  HypothesisOptions hopts;
  hopts.p = config.ua_p;
  hopts.learner_theta_prime = ctx.learner_theta_prime;
  hopts.beta_prime = config.beta_prime;
  hopts.seed = derive_seed(ctx.seed, {4});

  TrialResult result;
  const std::size_t runs = config.sequence_source.runs_per_trial();
  for (std::size_t run = 0; run < runs; ++run) {
    TeacherState teacher =
        cell.teacher == TeacherKind::UncertaintyAware
            ? TeacherState{build_ua_hypotheses(cell.mismatch, *ctx.provider, hopts, tparams)}
            : TeacherState{make_iterative_teacher(ctx.provider->model(FeatureSpaceVariant::shared(d)), tparams)};
    Rng select_rng(derive_seed(ctx.seed, {5, run}));

    std::vector<int> order;
    if (config.sequence_source.random_sequences) {
      order.resize(env.n_objects());
      std::iota(order.begin(), order.end(), 0);
      Rng seq_rng(derive_seed(ctx.seed, {6, run}));
      std::shuffle(order.begin(), order.end(), seq_rng);
    }

    std::set<int> remaining;
    for (std::size_t o = 0; o < env.n_objects(); ++o) remaining.insert(static_cast<int>(o));
    Belief learner = learner_prior_belief;

    TrialTrace trace;
    trace.env_fingerprint = env.fingerprint();
    for (std::size_t t = 1; t <= config.horizon; ++t) {
      try {
        DemoChoice demo;
        if (config.sequence_source.random_sequences) {
          demo = correct_demo(env, order[t - 1]);
        } else if (cell.teacher == TeacherKind::Random) {
          demo = random_select(select_rng, env, remaining);
        } else if (cell.teacher == TeacherKind::Iterative) {
          demo = iterative_select(std::get<IterativeTeacherState>(teacher), remaining);
        } else {
          demo = ua_select(std::get<UATeacherState>(teacher), remaining);
        }

        const auto fb = generate_feedback(learner, *learner_model, demo.object, cell.feedback, limits);

        if (auto* it = std::get_if<IterativeTeacherState>(&teacher)) {
          if (fb) *it = iterative_observe_feedback(*it, demo.object, *fb);
          learner = update_belief(learner, *learner_model, demo.object, demo.bin);
          *it = iterative_observe_demo(*it, demo);
        } else {
          auto& ua = std::get<UATeacherState>(teacher);
          learner = update_belief(learner, *learner_model, demo.object, demo.bin);
          ua = ua_observe(ua, demo.object, demo, fb);
        }
        remaining.erase(demo.object);

        trace.steps.push_back(
            {demo, fb, make_performance_point(t, learner_performance(learner, *learner_model), estimate(teacher))});
      } catch (const DegeneratePosterior& e) {
        throw DegeneratePosterior(cell.label() + " run " + std::to_string(run) + " iteration " +
                                  std::to_string(t) + ": " + e.what());
      }
    }
    result.runs.push_back(std::move(trace));
  }

  for (std::size_t t = 0; t < config.horizon; ++t) {
    double tg = 0.0, eg = 0.0;
    for (const auto& r : result.runs) {
      tg += r.steps[t].point.true_g;
      eg += r.steps[t].point.teacher_estimate_g;
    }
    const double n = static_cast<double>(result.runs.size());
    result.curve.push_back(make_performance_point(t + 1, tg / n, eg / n));
  }
  return result;
}

TrialResult run_trial(const ExperimentConfig& config, const Cell& cell, std::size_t trial_index) {
  config.validate();
  TrialContext ctx = make_trial_context(config, trial_index);
  return run_trial(config, cell, ctx);
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs) {
  config.validate();
  const auto cell_list = cells(config);
  ExperimentResult out;
  out.config = config;
  for (const auto& c : cell_list) out.cells.push_back({c, std::vector<TrialResult>(config.trials), {}});

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::optional<std::size_t> failed_trial;
  std::string failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t trial = next.fetch_add(1);
      if (trial >= config.trials) return;
      try {
        TrialContext ctx = make_trial_context(config, trial);
        for (std::size_t c = 0; c < cell_list.size(); ++c)
          out.cells[c].trials[trial] = run_trial(config, cell_list[c], ctx);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        if (!failed_trial || trial < *failed_trial) {
          failed_trial = trial;
          failure = e.what();
        }
      }
    }
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, config.trials));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed_trial) throw TrialError(*failed_trial, failure);

  for (auto& cr : out.cells) {
    std::vector<std::vector<PerformancePoint>> series;
    for (const auto& t : cr.trials) series.push_back(t.curve);
    cr.curve = aggregate(series);
  }
  return out;
}

void write_curves_csv(std::ostream& out, const ExperimentResult& result) {
  out << "experiment,condition,teacher,feedback,trial,iteration,true_g,estimate_g,discrepancy\n";
  for (const auto& cr : result.cells)
    for (std::size_t trial = 0; trial < cr.trials.size(); ++trial)
      for (const auto& p : cr.trials[trial].curve)
        out << result.config.name << ',' << to_string(cr.cell.mismatch) << ',' << to_string(cr.cell.teacher)
            << ',' << feedback_label(cr.cell.feedback) << ',' << trial << ',' << p.iteration << ','
            << fmt_double(p.true_g) << ',' << fmt_double(p.teacher_estimate_g) << ','
            << fmt_double(p.discrepancy) << '\n';
}

void write_aggregate_csv(std::ostream& out, const ExperimentResult& result) {
  out << "experiment,condition,teacher,feedback,iteration,trials,mean_true_g,se_true_g,"
         "mean_estimate_g,se_estimate_g,mean_discrepancy,se_discrepancy\n";
  for (const auto& cr : result.cells) {
    const auto& c = cr.curve;
    for (std::size_t k = 0; k < c.size(); ++k)
      out << result.config.name << ',' << to_string(cr.cell.mismatch) << ',' << to_string(cr.cell.teacher)
          << ',' << feedback_label(cr.cell.feedback) << ',' << c.iteration[k] << ',' << c.trials << ','
          << fmt_double(c.mean_true_g[k]) << ',' << fmt_double(c.stderr_true_g[k]) << ','
          << fmt_double(c.mean_estimate_g[k]) << ',' << fmt_double(c.stderr_estimate_g[k]) << ','
          << fmt_double(c.mean_discrepancy[k]) << ',' << fmt_double(c.stderr_discrepancy[k]) << '\n';
  }
}

void write_traces_csv(std::ostream& out, const ExperimentResult& result) {
  out << "experiment,condition,teacher,feedback,trial,run,env_fingerprint,iteration,object,bin,"
         "feedback_target,feedback_speed,feedback_confidence,true_g,estimate_g\n";
  for (const auto& cr : result.cells)
    for (std::size_t trial = 0; trial < cr.trials.size(); ++trial)
      for (std::size_t run = 0; run < cr.trials[trial].runs.size(); ++run) {
        const auto& tr = cr.trials[trial].runs[run];
        for (const auto& s : tr.steps) {
          out << result.config.name << ',' << to_string(cr.cell.mismatch) << ',' << to_string(cr.cell.teacher)
              << ',' << feedback_label(cr.cell.feedback) << ',' << trial << ',' << run << ','
              << tr.env_fingerprint << ',' << s.point.iteration << ',' << s.demo.object << ',' << s.demo.bin
              << ',';
          if (s.feedback)
            out << s.feedback->target_bin << ',' << fmt_double(s.feedback->speed) << ','
                << fmt_double(s.feedback->confidence);
          else
            out << ",,";
          out << ',' << fmt_double(s.point.true_g) << ',' << fmt_double(s.point.teacher_estimate_g) << '\n';
        }
      }
}

void write_results_json(std::ostream& out, const ExperimentResult& result) {
  out << results_to_json(result).dump(2) << '\n';
}

void write_outputs(const std::string& dir, const ExperimentResult& result, const std::string& format) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  if (format == "csv") {
    auto c = open("curves.csv");
    write_curves_csv(c, result);
    auto a = open("aggregate.csv");
    write_aggregate_csv(a, result);
    auto t = open("traces.csv");
    write_traces_csv(t, result);
  } else if (format == "json") {
    auto j = open("results.json");
    write_results_json(j, result);
  } else {
    throw std::invalid_argument("unknown output format '" + format + "'");
  }
  auto m = open("manifest.json");
  m << manifest_json(result).dump(2) << '\n';
}

const CellResult& find_cell(const ExperimentResult& result, TeacherKind teacher, MismatchCondition mismatch,
                            FeedbackMode::Kind feedback) {
  for (const auto& c : result.cells)
    if (c.cell.teacher == teacher && c.cell.mismatch == mismatch && c.cell.feedback.kind == feedback) return c;
  throw std::invalid_argument("no such cell in experiment result");
}

} // namespace teachsim
