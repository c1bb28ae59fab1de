// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracle.hpp"
#include "teachsim/env.hpp"
#include "teachsim/feedback.hpp"
#include "teachsim/harness.hpp"
#include "teachsim/learner.hpp"
#include "teachsim/metrics.hpp"
#include "teachsim/random.hpp"
#include "teachsim/teacher.hpp"

using namespace teachsim;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  std::printf("      ");
  std::vprintf(fmt, ap);
  std::printf("\n");
  va_end(ap);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::set<int> all_objects(const Environment& env) {
  std::set<int> s;
  for (std::size_t o = 0; o < env.n_objects(); ++o) s.insert(static_cast<int>(o));
  return s;
}

oracle::Particles particles(const ThetaSet& s) {
  oracle::Particles p{s.variant, {}};
  for (const auto& t : s.thetas) p.thetas.push_back(t.weights);
  return p;
}

// ---------------------------------------------------------------------------

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t id_mismatch = 0, instances = 0;
  Rng rng(2024);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t bins = 2 + seed % 2;
    const std::size_t objects = 2 + seed % 4;
    const std::size_t d = 1 + seed % 3;
    const std::size_t n = 2 + seed % 19;
    const double beta = std::uniform_real_distribution<double>(0.0, 30.0)(rng);
    const auto env = std::make_shared<const Environment>(generate_random_task(bins, objects, d, 900 + seed));

    const auto variant = seed % 3 == 2 && d > 1 ? FeatureSpaceVariant::missing_feature(d, seed % d)
                         : seed % 5 == 4       ? FeatureSpaceVariant::per_bin(bins, d)
                                               : FeatureSpaceVariant::shared(d);
    const auto set = sample_theta_set(variant, n, seed);
    const auto model = std::make_shared<const ObservationModel>(env, set, beta);
    const auto p = particles(*set);

    std::vector<double> w(n);
    for (auto& x : w) x = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    double z = 0.0;
    for (double x : w) z += x;
    for (auto& x : w) x /= z;
    Belief b = Belief::from_weights(set, w);
    std::vector<double> ow = b.weights();

    ++instances;
    std::set<int> remaining = all_objects(*env);
    for (std::size_t step = 0; step < objects; ++step) {
      // predictions and performance on the current belief
      for (int o : remaining) {
        const auto pr = predict_action(b, *model, o);
        if (pr.bin != oracle::predict(*env, p, ow, o, beta)) ++id_mismatch;
        const auto om = oracle::marginal(*env, p, ow, o, beta);
        worst = std::max(worst, std::fabs(pr.confidence - om[static_cast<std::size_t>(pr.bin)]));
      }
      worst = std::max(worst, std::fabs(learner_performance(b, *model) - oracle::performance(*env, p, ow, beta)));

      IterativeTeacherState it{model, b, {}};
      it.params.beta = beta;
      const auto pick = iterative_select(it, remaining);
      if (pick.object != oracle::select(*env, p, ow, remaining, beta)) ++id_mismatch;
      if (pick.bin != oracle::correct_bin(*env, pick.object)) ++id_mismatch;

      // arbitrary (not only correct) action for the update
      const int a = static_cast<int>((step + seed) % bins);
      b = update_belief(b, *model, pick.object, a);
      ow = oracle::update(*env, p, ow, pick.object, a, beta);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::fabs(b.weight(i) - ow[i]));
      remaining.erase(pick.object);
    }
  }

  // two-hypothesis uncertainty-aware selection
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t d = 2 + seed % 2;
    const auto env = std::make_shared<const Environment>(generate_random_task(3, 5, d, 5000 + seed));
    const auto sa = sample_theta_set(FeatureSpaceVariant::shared(d), 20, seed);
    const auto sb = sample_theta_set(FeatureSpaceVariant::missing_feature(d, seed % d), 12, seed + 1);
    const auto ma = std::make_shared<const ObservationModel>(env, sa, 20.0);
    const auto mb = std::make_shared<const ObservationModel>(env, sb, 20.0);
    const double wa = 0.2 + 0.6 * static_cast<double>(seed % 7) / 6.0;
    Belief ba = Belief::uniform(sa), bb = Belief::uniform(sb);
    const std::set<int> rem0 = all_objects(*env);
    ba = update_belief(ba, *ma, static_cast<int>(seed % 5), ma->correct_bin(static_cast<int>(seed % 5)));
    std::vector<LearnerHypothesis> hs{{"a", sa->variant, UniformPrior{}, ma, ba, std::log(wa)},
                                      {"b", sb->variant, UniformPrior{}, mb, bb, std::log(1.0 - wa)}};
    const auto ua = make_ua_teacher(hs, 0, {});
    std::vector<oracle::Hypothesis> oh{{particles(*sa), ba.weights(), wa}, {particles(*sb), bb.weights(), 1.0 - wa}};
    if (ua_select(ua, rem0).object != oracle::ua_select(*env, oh, rem0, 20.0)) ++id_mismatch;
    ++instances;
  }

  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu instances, max |diff| %.2e, argmax mismatches %zu, %.2f s", instances, worst,
                id_mismatch, secs);
  report("oracle equivalence", worst <= 1e-10 && id_mismatch == 0 && secs < 10.0, buf);
}

// ---------------------------------------------------------------------------

void analytic_anchors() {
  bool ok = true;
  std::ostringstream detail;

  // beta = 0 with three bins
  double worst_third = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto env = std::make_shared<const Environment>(generate_random_task(3, 10, 3, seed));
    const auto set = sample_theta_set(FeatureSpaceVariant::shared(3), 50, seed);
    const auto model = std::make_shared<const ObservationModel>(env, set, 0.0);
    Belief b = Belief::uniform(set);
    for (int o = 0; o < 5; ++o) b = update_belief(b, *model, o, model->correct_bin(o));
    worst_third = std::max(worst_third, std::fabs(learner_performance(b, *model) - 1.0 / 3.0));
    worst_third = std::max(worst_third, std::fabs(learner_performance(b, *env, 0.0) - 1.0 / 3.0));
  }
  ok = ok && worst_third <= 1e-15;  // a few ulps: g is a floating-point convex combination
  detail << "beta=0: max |g-1/3| " << worst_third;

  // speed clamp
  Rng rng(7);
  std::size_t clamp_cases = 0, clamp_bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const double conf = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double vmax = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const double v = feedback_speed(conf, 1.0, vmax, 0.05);
    if (vmax * conf < 0.05) {
      ++clamp_cases;
      if (v != 0.05) ++clamp_bad;
    } else if (std::fabs(v - vmax * conf) > 1e-15) {
      ++clamp_bad;
    }
  }
  // end to end: a flat belief over three bins gives confidence 1/3, and v_max 0.12 puts the product at 0.04
  {
    const auto env = std::make_shared<const Environment>(generate_random_task(3, 4, 2, 1));
    const auto set = sample_theta_set(FeatureSpaceVariant::shared(2), 10, 1);
    const auto model = std::make_shared<const ObservationModel>(env, set, 0.0);
    const auto fb = generate_feedback(Belief::uniform(set), *model, 0, FeedbackMode::full(), {0.12, 0.05});
    ++clamp_cases;
    if (!fb || fb->speed != 0.05) ++clamp_bad;
  }
  ok = ok && clamp_bad == 0 && clamp_cases > 0;
  detail << "; clamp " << clamp_cases - clamp_bad << "/" << clamp_cases;

  // likelihoods sum to one
  double worst_sum = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t bins = 2 + static_cast<std::size_t>(k % 5);
    const std::size_t d = 1 + static_cast<std::size_t>(k % 4);
    const auto env = generate_random_task(bins, 3, d, 10000 + static_cast<std::uint64_t>(k));
    const auto v = k % 3 == 0 ? FeatureSpaceVariant::per_bin(bins, d) : FeatureSpaceVariant::shared(d);
    auto w = sample_unit_sphere(rng, v.weight_dim());
    const double scale = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    for (auto& x : w) x *= scale;
    const auto theta = make_reward_params(w, v);
    const double beta = std::uniform_real_distribution<double>(0.0, 500.0)(rng);
    const int o = k % 3;
    double s = 0.0;
    for (const auto& bin : env.bins()) s += action_likelihood(env, env.object(o), bin, theta, beta);
    worst_sum = std::max(worst_sum, std::fabs(s - 1.0));
  }
  ok = ok && worst_sum <= 1e-9;
  detail << "; max |sum-1| " << worst_sum;
  report("analytic anchors", ok, detail.str());
}

// ---------------------------------------------------------------------------

void wsls_invariance() {
  ExperimentConfig c = preset("fig2");
  c.mismatches = {MismatchCondition::None};
  c.teachers = {TeacherKind::Iterative};
  c.trials = 20;
  c.horizon = 30;
  std::size_t differing = 0;
  for (std::size_t t = 0; t < c.trials; ++t) {
    const auto quiet = run_trial(c, {TeacherKind::Iterative, MismatchCondition::None, FeedbackMode::none()}, t);
    const auto loud = run_trial(c, {TeacherKind::Iterative, MismatchCondition::None, FeedbackMode::full()}, t);
    for (std::size_t k = 0; k < c.horizon; ++k)
      if (quiet.runs[0].steps[k].demo.object != loud.runs[0].steps[k].demo.object) {
        ++differing;
        break;
      }
  }
  report("win-stay-lose-shift", differing == 0,
         std::to_string(c.trials - differing) + "/" + std::to_string(c.trials) +
             " environments with identical sequences over " + std::to_string(c.horizon) + " demos");
}

// ---------------------------------------------------------------------------

struct Gap {
  double a, b, se;
  bool ok() const { return a - b > 2.0 * se; }
};

Gap gap(const CellResult& x, const CellResult& y, std::size_t iteration) {
  const std::size_t i = iteration - 1;
  return {x.curve.mean_true_g[i], y.curve.mean_true_g[i],
          std::hypot(x.curve.stderr_true_g[i], y.curve.stderr_true_g[i])};
}

void fig2() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = preset("fig2");
  c.trials = 100;
  const auto r = run_experiment(c, jobs());
  const auto m = MismatchCondition::Prior;
  const auto none = FeedbackMode::Kind::None, full = FeedbackMode::Kind::Full;
  bool ok = true;
  auto show = [&](const char* what, Gap g) {
    note("%-34s %.4f vs %.4f  diff %+.4f  2SE %.4f  %s", what, g.a, g.b, g.a - g.b, 2.0 * g.se, g.ok() ? "ok" : "short");
    ok = ok && g.ok();
  };
  for (auto teacher : {TeacherKind::Iterative, TeacherKind::UncertaintyAware})
    for (std::size_t it : {10, 20}) {
      const std::string what = to_string(teacher) + " full vs none @" + std::to_string(it);
      show(what.c_str(), gap(find_cell(r, teacher, m, full), find_cell(r, teacher, m, none), it));
    }
  for (auto teacher : {TeacherKind::Iterative, TeacherKind::UncertaintyAware}) {
    const std::string what = to_string(teacher) + " full vs random @20";
    show(what.c_str(), gap(find_cell(r, teacher, m, full), find_cell(r, TeacherKind::Random, m, none), 20));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "100 trials, %.1f s", seconds_since(t0));
  report("fig2 feedback benefit", ok, buf);
}

void fig3() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = preset("fig3");
  c.trials = 100;
  const auto r = run_experiment(c, jobs());
  const std::size_t i = 19;
  bool ok = true;
  for (auto m : {MismatchCondition::Feature, MismatchCondition::Generalization}) {
    for (auto teacher : {TeacherKind::Iterative, TeacherKind::UncertaintyAware}) {
      const auto& cell = find_cell(r, teacher, m, FeedbackMode::Kind::None);
      const double disc = cell.curve.mean_discrepancy[i];
      note("%-15s %-18s none  mean disc %+.4f (need > 0.15)", to_string(m).c_str(), to_string(teacher).c_str(), disc);
      ok = ok && disc > 0.15;
    }
    const auto& ua = find_cell(r, TeacherKind::UncertaintyAware, m, FeedbackMode::Kind::Full);
    const double a = std::fabs(ua.curve.mean_discrepancy[i]);
    note("%-15s %-18s full  |mean disc| %.4f (need < 0.05)", to_string(m).c_str(), "uncertainty-aware", a);
    ok = ok && a < 0.05;
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "100 trials x 10 sequences, %.1f s", seconds_since(t0));
  report("fig3 mental-model tracking", ok, buf);
}

// ---------------------------------------------------------------------------

void ua_identification() {
  ExperimentConfig c = preset("fig3");
  c.sequence_source = {};
  c.mismatches = {MismatchCondition::Feature};
  c.teachers = {TeacherKind::UncertaintyAware};
  c.feedbacks = {FeedbackMode::full()};
  const std::size_t trials = 100, demos = 20;
  const TeacherParams tparams = c.teacher_params();

  std::vector<int> hit(trials, 0);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < jobs(); ++w)
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < trials; t = next++) {
        TrialContext ctx = make_trial_context(c, t);
        const auto lvariant = learner_variant(c, MismatchCondition::Feature);
        const auto lmodel = ctx.provider->model(lvariant);
        Belief learner = make_prior(lmodel->theta_set(), learner_prior(c, MismatchCondition::Feature, {}));
        HypothesisOptions h;
        h.p = c.ua_p;
        h.beta_prime = c.beta_prime;
        h.seed = derive_seed(ctx.seed, {4});
        auto ua = build_ua_hypotheses(MismatchCondition::Feature, *ctx.provider, h, tparams);
        auto remaining = all_objects(*ctx.env);
        for (std::size_t k = 0; k < demos; ++k) {
          const auto demo = ua_select(ua, remaining);
          const auto fb = generate_feedback(learner, *lmodel, demo.object, FeedbackMode::full(), {c.v_max, c.v_min});
          learner = update_belief(learner, *lmodel, demo.object, demo.bin);
          ua = ua_observe(ua, demo.object, demo, fb);
          remaining.erase(demo.object);
        }
        hit[t] = ua.hypotheses[ua.map_hypothesis()].variant == lvariant;
      }
    });
  for (auto& th : pool) th.join();
  const int n = std::accumulate(hit.begin(), hit.end(), 0);
  report("UA hypothesis identification", n >= 90, std::to_string(n) + "/100 trials with the true variant on top");
}

// ---------------------------------------------------------------------------

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_curves_csv(out, r);
  write_aggregate_csv(out, r);
  write_traces_csv(out, r);
  return out.str();
}

void determinism() {
  bool ok = true;
  std::ostringstream detail;
  for (const std::string name : {"fig2", "study-biased"}) {
    ExperimentConfig c = preset(name);
    c.trials = 24;
    c.master_seed = 77;
    const auto one = csv_of(run_experiment(c, 1));
    const auto many = csv_of(run_experiment(c, 4));
    const auto other = csv_of(run_experiment(c, 7));
    const bool same = one == many && one == other;
    ok = ok && same && !one.empty();
    detail << name << " " << one.size() << " bytes " << (same ? "identical" : "DIFFER") << "; ";
  }
  report("determinism", ok, detail.str() + "jobs 1/4/7");
}

} // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("acceptance run on %zu worker threads\n", jobs());
  const std::vector<std::function<void()>> checks{oracle_equivalence, analytic_anchors, wsls_invariance, fig2,
                                                  fig3, ua_identification, determinism};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      report("exception", false, e.what());
    }
  }
  std::printf("%d failing, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
