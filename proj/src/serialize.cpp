#include "teachsim/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace teachsim {

namespace {

template <class T>
T get_or(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(std::string("missing key '") + key + "'");
  return get_or<T>(j, key, T{});
}

json vec2(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("position must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Ring ring_from(const std::string& s) {
  if (s == "none") return Ring::None;
  if (s == "inner") return Ring::Inner;
  if (s == "outer") return Ring::Outer;
  throw std::invalid_argument("unknown ring '" + s + "'");
}

FeatureFn feature_fn_from(const std::string& s) {
  if (s == to_string(FeatureFn::RingIndicators)) return FeatureFn::RingIndicators;
  if (s == to_string(FeatureFn::NegAbsDiff)) return FeatureFn::NegAbsDiff;
  throw std::invalid_argument("unknown feature_fn '" + s + "'");
}

std::string theta_source_name(ThetaSource s) {
  switch (s) {
    case ThetaSource::Sampled: return "sampled";
    case ThetaSource::Study: return "study";
    case ThetaSource::File: return "file";
  }
  return "sampled";
}

ThetaSource theta_source_from(const std::string& s) {
  if (s == "sampled") return ThetaSource::Sampled;
  if (s == "study") return ThetaSource::Study;
  if (s == "file") return ThetaSource::File;
  throw std::invalid_argument("unknown theta_source '" + s + "'");
}

// A single value or an array of them.
template <class F>
auto list_of(const json& j, F parse) {
  std::vector<decltype(parse(j))> out;
  if (j.is_array())
    for (const auto& e : j) out.push_back(parse(e));
  else
    out.push_back(parse(j));
  return out;
}

SequenceSource sequence_source_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "teacher-selected") return {};
    throw std::invalid_argument("unknown sequence_source '" + s + "'");
  }
  const auto kind = require<std::string>(j, "kind");
  if (kind == "teacher-selected") return {};
  if (kind == "random-sequences") return {true, require<std::size_t>(j, "k")};
  throw std::invalid_argument("unknown sequence_source kind '" + kind + "'");
}

json sequence_source_json(const SequenceSource& s) {
  if (!s.random_sequences) return json{{"kind", "teacher-selected"}};
  return json{{"kind", "random-sequences"}, {"k", s.k}};
}

} // namespace

json to_json(const Environment& env) {
  json objects = json::array();
  for (const auto& o : env.objects())
    objects.push_back({{"id", o.id}, {"position", vec2(o.position)}, {"descriptor", o.descriptor},
                       {"ring", to_string(o.ring)}});
  json bins = json::array();
  for (const auto& b : env.bins())
    bins.push_back({{"id", b.id}, {"position", vec2(b.position)}, {"descriptor", b.descriptor}});
  return {{"feature_fn", to_string(env.feature_fn())},
          {"d", env.feature_dim()},
          {"theta_star", env.theta_star().weights},
          {"objects", objects},
          {"bins", bins}};
}

Environment environment_from_json(const json& j) {
  try {
    std::vector<ObjectState> objects;
    for (const auto& o : require<json>(j, "objects"))
      objects.push_back({require<int>(o, "id"), vec2_from(require<json>(o, "position")),
                         require<std::vector<double>>(o, "descriptor"),
                         ring_from(get_or<std::string>(o, "ring", "none"))});
    std::vector<Bin> bins;
    for (const auto& b : require<json>(j, "bins"))
      bins.push_back({require<int>(b, "id"), vec2_from(require<json>(b, "position")),
                      require<std::vector<double>>(b, "descriptor")});
    const auto d = require<std::size_t>(j, "d");
    return Environment(std::move(objects), std::move(bins), feature_fn_from(require<std::string>(j, "feature_fn")),
                       d, make_reward_params(require<std::vector<double>>(j, "theta_star"),
                                             FeatureSpaceVariant::shared(d)));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed environment: ") + e.what());
  }
}

json to_json(const Feedback& fb) {
  FeedbackMode m;
  m.kind = fb.mode;
  return {{"target_bin", fb.target_bin}, {"speed", fb.speed}, {"confidence", fb.confidence}, {"mode", m.label()}};
}

Feedback feedback_from_json(const json& j) {
  Feedback fb;
  fb.target_bin = require<int>(j, "target_bin");
  fb.speed = require<double>(j, "speed");
  fb.confidence = require<double>(j, "confidence");
  fb.mode = parse_feedback_mode(get_or<std::string>(j, "mode", "full")).kind;
  return fb;
}

json to_json(const FeedbackMode& mode) {
  if (mode.kind == FeedbackMode::Kind::Partial) return json{{"kind", "partial"}, {"speed", mode.fixed_speed}};
  return mode.label();
}

FeedbackMode feedback_mode_from_json(const json& j) {
  if (j.is_string()) return parse_feedback_mode(j.get<std::string>());
  const auto kind = require<std::string>(j, "kind");
  return parse_feedback_mode(kind, get_or<double>(j, "speed", 0.5));
}

json to_json(const PriorKind& prior) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, UniformPrior>) return json{{"kind", "uniform"}};
        else if constexpr (std::is_same_v<P, BiasedPrior>)
          return json{{"kind", "biased"}, {"theta_prime", p.theta_prime}, {"beta_prime", p.beta_prime}};
        else return json{{"kind", "closest-bin"}, {"beta_prime", p.beta_prime}};
      },
      prior);
}

PriorKind prior_from_json(const json& j) {
  const auto kind = j.is_string() ? j.get<std::string>() : require<std::string>(j, "kind");
  if (kind == "uniform") return UniformPrior{};
  if (kind == "biased")
    return BiasedPrior{require<std::vector<double>>(j, "theta_prime"), get_or<double>(j, "beta_prime", 50.0)};
  if (kind == "closest-bin")
    return ClosestBinPrior{j.is_object() ? get_or<double>(j, "beta_prime", 50.0) : 50.0};
  throw std::invalid_argument("unknown prior kind '" + kind + "'");
}

json to_json(const FeatureSpaceVariant& v) {
  switch (v.kind()) {
    case FeatureSpaceVariant::Kind::Shared: return {{"kind", "shared"}, {"d", v.feature_dim()}};
    case FeatureSpaceVariant::Kind::MissingFeature:
      return {{"kind", "missing-feature"}, {"d", v.feature_dim()}, {"dropped", v.dropped_index()}};
    case FeatureSpaceVariant::Kind::PerBin:
      return {{"kind", "per-bin"}, {"d", v.feature_dim()}, {"n_bins", v.n_bins()}};
  }
  return {};
}

FeatureSpaceVariant variant_from_json(const json& j) {
  const auto kind = require<std::string>(j, "kind");
  const auto d = require<std::size_t>(j, "d");
  if (kind == "shared") return FeatureSpaceVariant::shared(d);
  if (kind == "missing-feature") return FeatureSpaceVariant::missing_feature(d, require<std::size_t>(j, "dropped"));
  if (kind == "per-bin") return FeatureSpaceVariant::per_bin(require<std::size_t>(j, "n_bins"), d);
  throw std::invalid_argument("unknown variant kind '" + kind + "'");
}

json to_json(const LearnerConfig& c) {
  json j{{"beta", c.beta},
         {"variant", to_json(c.variant)},
         {"prior", to_json(c.prior)},
         {"n_particles", c.n_particles},
         {"theta_source", theta_source_name(c.theta_source)},
         {"seed", c.seed}};
  if (c.theta_source == ThetaSource::File) j["theta_path"] = c.theta_path;
  return j;
}

LearnerConfig learner_config_from_json(const json& j) {
  LearnerConfig c;
  c.beta = get_or<double>(j, "beta", c.beta);
  if (j.contains("variant")) c.variant = variant_from_json(j.at("variant"));
  if (j.contains("prior")) c.prior = prior_from_json(j.at("prior"));
  c.n_particles = get_or<std::size_t>(j, "n_particles", c.n_particles);
  c.theta_source = theta_source_from(get_or<std::string>(j, "theta_source", "sampled"));
  c.theta_path = get_or<std::string>(j, "theta_path", "");
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json teachers = json::array(), mismatches = json::array(), feedbacks = json::array();
  for (auto t : c.teachers) teachers.push_back(to_string(t));
  for (auto m : c.mismatches) mismatches.push_back(to_string(m));
  for (const auto& f : c.feedbacks) feedbacks.push_back(to_json(f));
  json j{{"name", c.name},
         {"task", to_string(c.task)},
         {"n_bins", c.n_bins},
         {"n_objects", c.task_objects()},
         {"d", c.task == TaskKind::Ring ? ring_feature::count : c.d},
         {"beta", c.beta},
         {"beta_prime", c.beta_prime},
         {"v_max", c.v_max},
         {"v_min", c.v_min},
         {"v_var", c.v_var},
         {"teacher", teachers},
         {"mismatch", mismatches},
         {"feedback", feedbacks},
         {"horizon", c.horizon},
         {"trials", c.trials},
         {"sequence_source", sequence_source_json(c.sequence_source)},
         {"master_seed", c.master_seed},
         {"n_particles", c.n_particles},
         {"theta_source", theta_source_name(c.theta_source)},
         {"ua_p", c.ua_p},
         {"gate", to_string(c.gate)}};
  if (c.task == TaskKind::Ring)
    j["ring_layout"] = {{"inner_per_bin", c.ring_layout.inner_per_bin},
                        {"outer_per_bin", c.ring_layout.outer_per_bin},
                        {"bin_radius", c.ring_layout.bin_radius},
                        {"inner_radius", c.ring_layout.inner_radius},
                        {"outer_radius", c.ring_layout.outer_radius}};
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j, const ExperimentConfig& base) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  static const std::set<std::string> known{
      "preset", "name", "task", "n_bins", "n_objects", "d", "beta", "beta_prime", "v_max", "v_min",
      "v_var", "teacher", "mismatch", "feedback", "horizon", "trials", "sequence_source", "master_seed",
      "n_particles", "theta_source", "ua_p", "gate", "ring_layout"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");

  ExperimentConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : base;
  c.name = get_or<std::string>(j, "name", c.name);
  if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
  c.n_bins = get_or<std::size_t>(j, "n_bins", c.n_bins);
  c.n_objects = get_or<std::size_t>(j, "n_objects", c.n_objects);
  c.d = get_or<std::size_t>(j, "d", c.d);
  c.beta = get_or<double>(j, "beta", c.beta);
  c.beta_prime = get_or<double>(j, "beta_prime", c.beta_prime);
  c.v_max = get_or<double>(j, "v_max", c.v_max);
  c.v_min = get_or<double>(j, "v_min", c.v_min);
  c.v_var = get_or<double>(j, "v_var", c.v_var);
  if (j.contains("teacher"))
    c.teachers = list_of(j.at("teacher"), [](const json& e) { return parse_teacher(e.get<std::string>()); });
  if (j.contains("mismatch"))
    c.mismatches = list_of(j.at("mismatch"), [](const json& e) { return parse_mismatch(e.get<std::string>()); });
  if (j.contains("feedback")) {
    const auto& f = j.at("feedback");
    // a lone {"kind": ...} object is one mode, not a list
    c.feedbacks = list_of(f, [](const json& e) { return feedback_mode_from_json(e); });
  }
  c.horizon = get_or<std::size_t>(j, "horizon", c.horizon);
  c.trials = get_or<std::size_t>(j, "trials", c.trials);
  if (j.contains("sequence_source")) c.sequence_source = sequence_source_from(j.at("sequence_source"));
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  c.n_particles = get_or<std::size_t>(j, "n_particles", c.n_particles);
  if (j.contains("theta_source")) c.theta_source = theta_source_from(j.at("theta_source").get<std::string>());
  c.ua_p = get_or<std::size_t>(j, "ua_p", c.ua_p);
  if (j.contains("gate")) c.gate = parse_gate_rule(j.at("gate").get<std::string>());
  if (j.contains("ring_layout")) {
    const auto& r = j.at("ring_layout");
    c.ring_layout.inner_per_bin = get_or<int>(r, "inner_per_bin", c.ring_layout.inner_per_bin);
    c.ring_layout.outer_per_bin = get_or<int>(r, "outer_per_bin", c.ring_layout.outer_per_bin);
    c.ring_layout.bin_radius = get_or<double>(r, "bin_radius", c.ring_layout.bin_radius);
    c.ring_layout.inner_radius = get_or<double>(r, "inner_radius", c.ring_layout.inner_radius);
    c.ring_layout.outer_radius = get_or<double>(r, "outer_radius", c.ring_layout.outer_radius);
  }
  if (c.task == TaskKind::Ring) {
    c.d = ring_feature::count;
    c.n_bins = 3;
    c.n_objects = c.task_objects();
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

json to_json(const AggregateCurve& c) {
  return {{"trials", c.trials},
          {"iteration", c.iteration},
          {"mean_true_g", c.mean_true_g},
          {"stderr_true_g", c.stderr_true_g},
          {"mean_estimate_g", c.mean_estimate_g},
          {"stderr_estimate_g", c.stderr_estimate_g},
          {"mean_discrepancy", c.mean_discrepancy},
          {"stderr_discrepancy", c.stderr_discrepancy},
          {"mean_abs_discrepancy", c.mean_abs_discrepancy}};
}

json results_to_json(const ExperimentResult& result) {
  json cells = json::array();
  for (const auto& cr : result.cells) {
    json trials = json::array();
    for (const auto& t : cr.trials) {
      json curve = json::array();
      for (const auto& p : t.curve)
        curve.push_back({{"iteration", p.iteration},
                         {"true_g", p.true_g},
                         {"estimate_g", p.teacher_estimate_g},
                         {"discrepancy", p.discrepancy}});
      trials.push_back(curve);
    }
    cells.push_back({{"condition", to_string(cr.cell.mismatch)},
                     {"teacher", to_string(cr.cell.teacher)},
                     {"feedback", to_json(cr.cell.feedback)},
                     {"aggregate", to_json(cr.curve)},
                     {"trials", trials}});
  }
  return {{"config", to_json(result.config)}, {"cells", cells}};
}

json manifest_json(const ExperimentResult& result) {
  json cells = json::array();
  for (const auto& cr : result.cells)
    cells.push_back({{"label", cr.cell.label()}, {"rows", cr.trials.size() * result.config.horizon}});
  return {{"config", to_json(result.config)}, {"cells", cells}};
}

} // namespace teachsim
