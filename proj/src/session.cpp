#include "teachsim/session.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "teachsim/metrics.hpp"
#include "teachsim/random.hpp"
#include "teachsim/serialize.hpp"

namespace teachsim {

using nlohmann::json;

std::string to_string(SessionCondition c) {
  switch (c) {
    case SessionCondition::Uniform: return "uniform";
    case SessionCondition::Biased: return "biased";
    case SessionCondition::MissingFeature: return "missing-feature";
  }
  return "uniform";
}

SessionCondition parse_session_condition(const std::string& name) {
  if (name == "uniform") return SessionCondition::Uniform;
  if (name == "biased") return SessionCondition::Biased;
  if (name == "missing-feature") return SessionCondition::MissingFeature;
  throw SessionError(SessionError::Code::Validation, "unknown condition '" + name + "'");
}

ObservationModelPtr session_model(const SessionConfig& config) {
  const std::uint64_t env_seed = derive_seed(config.seed, {1});
  auto env = std::make_shared<const Environment>(generate_ring_task(env_seed, config.layout));
  const auto variant = config.condition == SessionCondition::MissingFeature
                           ? FeatureSpaceVariant::missing_feature(ring_feature::count, ring_feature::outer_shape_match)
                           : FeatureSpaceVariant::shared(ring_feature::count);
  auto thetas = study_theta_set(variant, derive_seed(config.seed, {2}), config.n_thetas);
  return std::make_shared<const ObservationModel>(std::move(env), std::move(thetas), config.beta);
}

Belief session_prior(const SessionConfig& config, const ObservationModelPtr& model) {
  if (config.condition == SessionCondition::Biased)
    return make_prior(model->theta_set(), ClosestBinPrior{config.beta_prime});
  return Belief::uniform(model->theta_set());
}

std::vector<int> ring_object_ids(const Environment& env, Ring ring) {
  std::vector<int> ids;
  for (const auto& o : env.objects())
    if (o.ring == ring) ids.push_back(o.id);
  return ids;
}

Session::Session(std::string id, const SessionConfig& config)
    : id_(std::move(id)), config_(config), model_(session_model(config)), belief_(session_prior(config, model_)) {
  config_.feedback.validate(1.0);
  log("create", to_json(config_));
}

void Session::log(const std::string& kind, json payload) {
  using namespace std::chrono;
  const std::int64_t now = duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
  last_timestamp_ = std::max(now, last_timestamp_ + 1);
  json ev{{"seq", events_.size()}, {"timestamp_us", last_timestamp_}, {"kind", kind}, {"payload", std::move(payload)}};
  events_.push_back(ev);
  if (sink_) sink_(ev);
}

void Session::check_mutable(int object_id) const {
  if (finished_) throw SessionError(SessionError::Code::Conflict, "session " + id_ + " is finished");
  if (object_id < 0 || static_cast<std::size_t>(object_id) >= env().n_objects())
    throw SessionError(SessionError::Code::NotFound, "no object " + std::to_string(object_id));
  if (demonstrated_.count(object_id))
    throw SessionError(SessionError::Code::Conflict, "object " + std::to_string(object_id) + " already demonstrated");
}

std::optional<Feedback> Session::select_object(int object_id) {
  check_mutable(object_id);
  log("select", {{"object", object_id}});
  auto fb = generate_feedback(belief_, *model_, object_id, config_.feedback);
  if (fb) {
    last_target_[object_id] = fb->target_bin;
    log("feedback", {{"object", object_id}, {"feedback", to_json(*fb)}});
  }
  return fb;
}

DemonstrateResult Session::demonstrate(int object_id) {
  check_mutable(object_id);
  const int bin = model_->correct_bin(object_id);
  belief_ = update_belief(belief_, *model_, object_id, bin);
  demonstrated_.insert(object_id);

  DemonstrateResult r;
  r.placed_bin = bin;
  r.remaining_count = remaining_count();
  if (auto it = last_target_.find(object_id); it != last_target_.end()) r.prediction_was_correct = it->second == bin;
  log("demonstrate", {{"object", object_id}, {"bin", bin}});
  return r;
}

FinishReport Session::finish(const RuleEstimates& estimates) {
  if (finished_) throw SessionError(SessionError::Code::Conflict, "session " + id_ + " is finished");
  for (double e : {estimates.inner, estimates.outer})
    if (!(e >= 0.0 && e <= 1.0))
      throw SessionError(SessionError::Code::Validation, "rule estimates must lie in [0, 1]");

  log("estimate", {{"inner_rule_estimate", estimates.inner}, {"outer_rule_estimate", estimates.outer}});
  FinishReport r;
  r.estimates = estimates;
  const auto inner = ring_object_ids(env(), Ring::Inner);
  const auto outer = ring_object_ids(env(), Ring::Outer);
  r.inner_performance = learner_performance_on(belief_, *model_, inner);
  r.outer_performance = learner_performance_on(belief_, *model_, outer);
  r.overall_performance = learner_performance(belief_, *model_);
  r.inner_discrepancy = mental_model_discrepancy(estimates.inner, r.inner_performance);
  r.outer_discrepancy = mental_model_discrepancy(estimates.outer, r.outer_performance);
  r.demos_given = demonstrated_.size();
  finished_ = true;
  report_ = r;
  log("finish", to_json(r));
  return r;
}

Session replay_events(const std::vector<json>& events) {
  if (events.empty() || events.front().value("kind", "") != "create")
    throw std::invalid_argument("event log must start with a create event");
  Session s("replay", session_config_from_json(events.front().at("payload")));
  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& ev = events[i];
    const auto kind = ev.at("kind").get<std::string>();
    const auto& p = ev.at("payload");
    if (kind == "demonstrate") {
      const auto r = s.demonstrate(p.at("object").get<int>());
      if (r.placed_bin != p.at("bin").get<int>())
        throw std::invalid_argument("event " + std::to_string(i) + ": logged bin differs from the replayed one");
    } else if (kind == "select") {
      s.select_object(p.at("object").get<int>());
    } else if (kind == "estimate") {
      s.finish({p.at("inner_rule_estimate").get<double>(), p.at("outer_rule_estimate").get<double>()});
    } else if (kind != "feedback" && kind != "finish") {
      throw std::invalid_argument("event " + std::to_string(i) + ": unknown kind '" + kind + "'");
    }
  }
  return s;
}

std::vector<json> load_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open event log " + path);
  std::vector<json> events;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) events.push_back(json::parse(line));
  return events;
}

json to_json(const SessionConfig& c) {
  return {{"condition", to_string(c.condition)},
          {"feedback", to_json(c.feedback)},
          {"seed", c.seed},
          {"beta", c.beta},
          {"beta_prime", c.beta_prime},
          {"n_thetas", c.n_thetas},
          {"layout",
           {{"inner_per_bin", c.layout.inner_per_bin},
            {"outer_per_bin", c.layout.outer_per_bin},
            {"bin_radius", c.layout.bin_radius},
            {"inner_radius", c.layout.inner_radius},
            {"outer_radius", c.layout.outer_radius}}}};
}

SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw SessionError(SessionError::Code::Validation, "session request must be a JSON object");
  SessionConfig c;
  try {
    c.condition = parse_session_condition(j.value("condition", std::string("uniform")));
    if (j.contains("feedback")) c.feedback = feedback_mode_from_json(j.at("feedback"));
    c.seed = j.value("seed", std::uint64_t{0});
    c.beta = j.value("beta", c.beta);
    c.beta_prime = j.value("beta_prime", c.beta_prime);
    c.n_thetas = j.value("n_thetas", c.n_thetas);
    if (j.contains("layout")) {
      const auto& l = j.at("layout");
      c.layout.inner_per_bin = l.value("inner_per_bin", c.layout.inner_per_bin);
      c.layout.outer_per_bin = l.value("outer_per_bin", c.layout.outer_per_bin);
      c.layout.bin_radius = l.value("bin_radius", c.layout.bin_radius);
      c.layout.inner_radius = l.value("inner_radius", c.layout.inner_radius);
      c.layout.outer_radius = l.value("outer_radius", c.layout.outer_radius);
    }
    c.feedback.validate(1.0);
  } catch (const SessionError&) {
    throw;
  } catch (const std::exception& e) {
    throw SessionError(SessionError::Code::Validation, e.what());
  }
  return c;
}

json session_descriptor(const Session& s) {
  json remaining = json::array();
  for (std::size_t o = 0; o < s.env().n_objects(); ++o)
    if (!s.demonstrated().count(static_cast<int>(o))) remaining.push_back(o);
  json j{{"id", s.id()},
         {"config", to_json(s.config())},
         {"phase", s.finished() ? "finished" : "active"},
         {"environment", to_json(s.env())},
         {"demonstrated", s.demonstrated()},
         {"remaining", remaining},
         {"demos_given", s.demonstrated().size()}};
  if (s.report()) j["report"] = to_json(*s.report());
  return j;
}

json to_json(const DemonstrateResult& r) {
  return {{"placed_bin", r.placed_bin},
          {"prediction_was_correct", r.prediction_was_correct ? json(*r.prediction_was_correct) : json(nullptr)},
          {"remaining_count", r.remaining_count}};
}

json to_json(const FinishReport& r) {
  return {{"inner_performance", r.inner_performance},
          {"outer_performance", r.outer_performance},
          {"overall_performance", r.overall_performance},
          {"inner_rule_estimate", r.estimates.inner},
          {"outer_rule_estimate", r.estimates.outer},
          {"inner_discrepancy", r.inner_discrepancy},
          {"outer_discrepancy", r.outer_discrepancy},
          {"demos_given", r.demos_given}};
}

SessionManager::SessionManager(std::string data_dir) : data_dir_(std::move(data_dir)) {
  std::random_device rd;
  id_state_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  if (!data_dir_.empty()) std::filesystem::create_directories(data_dir_);
}

std::string SessionManager::new_id() {
  std::lock_guard lock(id_mutex_);
  id_state_ += 0x9e3779b97f4a7c15ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(splitmix64(id_state_)));
  return buf;
}

std::string SessionManager::log_path(const std::string& id) const {
  if (data_dir_.empty()) return {};
  return (std::filesystem::path(data_dir_) / (id + ".jsonl")).string();
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError(SessionError::Code::NotFound, "no session '" + id + "'");
  return it->second;
}

json SessionManager::create(const SessionConfig& config) {
  auto entry = std::make_shared<Entry>();
  const std::string id = new_id();
  entry->session = std::make_unique<Session>(id, config);
  if (const auto path = log_path(id); !path.empty()) {
    auto write = [path](const json& ev) {
      std::ofstream out(path, std::ios::app);
      if (!out) throw std::runtime_error("cannot append to " + path);
      out << ev.dump() << '\n';
    };
    for (const auto& ev : entry->session->events()) write(ev);
    entry->session->set_event_sink(write);
  }
  json d = session_descriptor(*entry->session);
  std::unique_lock lock(map_mutex_);
  sessions_.emplace(id, std::move(entry));
  return d;
}

json SessionManager::get(const std::string& id) {
  return with_session(id, [](Session& s) { return session_descriptor(s); });
}

json SessionManager::select(const std::string& id, int object_id) {
  return with_session(id, [&](Session& s) {
    const auto fb = s.select_object(object_id);
    return json{{"object", object_id}, {"feedback", fb ? to_json(*fb) : json(nullptr)}};
  });
}

json SessionManager::demonstrate(const std::string& id, int object_id) {
  return with_session(id, [&](Session& s) { return to_json(s.demonstrate(object_id)); });
}

json SessionManager::finish(const std::string& id, const RuleEstimates& estimates) {
  return with_session(id, [&](Session& s) { return to_json(s.finish(estimates)); });
}

} // namespace teachsim
