#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "teachsim/env.hpp"
#include "teachsim/feedback.hpp"
#include "teachsim/learner.hpp"

namespace teachsim {

// Interactive teaching sessions on the ring task: a human picks objects, the
// learner answers with feedback, and the service places the object correctly.

enum class SessionCondition { Uniform, Biased, MissingFeature };

std::string to_string(SessionCondition c);
SessionCondition parse_session_condition(const std::string& name);

class SessionError : public std::runtime_error {
public:
  enum class Code { NotFound, Conflict, Validation };
  SessionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

private:
  Code code_;
};

struct SessionConfig {
  SessionCondition condition = SessionCondition::Uniform;
  FeedbackMode feedback = FeedbackMode::full();
  std::uint64_t seed = 0;
  double beta = 20.0;
  double beta_prime = 50.0;
  std::size_t n_thetas = 1024;
  RingLayout layout;
};

struct DemonstrateResult {
  int placed_bin = 0;
  std::optional<bool> prediction_was_correct;  // absent when no feedback was shown
  std::size_t remaining_count = 0;
};

struct RuleEstimates {
  double inner = 0.0;
  double outer = 0.0;
};

struct FinishReport {
  double inner_performance = 0.0;
  double outer_performance = 0.0;
  double overall_performance = 0.0;
  double inner_discrepancy = 0.0;  // estimate - performance
  double outer_discrepancy = 0.0;
  RuleEstimates estimates;
  std::size_t demos_given = 0;
};

// One session's state. Not synchronized; SessionManager serializes access.
class Session {
public:
  Session(std::string id, const SessionConfig& config);

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  const Environment& env() const { return model_->env(); }
  const ObservationModel& model() const { return *model_; }
  const Belief& belief() const { return belief_; }
  bool finished() const { return finished_; }
  const std::set<int>& demonstrated() const { return demonstrated_; }
  std::size_t remaining_count() const { return env().n_objects() - demonstrated_.size(); }
  const std::vector<nlohmann::json>& events() const { return events_; }
  const std::optional<FinishReport>& report() const { return report_; }

  std::optional<Feedback> select_object(int object_id);
  DemonstrateResult demonstrate(int object_id);
  FinishReport finish(const RuleEstimates& estimates);

  // Hook called with every appended event (the manager persists them).
  void set_event_sink(std::function<void(const nlohmann::json&)> sink) { sink_ = std::move(sink); }

private:
  void check_mutable(int object_id) const;
  void log(const std::string& kind, nlohmann::json payload);

  std::string id_;
  SessionConfig config_;
  ObservationModelPtr model_;
  Belief belief_;
  bool finished_ = false;
  std::set<int> demonstrated_;
  std::map<int, int> last_target_;  // object -> last feedback target shown
  std::optional<FinishReport> report_;
  std::vector<nlohmann::json> events_;
  std::int64_t last_timestamp_ = 0;
  std::function<void(const nlohmann::json&)> sink_;
};

// Learner belief at session creation, shared by Session and replay.
ObservationModelPtr session_model(const SessionConfig& config);
Belief session_prior(const SessionConfig& config, const ObservationModelPtr& model);

std::vector<int> ring_object_ids(const Environment& env, Ring ring);

// Rebuilds a session from its event log (the first event must be "create").
Session replay_events(const std::vector<nlohmann::json>& events);
std::vector<nlohmann::json> load_event_log(const std::string& path);

nlohmann::json to_json(const SessionConfig& config);
SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::json session_descriptor(const Session& session);
nlohmann::json to_json(const DemonstrateResult& r);
nlohmann::json to_json(const FinishReport& r);

class SessionManager {
public:
  // Empty `data_dir` keeps logs in memory only.
  explicit SessionManager(std::string data_dir = "");

  nlohmann::json create(const SessionConfig& config);
  nlohmann::json get(const std::string& id);
  nlohmann::json select(const std::string& id, int object_id);
  nlohmann::json demonstrate(const std::string& id, int object_id);
  nlohmann::json finish(const std::string& id, const RuleEstimates& estimates);

  // Runs `f` on the session under its lock.
  template <class F>
  auto with_session(const std::string& id, F&& f) {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    return f(*entry->session);
  }

  std::string log_path(const std::string& id) const;

private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };
  std::shared_ptr<Entry> find(const std::string& id);
  std::string new_id();

  std::string data_dir_;
  std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_state_;
};

} // namespace teachsim
