#pragma once

#include <memory>
#include <string>

#include "teachsim/session.hpp"

namespace teachsim {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;           // 0 picks a free port
  std::string data_dir;      // event logs; empty keeps them in memory
  std::string static_dir;    // UI bundle served at /; empty disables
};

// JSON-over-HTTP front end for SessionManager.
//
//   POST /sessions                    {condition, feedback, seed} -> descriptor
//   GET  /sessions/{id}                                           -> descriptor
//   POST /sessions/{id}/select        {object_id}                 -> {object, feedback|null}
//   POST /sessions/{id}/demonstrate   {object_id}                 -> {placed_bin, prediction_was_correct, remaining_count}
//   POST /sessions/{id}/finish        {inner_rule_estimate, outer_rule_estimate} -> report
//
// Errors are {"error": message} with 400 (validation), 404 (not found) or 409 (conflict).
class SessionServer {
public:
  explicit SessionServer(ServerOptions options);
  ~SessionServer();

  // Binds and returns the port; throws if binding fails.
  int bind();
  // Blocks until stop().
  void listen();
  void stop();

  SessionManager& manager();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace teachsim
