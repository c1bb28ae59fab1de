#include "teachsim/session_http.hpp"

#include "httplib.h"

namespace teachsim {

using nlohmann::json;

namespace {

int status_for(SessionError::Code c) {
  switch (c) {
    case SessionError::Code::NotFound: return 404;
    case SessionError::Code::Conflict: return 409;
    case SessionError::Code::Validation: return 400;
  }
  return 500;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw SessionError(SessionError::Code::Validation, std::string("malformed JSON: ") + e.what());
  }
}

int object_id_of(const json& body) {
  if (!body.is_object() || !body.contains("object_id") || !body.at("object_id").is_number_integer())
    throw SessionError(SessionError::Code::Validation, "body must contain an integer object_id");
  return body.at("object_id").get<int>();
}

double estimate_of(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key) || !body.at(key).is_number())
    throw SessionError(SessionError::Code::Validation, std::string("body must contain a numeric ") + key);
  return body.at(key).get<double>();
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, 200, f(req));
    } catch (const SessionError& e) {
      reply(res, status_for(e.code()), {{"error", e.what()}});
    } catch (const std::invalid_argument& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

} // namespace

struct SessionServer::Impl {
  ServerOptions options;
  SessionManager manager;
  httplib::Server server;
  int port = -1;

  explicit Impl(ServerOptions o) : options(std::move(o)), manager(options.data_dir) {}
};

SessionServer::SessionServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  auto& srv = impl_->server;
  auto& mgr = impl_->manager;

  srv.Post("/sessions", guarded([&mgr](const httplib::Request& req) {
             return mgr.create(session_config_from_json(parse_body(req)));
           }));
  srv.Get(R"(/sessions/([0-9a-f]+))",
          guarded([&mgr](const httplib::Request& req) { return mgr.get(req.matches[1]); }));
  srv.Post(R"(/sessions/([0-9a-f]+)/select)", guarded([&mgr](const httplib::Request& req) {
             return mgr.select(req.matches[1], object_id_of(parse_body(req)));
           }));
  srv.Post(R"(/sessions/([0-9a-f]+)/demonstrate)", guarded([&mgr](const httplib::Request& req) {
             return mgr.demonstrate(req.matches[1], object_id_of(parse_body(req)));
           }));
  srv.Post(R"(/sessions/([0-9a-f]+)/finish)", guarded([&mgr](const httplib::Request& req) {
             const auto body = parse_body(req);
             return mgr.finish(req.matches[1], {estimate_of(body, "inner_rule_estimate"),
                                                estimate_of(body, "outer_rule_estimate")});
           }));

  if (!impl_->options.static_dir.empty() && !srv.set_mount_point("/", impl_->options.static_dir))
    throw std::invalid_argument("static directory does not exist: " + impl_->options.static_dir);
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind() {
  auto& o = impl_->options;
  impl_->port = o.port == 0 ? impl_->server.bind_to_any_port(o.host)
                            : (impl_->server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (impl_->port < 0) throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return impl_->port;
}

void SessionServer::listen() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void SessionServer::stop() {
  if (impl_) impl_->server.stop();
}

SessionManager& SessionServer::manager() { return impl_->manager; }

} // namespace teachsim
