#include "missa/app/server.hpp"

#include <cstdlib>
#include <stdexcept>

#include <httplib.h>

#include "missa/error.hpp"

namespace missa::app {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

constexpr const char* kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>missa</title></head>
<body><h1>missa dialog service</h1>
<p>The chat client is not installed. JSON endpoints:</p>
<ul>
<li>POST /sessions</li><li>GET /sessions/{id}</li>
<li>POST /sessions/{id}/message</li><li>POST /sessions/{id}/rating</li>
<li>GET /variants</li><li>GET /aggregate</li>
</ul></body></html>
)";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("request body is not JSON: ") + e.what());
  }
}

// Runs a handler and maps domain errors onto status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ValidationError& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const NotFoundError& e) {
      reply(res, 404, {{"error", e.what()}});
    } catch (const ConflictError& e) {
      reply(res, 409, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

int port_from_environment(int fallback) {
  const char* raw = std::getenv("MISSA_PORT");
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const long port = std::strtol(raw, &end, 10);
  if (*end != '\0' || port < 0 || port > 65535) {
    throw ValidationError(std::string("MISSA_PORT is not a port number: ") + raw);
  }
  return static_cast<int>(port);
}

struct Server::Impl {
  httplib::Server http;
};

Server::Server(SessionManager& sessions, ServerOptions options)
    : impl_(std::make_unique<Impl>()), options_(std::move(options)) {
  auto& http = impl_->http;
  SessionManager* sm = &sessions;

  http.Post("/sessions", guarded([sm](const httplib::Request& req, httplib::Response& res) {
              const auto session = sm->create(create_request_from_json(parse_body(req)));
              reply(res, 201, to_json(session));
            }));
  http.Get(R"(/sessions/([^/]+))",
           guarded([sm](const httplib::Request& req, httplib::Response& res) {
             reply(res, 200, to_json(sm->get(req.matches[1])));
           }));
  http.Post(R"(/sessions/([^/]+)/message)",
            guarded([sm](const httplib::Request& req, httplib::Response& res) {
              const auto body = parse_body(req);
              if (!body.contains("text") || !body.at("text").is_string()) {
                throw ValidationError("message needs a string field 'text'");
              }
              const std::string id = req.matches[1];
              auto out = to_json(sm->post_message(id, body.at("text").get<std::string>()));
              const auto session = sm->get(id);
              out["session"] = {{"id", id},
                                {"blind", session.blind},
                                {"length", session.length()},
                                {"task_success", session.task_success()}};
              reply(res, 200, out);
            }));
  http.Post(R"(/sessions/([^/]+)/rating)",
            guarded([sm](const httplib::Request& req, httplib::Response& res) {
              const auto ratings = parse_body(req).get<Ratings>();
              const auto session = sm->rate(req.matches[1], ratings);
              const auto aggregate = sm->aggregate();
              reply(res, 200,
                    {{"id", session.id},
                     {"ratings", *session.ratings},
                     {"length", session.length()},
                     {"task_success", session.task_success()},
                     {"aggregate", aggregate.at(std::string(eval::to_string(session.variant)))}});
            }));
  http.Get("/variants", guarded([sm](const httplib::Request&, httplib::Response& res) {
             json names = json::array();
             for (auto v : sm->variants()) names.push_back(eval::to_string(v));
             reply(res, 200, {{"task", sm->config().task}, {"variants", names}});
           }));
  http.Get("/aggregate", guarded([sm](const httplib::Request&, httplib::Response& res) {
             reply(res, 200, {{"variants", sm->aggregate()}});
           }));

  bool mounted = false;
  if (options_.static_dir) {
    mounted = http.set_mount_point("/", options_.static_dir->string());
  }
  if (!mounted) {
    http.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kIndexPage, "text/html");
    });
  }
}

Server::~Server() { stop(); }

int Server::bind() {
  auto& http = impl_->http;
  if (options_.port == 0) {
    port_ = http.bind_to_any_port(options_.host);
  } else {
    port_ = http.bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return port_;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace missa::app
