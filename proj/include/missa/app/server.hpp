#ifndef MISSA_APP_SERVER_HPP_
#define MISSA_APP_SERVER_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "missa/app/session.hpp"

namespace missa::app {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  // Static chat client mounted at "/"; a plain index page otherwise.
  std::optional<std::filesystem::path> static_dir;
};

// MISSA_PORT when set and valid, else `fallback`.
int port_from_environment(int fallback = 8080);

/// JSON over HTTP:
///   POST /sessions                 {variant?, seed?, blind?, persona?}
///   GET  /sessions/{id}
///   POST /sessions/{id}/message    {text}
///   POST /sessions/{id}/rating     {fluency, coherence, engagement}
///   GET  /variants
///   GET  /aggregate
/// Errors carry {"error": message} with 400, 404 or 409.
class Server {
 public:
  Server(SessionManager& sessions, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and returns the bound port; throws when binding fails.
  int bind();
  // Blocks serving requests until stop().
  void listen();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ServerOptions options_;
  int port_ = 0;
};

}  // namespace missa::app

#endif  // MISSA_APP_SERVER_HPP_
