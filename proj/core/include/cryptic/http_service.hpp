#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "cryptic/session.hpp"

namespace cryptic {

/// Builds a session from a POST /sessions body. The default reads the
/// config named in the body, applies seed/overrides and runs the stages in
/// memory (or loads an artifact directory).
using SessionFactory = std::function<SessionInputs(const std::string& request_body)>;

SessionInputs default_session_factory(const std::string& request_body);

/// JSON over HTTP in front of a SessionStore. Routes:
///   POST /sessions
///   GET  /sessions/{id}/tree[?revision=n]
///   GET  /sessions/{id}/units/{path}
///   POST /sessions/{id}/units/{path}/expand
///   GET  /sessions/{id}/events
/// {path} is the bracket label, brackets percent-encoded. See docs/api.md.
class HttpService {
 public:
  explicit HttpService(SessionStore& store, SessionFactory factory = default_session_factory);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind.
  bool run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cryptic
