#include "cryptic/http_service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <charconv>

namespace cryptic {
namespace {

using ojson = nlohmann::ordered_json;

// Body could not be understood at all -> 400.
class BadRequest : public Error {
 public:
  using Error::Error;
};

void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& msg) {
  send_json(res, status, {{"error", msg}, {"kind", kind}});
}

// One place maps library errors to status codes.
void handle(httplib::Response& res, const std::function<void()>& body) {
  try {
    body();
  } catch (const BadRequest& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const UnknownSessionError& e) {
    send_error(res, 404, "unknown_session", e.what());
  } catch (const ConflictError& e) {
    send_json(res, 409, {{"error", e.what()}, {"kind", "conflict"}, {"revision", e.current_revision()}});
  } catch (const EmptyUnitError& e) {
    send_error(res, 422, "empty_unit", e.what());
  } catch (const PathError& e) {
    send_error(res, 422, "bad_path", e.what());
  } catch (const StateError& e) {
    send_error(res, 422, "state", e.what());
  } catch (const std::exception& e) {
    if (exit_code_for(e) == kExitBadInput) {
      send_error(res, 422, "bad_input", e.what());
    } else {
      send_error(res, 500, "internal", e.what());
    }
  }
}

ojson parse_body(const std::string& body) {
  if (body.empty()) return ojson::object();
  try {
    auto j = ojson::parse(body);
    if (!j.is_object()) throw BadRequest("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw BadRequest(std::string("malformed JSON: ") + e.what());
  }
}

UnitPath parse_unit_path(const std::string& text) {
  const auto parsed = parse_path_label(text);
  return parsed.path;
}

void check_count(const Session& s, const std::string& text) {
  const auto parsed = parse_path_label(text);
  if (parsed.count) {
    const auto actual = path_count(s.state()->tree, parsed.path);
    if (actual != *parsed.count) {
      throw PathError("label count " + std::to_string(*parsed.count) + " does not match " +
                      std::to_string(actual));
    }
  }
}

}  // namespace

SessionInputs default_session_factory(const std::string& request_body) {
  const auto body = parse_body(request_body);
  if (!body.contains("config") || !body["config"].is_string())
    throw BadRequest("field 'config' (path to an INI file) is required");
  std::vector<std::string> overrides;
  if (body.contains("set")) {
    if (!body["set"].is_array()) throw BadRequest("field 'set' must be an array of strings");
    for (const auto& o : body["set"]) {
      if (!o.is_string()) throw BadRequest("field 'set' must be an array of strings");
      overrides.push_back(o.get<std::string>());
    }
  }
  PipelineConfig cfg = load_config(body["config"].get<std::string>(), overrides);
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) throw BadRequest("field 'seed' must be a non-negative integer");
    cfg.seed = body["seed"].get<std::uint64_t>();
  }
  if (body.contains("artifacts")) {
    if (!body["artifacts"].is_string()) throw BadRequest("field 'artifacts' must be a path");
    return load_session_inputs(cfg, body["artifacts"].get<std::string>());
  }
  return build_session_inputs(cfg);
}

struct HttpService::Impl {
  SessionStore& store;
  SessionFactory factory;
  httplib::Server server;

  Impl(SessionStore& s, SessionFactory f) : store(s), factory(std::move(f)) {}

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto session = store.create(factory(req.body));
        const auto st = session->state();
        send_json(res, 201, {{"session", session->id()}, {"revision", st->revision},
                             {"tree_hash", st->tree_hash}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/tree)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto session = store.find(req.matches[1]);
        const auto st = session->state();
        bool stale = false;
        if (req.has_param("revision")) {
          const auto v = req.get_param_value("revision");
          std::uint64_t r = 0;
          const auto rc = std::from_chars(v.data(), v.data() + v.size(), r);
          if (rc.ec != std::errc() || rc.ptr != v.data() + v.size())
            throw BadRequest("revision must be a non-negative integer");
          stale = r != st->revision;
        }
        ojson body;
        body["session"] = session->id();
        body["revision"] = st->revision;
        body["stale"] = stale;
        body["tree_hash"] = st->tree_hash;
        body["tree"] = ojson::parse(st->tree_json);
        send_json(res, 200, body);
      });
    });

    server.Post(R"(/sessions/([^/]+)/units/(.+)/expand)",
                [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto session = store.find(req.matches[1]);
        const auto body = parse_body(req.body);
        std::optional<std::uint64_t> expected;
        if (body.contains("revision")) {
          if (!body["revision"].is_number_unsigned())
            throw BadRequest("field 'revision' must be a non-negative integer");
          expected = body["revision"].get<std::uint64_t>();
        }
        const std::string label = req.matches[2];
        check_count(*session, label);
        const auto out = session->expand(parse_unit_path(label), expected);
        send_json(res, 200, {{"session", session->id()}, {"revision", out.revision},
                             {"changed", out.changed}, {"tree_hash", out.tree_hash}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/units/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto session = store.find(req.matches[1]);
        const std::string label = req.matches[2];
        check_count(*session, label);
        res.status = 200;
        res.set_content(unit_detail_to_json(session->unit(parse_unit_path(label))), "application/json");
      });
    });

    server.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto session = store.find(req.matches[1]);
        const auto st = session->state();
        send_json(res, 200, {{"session", session->id()}, {"revision", st->revision},
                             {"events", ojson::parse(events_to_json(session->events()))}});
      });
    });
  }
};

HttpService::HttpService(SessionStore& store, SessionFactory factory)
    : impl_(std::make_unique<Impl>(store, std::move(factory))) {
  impl_->routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::run() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace cryptic
