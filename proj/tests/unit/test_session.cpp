#include <doctest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include <atomic>
#include <thread>

#include "cryptic/csv.hpp"
#include "cryptic/errors.hpp"
#include "cryptic/http_service.hpp"
#include "cryptic/session.hpp"
#include "fixtures.hpp"

using namespace cryptic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfig = fixtures::repo_dir() / "data/synthetic/config.ini";

// Photo-free inputs: no signature stage, so a session is cheap to build.
SessionInputs small_inputs() {
  static const SessionInputs cached = [] {
    SessionInputs in;
    in.config = load_config(kConfig, {"pipeline.with_photos=false"});
    in.config.seed = 42;
    in.corpus = load_corpus(in.config, {});
    in.tree = run_ghsom(in.config, in.corpus);
    return in;
  }();
  return cached;
}

UnitPath expandable_leaf(const GhsomTree& t) {
  for (const auto& p : leaf_paths(t))
    if (resolve_unit(t, p).mapped.size() >= 2 && int(p.size()) < t.config.max_depth) return p;
  FAIL("no expandable leaf");
  return {};
}

std::string encode(const std::string& label) {
  std::string out;
  for (char c : label) {
    switch (c) {
      case '[': out += "%5B"; break;
      case ']': out += "%5D"; break;
      case ',': out += "%2C"; break;
      case ':': out += "%3A"; break;
      default: out += c;
    }
  }
  return out;
}

struct Server {
  SessionStore store;
  HttpService service;
  int port = 0;
  std::thread thread;

  explicit Server(SessionFactory f) : service(store, std::move(f)) {
    port = service.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { service.run(); });
    service.wait_until_ready();
  }
  ~Server() {
    service.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60);
    return c;
  }
};

SessionFactory fixed_factory() {
  return [](const std::string&) { return small_inputs(); };
}

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

}  // namespace

TEST_CASE("session: initial state, root unit and units matching the export") {
  Session s("t", small_inputs());
  const auto st = s.state();
  CHECK(st->revision == 0);
  CHECK(st->tree_hash == tree_hash(small_inputs().tree));
  CHECK(s.state()->tree_json == st->tree_json);

  const auto root = s.unit({});
  CHECK(root.path == "[R]");
  CHECK(root.label == "[R]");
  CHECK(root.count == 60);
  CHECK(root.samples.size() == 60);
  CHECK(root.qe == st->tree.qe0);
  CHECK(root.has_child);

  const auto doc = json::parse(st->tree_json);
  int seen = 0;
  for (const auto& u : doc["root"]["units"]) {
    const auto d = s.unit(parse_path_label(u["path"].get<std::string>()).path);
    CHECK(d.label == u["label"].get<std::string>());
    std::vector<std::string> ids;
    for (const auto& x : d.samples) ids.push_back(x.id);
    CHECK(ids == u["samples"].get<std::vector<std::string>>());
    ++seen;
  }
  CHECK(seen >= 4);
  CHECK_THROWS_AS(s.unit({{40, 40}}), PathError);
}

TEST_CASE("session: expand equals the library call and replay reproduces the hash") {
  Session s("t", small_inputs());
  const auto& base = small_inputs().tree;
  const auto leaf = expandable_leaf(base);
  const auto out = s.expand(leaf, 0);
  CHECK(out.revision == 1);
  CHECK(out.changed == std::vector<std::string>{format_path(leaf)});
  const auto direct = expand_unit(base, leaf, expand_rng(42, 0)).tree;
  CHECK(out.tree_hash == tree_hash(direct));
  CHECK(s.state()->tree_json == tree_to_json(direct));
  CHECK(tree_hash(s.replay()) == out.tree_hash);
  REQUIRE(s.events().size() == 1);
  CHECK(s.events()[0].path == format_path(leaf));

  // a stale base revision is refused and nothing changes
  CHECK_THROWS_AS(s.expand(leaf, 0), ConflictError);
  CHECK(s.state()->revision == 1);

  // library errors leave the session alone
  CHECK_THROWS_AS(s.expand({}), PathError);
  CHECK(s.state()->revision == 1);

  // a second expansion of the grown unit's first child
  auto deeper = leaf;
  deeper.push_back({0, 0});
  if (!resolve_unit(s.state()->tree, deeper).mapped.empty() && int(deeper.size()) < base.config.max_depth) {
    const auto second = s.expand(deeper);
    CHECK(second.revision == 2);
    CHECK(tree_hash(s.replay()) == second.tree_hash);
  }

  const auto events = events_from_json(events_to_json(s.events()));
  CHECK(events.size() == s.events().size());
}

TEST_CASE("session: concurrent expansions on one revision, exactly one wins") {
  Session s("t", small_inputs());
  const auto leaf = expandable_leaf(small_inputs().tree);
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] {
      try {
        s.expand(leaf, 0);
        ++ok;
      } catch (const ConflictError& e) {
        CHECK(e.current_revision() <= 1);
        ++conflict;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(conflict == 5);
  CHECK(s.state()->revision == 1);
}

TEST_CASE("session store and snapshots") {
  SessionStore store;
  const auto a = store.create(small_inputs());
  const auto b = store.create(small_inputs());
  CHECK(a->id() == "s1");
  CHECK(b->id() == "s2");
  CHECK(store.find("s2") == b);
  CHECK_THROWS_AS(store.find("s9"), UnknownSessionError);
  a->expand(expandable_leaf(small_inputs().tree));

  const auto dir = fs::temp_directory_path() / ("cryptic-snap-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  store.snapshot_to(dir);
  CHECK(fs::exists(dir / "s1/config.ini"));
  CHECK(read_text_file(dir / "s1/tree.json") == a->state()->tree_json);
  CHECK(events_from_json(read_text_file(dir / "s1/events.json")).size() == 1);
  CHECK(events_from_json(read_text_file(dir / "s2/events.json")).empty());
  const auto cfg = load_config(dir / "s1/config.ini");
  CHECK(*cfg.seed == 42);
  CHECK_FALSE(cfg.with_photos);
  fs::remove_all(dir);
}

TEST_CASE("http: tree, units, expand and events") {
  Server srv(fixed_factory());
  auto c = srv.client();

  auto r = c.Post("/sessions", "{}", "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  const auto created = json::parse(r->body);
  CHECK(created["session"] == "s1");
  CHECK(created["revision"] == 0);

  const auto t1 = c.Get("/sessions/s1/tree");
  const auto t2 = c.Get("/sessions/s1/tree");
  REQUIRE(t1);
  CHECK(t1->status == 200);
  CHECK(t1->body == t2->body);
  const auto tree = body_of(t1);
  CHECK(tree["stale"] == false);
  CHECK(tree["tree_hash"] == created["tree_hash"]);

  // every root unit resolves through its exported label
  for (const auto& u : tree["tree"]["root"]["units"]) {
    const auto label = u["label"].get<std::string>();
    const auto ur = c.Get("/sessions/s1/units/" + encode(label));
    REQUIRE(ur);
    CHECK(ur->status == 200);
    const auto d = json::parse(ur->body);
    CHECK(d["label"] == label);
    CHECK(d["count"] == u["count"]);
  }
  const auto root = body_of(c.Get("/sessions/s1/units/%5BR%5D"));
  CHECK(root["count"] == 60);
  CHECK(root["samples"].size() == 60);

  const auto leaf = expandable_leaf(small_inputs().tree);
  const auto e = c.Post(("/sessions/s1/units/" + encode(format_path(leaf)) + "/expand").c_str(),
                        "{\"revision\":0}", "application/json");
  REQUIRE(e);
  CHECK(e->status == 200);
  const auto ex = json::parse(e->body);
  CHECK(ex["revision"] == 1);
  CHECK(ex["changed"] == json::array({format_path(leaf)}));
  CHECK(ex["tree_hash"] == tree_hash(expand_unit(small_inputs().tree, leaf, expand_rng(42, 0)).tree));

  const auto after = body_of(c.Get("/sessions/s1/tree?revision=0"));
  CHECK(after["stale"] == true);
  CHECK(after["revision"] == 1);
  CHECK(after["tree_hash"] == ex["tree_hash"]);
  const auto child = body_of(c.Get("/sessions/s1/units/" + encode(format_path(leaf))));
  CHECK(child["has_child"] == true);

  const auto ev = body_of(c.Get("/sessions/s1/events"));
  REQUIRE(ev["events"].size() == 1);
  CHECK(ev["events"][0]["path"] == format_path(leaf));
  CHECK(ev["events"][0]["revision"] == 1);

  // stale expansion
  const auto stale = c.Post(("/sessions/s1/units/" + encode(format_path(leaf)) + "/expand").c_str(),
                            "{\"revision\":0}", "application/json");
  REQUIRE(stale);
  CHECK(stale->status == 409);
  CHECK(json::parse(stale->body)["revision"] == 1);
}

TEST_CASE("http: error statuses") {
  Server srv(fixed_factory());
  auto c = srv.client();
  REQUIRE(c.Post("/sessions", "", "application/json"));

  CHECK(c.Get("/sessions/s7/tree")->status == 404);
  CHECK(c.Get("/sessions/s1/units/%5BQ%5D")->status == 422);
  CHECK(c.Get("/sessions/s1/units/%5BR%5D%5B99%2C99%5D")->status == 422);
  CHECK(c.Get("/sessions/s1/tree?revision=abc")->status == 400);
  CHECK(c.Post("/sessions/s1/units/%5BR%5D/expand", "", "application/json")->status == 422);
  CHECK(c.Post("/sessions/s1/units/%5BR%5D%5B00%5D/expand", "{oops", "application/json")->status == 400);
  CHECK(c.Post("/sessions/s1/units/%5BR%5D%5B00%5D/expand", "{\"revision\":-1}", "application/json")->status ==
        400);

  // a count that does not match the unit
  const auto t = small_inputs().tree;
  const auto leaf = expandable_leaf(t);
  const auto wrong = format_path(leaf) + ":" + std::to_string(resolve_unit(t, leaf).mapped.size() + 1);
  CHECK(c.Get("/sessions/s1/units/" + encode(wrong))->status == 422);

  // an empty unit cannot be expanded
  bool tried_empty = false;
  for (const auto& p : leaf_paths(t)) {
    if (!resolve_unit(t, p).mapped.empty()) continue;
    tried_empty = true;
    const auto r = c.Post(("/sessions/s1/units/" + encode(format_path(p)) + "/expand").c_str(), "{}",
                          "application/json");
    CHECK(r->status == 422);
    CHECK(json::parse(r->body)["kind"] == "empty_unit");
    break;
  }
  CHECK(tried_empty);
  CHECK(body_of(c.Get("/sessions/s1/tree"))["revision"] == 0);
}

TEST_CASE("http: default factory builds sessions from config and artifacts") {
  const auto dir = fs::temp_directory_path() / ("cryptic-art-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "similarities.csv", similarity_to_csv({}));
  write_text_file(dir / "tree.json", tree_to_json(small_inputs().tree));

  Server srv(default_session_factory);
  auto c = srv.client();
  json req{{"config", kConfig.string()}, {"seed", 42}, {"set", {"pipeline.with_photos=false"}},
           {"artifacts", dir.string()}};
  auto r = c.Post("/sessions", req.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  CHECK(json::parse(r->body)["tree_hash"] == tree_hash(small_inputs().tree));

  CHECK(c.Post("/sessions", "{}", "application/json")->status == 400);
  CHECK(c.Post("/sessions", "[1]", "application/json")->status == 400);
  CHECK(c.Post("/sessions", "not json", "application/json")->status == 400);
  json bad_seed{{"config", kConfig.string()}, {"seed", "x"}};
  CHECK(c.Post("/sessions", bad_seed.dump(), "application/json")->status == 400);
  json missing{{"config", "/no/such.ini"}, {"seed", 1}};
  CHECK(c.Post("/sessions", missing.dump(), "application/json")->status == 422);
  json no_seed{{"config", kConfig.string()}, {"artifacts", dir.string()}, {"set", {"pipeline.with_photos=false"}}};
  CHECK(c.Post("/sessions", no_seed.dump(), "application/json")->status == 422);
  fs::remove_all(dir);
}
