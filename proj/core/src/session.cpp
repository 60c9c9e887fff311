#include "cryptic/session.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <unordered_map>

#include "cryptic/csv.hpp"

namespace cryptic {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::shared_ptr<const SessionState> make_state(std::uint64_t revision, GhsomTree tree) {
  auto s = std::make_shared<SessionState>();
  s->revision = revision;
  s->tree = std::move(tree);
  s->tree_json = tree_to_json(s->tree);
  s->tree_hash = tree_hash(s->tree);
  return s;
}

ojson optional_int(const std::optional<int>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

Rng expand_rng(std::uint64_t seed, std::uint64_t base_revision) {
  return stage_rng(seed, Stage::kSession).split(base_revision);
}

SessionInputs build_session_inputs(const PipelineConfig& cfg) {
  cfg.validate();
  SessionInputs in;
  in.config = cfg;
  SimilarityTable table;
  if (cfg.with_photos || !cfg.paths.exemplars.empty()) table = run_signatures(cfg).table;
  if (!cfg.paths.exemplars.empty()) {
    const auto exemplars = parse_exemplars(read_text_file(cfg.paths.exemplars));
    in.classification = run_csaim(cfg, table, exemplars).rows;
  }
  in.corpus = load_corpus(cfg, table);
  in.tree = run_ghsom(cfg, in.corpus);
  return in;
}

SessionInputs load_session_inputs(const PipelineConfig& cfg, const fs::path& artifacts) {
  cfg.validate();
  SessionInputs in;
  in.config = cfg;
  const auto sims = artifacts / files::kSimilarities;
  const auto tree = artifacts / files::kTree;
  const auto cls = artifacts / files::kClassification;
  const SimilarityTable table = similarity_from_csv(read_text_file(sims));
  if (fs::exists(cls)) in.classification = classification_from_csv(read_text_file(cls));
  in.corpus = load_corpus(cfg, table);
  in.tree = tree_from_json(read_text_file(tree), to_dataset(in.corpus.features, cfg.with_photos));
  return in;
}

// ---------------------------------------------------------------------------

Session::Session(std::string id, SessionInputs inputs)
    : id_(std::move(id)), inputs_(std::move(inputs)) {
  inputs_.config.require_seed();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < inputs_.tree.data.ids.size(); ++i)
    index.emplace(inputs_.tree.data.ids[i], i);
  groups_.assign(inputs_.tree.data.size(), Group::kMixed);
  for (const auto& rf : inputs_.corpus.features) {
    const auto it = index.find(rf.id);
    if (it == index.end()) throw StateError("record '" + rf.id + "' is not in the tree");
    groups_[it->second] = classify_group(rf.features, inputs_.config.discovery);
  }
  categories_ = record_categories(inputs_.corpus, inputs_.classification);
  state_ = make_state(0, inputs_.tree);
}

std::shared_ptr<const SessionState> Session::state() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

std::vector<SessionEvent> Session::events() const {
  std::lock_guard lock(state_mu_);
  return events_;
}

UnitDetail Session::unit(const UnitPath& path) const {
  const auto st = state();
  const GhsomTree& tree = st->tree;
  UnitDetail d;
  d.revision = st->revision;
  d.path = path.empty() ? "[R]" : format_path(path);
  d.label = path_label(tree, path);
  d.count = path_count(tree, path);

  std::vector<std::size_t> members;
  if (path.empty()) {
    d.qe = tree.qe0;
    d.mqe = tree.data.size() ? tree.qe0 / static_cast<double>(tree.data.size()) : 0.0;
    d.has_child = true;
    d.child_shape = std::pair{tree.root.rows, tree.root.cols};
    members.resize(tree.data.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  } else {
    const SomUnit& u = resolve_unit(tree, path);
    d.qe = u.qe;
    d.mqe = u.mqe();
    d.weight = u.weight;
    d.has_child = static_cast<bool>(u.child);
    if (u.child) d.child_shape = std::pair{u.child->rows, u.child->cols};
    members = u.mapped;
  }

  std::unordered_map<std::string, std::size_t> rec_index;
  for (std::size_t i = 0; i < inputs_.corpus.records.size(); ++i)
    rec_index.emplace(inputs_.corpus.records[i].id, i);

  std::array<std::size_t, 4> counts{};
  for (std::size_t idx : members) {
    UnitSample s;
    s.id = tree.data.ids[idx];
    s.group = groups_[idx];
    ++counts[static_cast<std::size_t>(s.group)];
    if (const auto it = rec_index.find(s.id); it != rec_index.end()) {
      const auto& r = inputs_.corpus.records[it->second];
      s.name = r.location_name;
      s.lat = r.lat;
      s.lon = r.lon;
      s.evaluation = r.evaluation;
      s.photo = r.photo;
      s.features = inputs_.corpus.features[it->second].features;
    }
    if (const auto it = categories_.find(s.id); it != categories_.end()) s.csaim_category = it->second;
    d.samples.push_back(std::move(s));
  }
  if (!members.empty()) {
    const auto top = *std::max_element(counts.begin(), counts.end());
    if (std::count(counts.begin(), counts.end(), top) == 1)
      d.dominant = static_cast<Group>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return d;
}

ExpandOutcome Session::expand(const UnitPath& path, std::optional<std::uint64_t> expected_revision) {
  std::unique_lock writer(writer_, std::try_to_lock);
  if (!writer.owns_lock()) {
    throw ConflictError("another mutation is in progress", state()->revision);
  }
  const auto base = state();
  if (expected_revision && *expected_revision != base->revision) {
    throw ConflictError("revision " + std::to_string(*expected_revision) + " is stale",
                        base->revision);
  }
  auto result = expand_unit(base->tree, path, expand_rng(seed(), base->revision));
  auto next = make_state(base->revision + 1, std::move(result.tree));

  ExpandOutcome out;
  out.revision = next->revision;
  out.tree_hash = next->tree_hash;
  for (const auto& p : result.changed) out.changed.push_back(format_path(p));

  std::lock_guard lock(state_mu_);
  state_ = std::move(next);
  events_.push_back({out.revision, "expand", format_path(path)});
  return out;
}

GhsomTree Session::replay() const {
  GhsomTree tree = inputs_.tree;
  for (const auto& e : events()) {
    if (e.op != "expand") throw StateError("unknown event '" + e.op + "'");
    tree = expand_unit(tree, parse_path_label(e.path).path, expand_rng(seed(), e.revision - 1)).tree;
  }
  return tree;
}

void Session::snapshot_to(const fs::path& dir) const {
  const auto st = state();
  const auto target = dir / id_;
  fs::create_directories(target);
  write_text_file(target / "config.ini", config_to_ini(inputs_.config));
  write_text_file(target / "tree.json", st->tree_json);
  write_text_file(target / "events.json", events_to_json(events()));
}

// ---------------------------------------------------------------------------

std::shared_ptr<Session> SessionStore::create(SessionInputs inputs) {
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_++);
  }
  auto s = std::make_shared<Session>(id, std::move(inputs));
  std::lock_guard lock(mu_);
  sessions_.emplace(id, s);
  return s;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSessionError("no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void SessionStore::snapshot_to(const fs::path& dir) const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  for (const auto& s : all) s->snapshot_to(dir);
}

// ---------------------------------------------------------------------------

std::string events_to_json(const std::vector<SessionEvent>& events) {
  ojson arr = ojson::array();
  for (const auto& e : events) {
    arr.push_back({{"revision", e.revision}, {"op", e.op}, {"path", e.path}});
  }
  return arr.dump(2) + "\n";
}

std::vector<SessionEvent> events_from_json(const std::string& text) {
  std::vector<SessionEvent> out;
  try {
    for (const auto& e : nlohmann::json::parse(text)) {
      out.push_back({e.at("revision").get<std::uint64_t>(), e.at("op").get<std::string>(),
                     e.at("path").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("event log: ") + e.what());
  }
  return out;
}

std::string unit_detail_to_json(const UnitDetail& d) {
  ojson j;
  j["revision"] = d.revision;
  j["path"] = d.path;
  j["label"] = d.label;
  j["count"] = d.count;
  j["qe"] = d.qe;
  j["mqe"] = d.mqe;
  j["weight"] = d.weight;
  j["has_child"] = d.has_child;
  j["child_shape"] = d.child_shape ? ojson{{"rows", d.child_shape->first}, {"cols", d.child_shape->second}}
                                   : ojson(nullptr);
  j["dominant"] = std::string(group_name(d.dominant));
  ojson samples = ojson::array();
  for (const auto& s : d.samples) {
    samples.push_back({{"id", s.id},
                       {"name", s.name},
                       {"lat", s.lat},
                       {"lon", s.lon},
                       {"evaluation", s.evaluation},
                       {"photo", s.photo},
                       {"group", std::string(group_name(s.group))},
                       {"csaim_category", optional_int(s.csaim_category)},
                       {"features",
                        {{"lat", s.features.lat},
                         {"lon", s.features.lon},
                         {"tfidf", s.features.tfidf},
                         {"evaluation", s.features.evaluation},
                         {"image_sim", s.features.image_sim}}}});
  }
  j["samples"] = std::move(samples);
  return j.dump();
}

}  // namespace cryptic
