#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cryptic/errors.hpp"
#include "cryptic/pipeline.hpp"

namespace cryptic {

class UnknownSessionError : public Error {
 public:
  using Error::Error;
};

/// A mutation lost the race or named a stale base revision.
class ConflictError : public Error {
 public:
  ConflictError(const std::string& what, std::uint64_t current)
      : Error(what), current_(current) {}
  std::uint64_t current_revision() const noexcept { return current_; }

 private:
  std::uint64_t current_;
};

/// Stream used by the expansion that turns revision r into r + 1.
Rng expand_rng(std::uint64_t seed, std::uint64_t base_revision);

/// Everything a session needs besides the tree.
struct SessionInputs {
  PipelineConfig config;
  CorpusInputs corpus;
  std::vector<ClassificationRow> classification;
  GhsomTree tree;
};

/// Runs signatures (when photos are used), csaim (when an exemplar file is
/// configured) and ghsom in memory, without touching the output directory.
SessionInputs build_session_inputs(const PipelineConfig& cfg);
/// Same, but reads similarities.csv, classification.csv (optional) and
/// tree.json from an earlier pipeline run in `artifacts`.
SessionInputs load_session_inputs(const PipelineConfig& cfg,
                                  const std::filesystem::path& artifacts);

struct SessionEvent {
  std::uint64_t revision = 0;  // revision the mutation produced
  std::string op;              // "expand"
  std::string path;            // bracket path, no count
};

/// Immutable view handed to readers.
struct SessionState {
  std::uint64_t revision = 0;
  GhsomTree tree;
  std::string tree_json;
  std::string tree_hash;
};

struct UnitSample {
  std::string id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  int evaluation = 0;  // raw 0..4
  std::string photo;
  Group group = Group::kMixed;
  std::optional<int> csaim_category;
  FeatureVector features;
};

struct UnitDetail {
  std::uint64_t revision = 0;
  std::string path;   // "[R]" or bracket path
  std::string label;  // with ":count" for units
  std::size_t count = 0;
  double qe = 0.0;    // qe0 for the root
  double mqe = 0.0;
  std::vector<double> weight;  // empty for the root
  bool has_child = false;
  std::optional<std::pair<int, int>> child_shape;  // rows, cols
  Group dominant = Group::kMixed;
  std::vector<UnitSample> samples;
};

struct ExpandOutcome {
  std::uint64_t revision = 0;
  std::vector<std::string> changed;
  std::string tree_hash;
};

class Session {
 public:
  Session(std::string id, SessionInputs inputs);

  const std::string& id() const noexcept { return id_; }
  const PipelineConfig& config() const noexcept { return inputs_.config; }
  std::uint64_t seed() const { return inputs_.config.require_seed(); }

  std::shared_ptr<const SessionState> state() const;
  std::vector<SessionEvent> events() const;

  /// Throws PathError for a path that does not resolve.
  UnitDetail unit(const UnitPath& path) const;

  /// Single writer: a second concurrent call, or one whose expected revision
  /// is not current, throws ConflictError. Library errors from expand_unit
  /// propagate unchanged and leave the session as it was.
  ExpandOutcome expand(const UnitPath& path, std::optional<std::uint64_t> expected_revision = {});

  /// Re-applies the event log to the initial tree.
  GhsomTree replay() const;

  /// Writes config.ini, tree.json and events.json under dir/<id>/.
  void snapshot_to(const std::filesystem::path& dir) const;

 private:
  std::string id_;
  SessionInputs inputs_;  // tree here is the initial one
  std::vector<Group> groups_;  // by dataset index
  std::map<std::string, std::optional<int>> categories_;

  std::mutex writer_;
  mutable std::mutex state_mu_;
  std::shared_ptr<const SessionState> state_;
  std::vector<SessionEvent> events_;
};

class SessionStore {
 public:
  /// Ids are "s1", "s2", ... in creation order.
  std::shared_ptr<Session> create(SessionInputs inputs);
  /// Throws UnknownSessionError.
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<std::string> ids() const;
  void snapshot_to(const std::filesystem::path& dir) const;

 private:
  mutable std::mutex mu_;
  std::uint64_t next_ = 1;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

std::string events_to_json(const std::vector<SessionEvent>& events);
std::vector<SessionEvent> events_from_json(const std::string& text);
std::string unit_detail_to_json(const UnitDetail& detail);

}  // namespace cryptic
