#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cryptic/rng.hpp"

namespace cryptic {

/// Input vectors with stable string ids. Units refer to samples by index.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;

  std::size_t size() const noexcept { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }
  void validate() const;
};

struct GhsomConfig {
  double tau1 = 0.6;         // breadth: stop when map MQE <= tau1 * parent MQE
  double tau2 = 0.03;        // depth: unit qe must exceed tau2 * qe0
  double alpha_strat = 0.05; // Case1: no child when n_k <= alpha * n_I
  double beta_qe = 1.0;      // Case2: insert when qe_k >= beta * tau1 * sum qe
  int epochs = 30;
  double lr0 = 0.5;
  double radius0 = 0.0;      // <= 0 means max(rows, cols) / 2
  int max_depth = 5;

  void validate() const;
};

struct SomMap;

struct SomUnit {
  std::vector<double> weight;
  std::vector<std::size_t> mapped;  // dataset indices, ascending
  double qe = 0.0;                  // sum of distances of mapped samples
  std::shared_ptr<const SomMap> child;

  double mqe() const { return mapped.empty() ? 0.0 : qe / static_cast<double>(mapped.size()); }
};

struct SomMap {
  int rows = 0;
  int cols = 0;
  std::vector<SomUnit> units;  // row-major

  SomUnit& unit(int row, int col) { return units[std::size_t(row) * cols + col]; }
  const SomUnit& unit(int row, int col) const { return units[std::size_t(row) * cols + col]; }
  double total_qe() const;
  /// Mean of unit MQEs over units with at least one sample.
  double mean_mqe() const;
};

/// Grid position inside one map. Labels print the column first.
struct GridPos {
  int col = 0;
  int row = 0;
  bool operator==(const GridPos&) const = default;
};

/// Sequence of unit positions from the root map downwards. Empty = root.
using UnitPath = std::vector<GridPos>;

struct GhsomTree {
  GhsomConfig config;
  Dataset data;
  double qe0 = 0.0;  // sum of distances of all samples to their mean
  SomMap root;
};

/// Fresh rows x cols map, weights copied from randomly drawn members.
SomMap make_map(int rows, int cols, const Dataset& data, std::span<const std::size_t> members,
                Rng& rng);

/// Recomputes winners (smallest row-major index on ties), mapped lists and qe.
void assign_samples(SomMap& map, const Dataset& data, std::span<const std::size_t> members);

/// Sequential SOM: per epoch a shuffled pass over the members; Gaussian
/// neighbourhood; learning rate lr0 -> 0.01 lr0 and radius radius0 -> 0.5,
/// both linear over all steps. Ends with assign_samples. Throws StateError
/// when members is empty.
void train_map(SomMap& map, const Dataset& data, std::span<const std::size_t> members,
               const GhsomConfig& cfg, Rng& rng);

struct Insertion {
  bool column = false;  // true: a column was inserted, false: a row
  int index = 0;        // index of the new row/column
  GridPos error_unit;
  GridPos neighbor;
};

/// Inserts a row or column between the highest-qe unit and its most
/// dissimilar grid neighbour; new weights are the mean of the flanking units.
/// Mapped lists and qe are not touched.
Insertion insert_between(SomMap& map);

/// insert_between followed by train_map.
Insertion grow_breadth(SomMap& map, const Dataset& data, std::span<const std::size_t> members,
                       const GhsomConfig& cfg, Rng& rng);

enum class StratifyDecision {
  kStratify,   // grow a child map
  kCase1Stop,  // n_k <= alpha n_I: no child, map may grow instead
  kLeaf,       // depth rule not met
};

/// Case1 first (n_k <= alpha * n_I stops stratification), then the depth rule
/// qe_k > tau2 * qe0.
StratifyDecision decide_stratify(std::size_t n_k, double qe_k, std::size_t n_total,
                                 double qe_root, const GhsomConfig& cfg);
bool should_stratify(const SomUnit& unit, std::size_t n_total, double qe_root,
                     const GhsomConfig& cfg);

/// qe_k >= beta * tau1 * sum_qe.
bool should_insert(double qe_k, double sum_qe, const GhsomConfig& cfg);
bool should_insert(const SomUnit& unit, const SomMap& map, const GhsomConfig& cfg);

/// True when the mapped samples contain at least two distinct vectors.
bool has_distinct_samples(const SomUnit& unit, const Dataset& data);

/// Builds the whole hierarchy. Throws StateError with fewer than 4 samples.
GhsomTree grow_hierarchy(Dataset data, const GhsomConfig& cfg, const Rng& rng);

// ---------------------------------------------------------------------------
// Paths

/// "[R]" followed by one "[cr]" per level (column, then row). Indices of 10 or
/// more are written "[c,r]".
std::string format_path(const UnitPath& path);

struct ParsedLabel {
  UnitPath path;
  std::optional<std::size_t> count;
};

/// Accepts "[R][01][10]" and "[R][01][10]:11". Throws PathError.
ParsedLabel parse_path_label(std::string_view label);

/// Resolves a unit; throws PathError when a position is off-grid or an
/// intermediate unit has no child map.
const SomUnit& resolve_unit(const GhsomTree& tree, const UnitPath& path);
/// Map holding the unit at the end of `path` (the root map for a one-step
/// path). Throws PathError on an empty path.
const SomMap& resolve_parent_map(const GhsomTree& tree, const UnitPath& path);

/// Samples covered by the path: all samples for the root, the unit's mapped
/// samples otherwise.
std::size_t path_count(const GhsomTree& tree, const UnitPath& path);

/// "[R]" for the root; "<path>:<count>" for a unit.
std::string path_label(const GhsomTree& tree, const UnitPath& path);

/// Leaf units (no child map) in depth-first, row-major order.
std::vector<UnitPath> leaf_paths(const GhsomTree& tree);

/// Path of the leaf unit each sample ends up in, indexed by dataset index.
std::vector<UnitPath> sample_leaf_paths(const GhsomTree& tree);

struct ExpandResult {
  GhsomTree tree;
  std::vector<UnitPath> changed;
};

/// Replaces the unit's subtree with a freshly grown child map trained on its
/// samples. Case1 is bypassed for this unit. Other subtrees are shared with
/// the input tree, untouched. Throws EmptyUnitError for a unit without
/// samples, PathError for the root or a bad path, StateError at the depth cap.
ExpandResult expand_unit(const GhsomTree& tree, const UnitPath& path, const Rng& rng);

/// Depth of the deepest map (root = 1).
int tree_depth(const GhsomTree& tree);

// ---------------------------------------------------------------------------
// Export

std::string tree_to_json(const GhsomTree& tree);
/// Rebuilds a tree from its export; sample ids are looked up in `data`.
GhsomTree tree_from_json(const std::string& text, Dataset data);
/// Indented text, one unit per line.
std::string render_tree_text(const GhsomTree& tree);
/// FNV-1a of the JSON export, as 16 hex digits.
std::string tree_hash(const GhsomTree& tree);

}  // namespace cryptic
