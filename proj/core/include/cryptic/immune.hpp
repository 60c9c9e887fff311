#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cryptic/rng.hpp"

namespace cryptic {

/// Paratope (w_1..w_k, theta) with a cached affinity.
struct Antibody {
  std::vector<double> weights;
  double threshold = 0.0;
  std::optional<int> affinity;

  bool operator==(const Antibody&) const = default;
};

struct Sample {
  std::vector<double> x;
  int target = 0;  // 1 = target class, 0 = rest
};

struct TrainingSet {
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t dim() const { return samples.empty() ? 0 : samples.front().x.size(); }
  /// Throws DimensionError/StateError if empty, ragged, non-finite or a
  /// target is not 0/1.
  void validate() const;
};

struct CsaimConfig {
  int m = 50;                  // initial pool size
  int n = 10;                  // elite pools
  int q = 20;                  // clone multiplying factor
  double a = 1.0;              // mutation-rate constant
  double anneal_alpha = 5.0;   // temperature of the annealed replacement
  double replace_beta = 0.2;   // fraction of worst pools re-seeded
  int replace_period = 5;      // generations between re-seeding
  int g_max = 200;
  double e_sim = 0.1;          // firing margin
  double gamma_w = 0.2;
  double gamma_theta = 0.2;
  int n_sub = 1;               // sub-region annotation over weight indices
  bool invert_clone_allocation = false;

  void validate() const;
};

/// f(x) = 1 iff |w.x - theta| >= e_sim.
int fires(const Antibody& ab, std::span<const double> x, double e_sim);

/// Number of samples with f(x^p) equal to the target. Throws DimensionError on
/// mismatched dimensions.
int affinity(const Antibody& ab, const TrainingSet& data, double e_sim);

/// Sub-region label of each weight index: n_sub contiguous, near-equal blocks.
std::vector<int> sub_region_partition(std::size_t k, int n_sub);

/// One uniformly chosen weight moves by U(-gamma_w, gamma_w); theta moves by
/// U(-1, gamma_theta). Draw order: index, delta w, delta theta.
Antibody hypermutate(const Antibody& ab, const CsaimConfig& cfg, Rng& rng);

/// Swaps the weights at two distinct positions drawn uniformly; theta kept.
/// Throws DimensionError when k < 2.
Antibody receptor_edit(const Antibody& ab, Rng& rng);

/// P_i = round((n - i) / n * q) for i = 1..n, rounding halves away from zero.
std::vector<int> clone_counts(int n, int q);

struct MutationRates {
  double hypermutation = 1.0;
  double receptor_editing = 0.0;
};

/// P_hm = a / D clamped to [0, 1], P_re = 1 - P_hm. D <= 0 gives P_hm = 1.
MutationRates mutation_rates(double affinity_value, double a);

/// Elite pools, each holding one parent antibody with a cached affinity.
/// Kept in clone-allocation order: ascending affinity by default (pool 1 is
/// the weakest), descending when invert_clone_allocation is set.
using ElitePools = std::vector<Antibody>;

Antibody random_antibody(std::size_t k, Rng& rng);

void sort_pools(ElitePools& pools, const CsaimConfig& cfg);

/// One generation: clone, mutate, pick the best clone per pool, annealed
/// replacement, periodic re-seeding of the worst pools, re-sort. Each pool
/// draws from rng.split(pool index), so the update is order independent.
void recsa_generation(ElitePools& pools, const TrainingSet& data, const CsaimConfig& cfg,
                      int generation, const Rng& rng);

struct RecsaResult {
  Antibody best;
  ElitePools pools;
  /// Best affinity present in the pools after initialisation (index 0) and
  /// after each generation.
  std::vector<int> best_trace;
};

RecsaResult run_recsa(const TrainingSet& data, const CsaimConfig& cfg, const Rng& rng);

// ---------------------------------------------------------------------------
// Memory cells

struct MemoryCell {
  Antibody center;
  int category = 0;
  int crowd_size = 1;
  double e_sim = 0.1;  // firing margin the antibody was trained with

  bool operator==(const MemoryCell&) const = default;
};

enum class MuThetaMode {
  kSumAbs,  // mu = sum |d'_i|
  kSum,     // mu = sum d'_i
};

struct MemoryConfig {
  int initial_categories = 1;
  MuThetaMode mu_theta_mode = MuThetaMode::kSumAbs;
  double crowd_radius_factor = 0.5;
  int max_retry = 3;

  void validate() const;
};

struct LabeledSample {
  std::vector<double> x;
  int category = 0;
};

/// d'_i = d_i * h_j / d_j over indices with d_i != 0 and h_i != 0, where j is
/// the index of the smallest such d_i. Other indices pass through. Throws
/// NormalizationError when no index qualifies.
std::vector<double> normalize_to_antibody(std::span<const double> d, std::span<const double> h);

double mu_theta(std::span<const double> normalized, MuThetaMode mode);

/// Distance between the normalised sample and the cell's weights.
double response_distance(const MemoryCell& cell, std::span<const double> d);

/// True iff response_distance < mu_theta(normalised sample).
bool responds(const MemoryCell& cell, std::span<const double> d, const MemoryConfig& cfg);

struct ClassifyResult {
  std::optional<int> category;  // nullopt = unrecognized
  std::optional<std::size_t> cell;
};

/// Among responding cells, those whose antibody also fires on d are preferred;
/// within the preferred group the smallest distance / mu_theta wins, then the
/// smallest category.
ClassifyResult classify(std::span<const MemoryCell> cells, std::span<const double> d,
                        const MemoryConfig& cfg);

struct MemoryBuildReport {
  int rounds = 0;
  std::vector<int> cells_per_round;
  std::vector<std::string> log;
};

/// Per category: RECSA on the one-vs-rest set, crowd the elites, keep each
/// crowd's centroid-nearest antibody. Misclassified samples then seed up to
/// max_retry further rounds.
std::vector<MemoryCell> build_memory_cells(std::span<const LabeledSample> data,
                                           const CsaimConfig& cfg, const MemoryConfig& mcfg,
                                           const Rng& rng, MemoryBuildReport* report = nullptr);

std::string memory_cells_to_json(std::span<const MemoryCell> cells);
std::vector<MemoryCell> memory_cells_from_json(const std::string& text);

}  // namespace cryptic
