#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryptic/config.hpp"
#include "cryptic/corpus.hpp"
#include "cryptic/ghsom.hpp"
#include "cryptic/immune.hpp"
#include "cryptic/signature.hpp"

namespace cryptic {

// Stream keys: stage s draws from Rng(seed).split(s).
enum class Stage : std::uint64_t {
  kSignatures = 1,
  kCsaim = 2,
  kGhsom = 3,
  kSession = 4,
};

Rng stage_rng(std::uint64_t seed, Stage stage);

// Fixed output names under --out.
namespace files {
inline constexpr const char* kSignatures = "signatures.json";
inline constexpr const char* kSimilarities = "similarities.csv";
inline constexpr const char* kMemoryCells = "memory_cells.json";
inline constexpr const char* kClassification = "classification.csv";
inline constexpr const char* kTree = "tree.json";
inline constexpr const char* kTreeText = "tree.txt";
inline constexpr const char* kDiscovery = "discovery.csv";
inline constexpr const char* kDiscoveryUnits = "discovery_units.csv";
}  // namespace files

// ---------------------------------------------------------------------------
// signatures

struct SimilarityRow {
  std::string image_id;  // file name inside the image directory
  std::string best_landmark;
  double score = 0.0;
  std::vector<double> scores;  // one per landmark, landmark-id order
};

struct SimilarityTable {
  std::vector<std::string> landmarks;
  std::vector<SimilarityRow> rows;  // sorted by image_id
};

/// `id,best_landmark,score,sim_<landmark>...`
std::string similarity_to_csv(const SimilarityTable& table);
SimilarityTable similarity_from_csv(std::string_view text);

struct SignatureStage {
  std::vector<ImageSignature> signatures;
  SimilarityTable table;
  std::vector<std::string> failures;  // "<file>: <reason>" per image that did not decode
};

/// Every image file of the photo directory, in file-name order. Image i is
/// scored with stage_rng(seed, kSignatures).split(i) against all landmarks.
SignatureStage run_signatures(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// csaim

struct Exemplar {
  std::string id;
  int category = 0;
};

/// `id,category` with category >= 1.
std::vector<Exemplar> parse_exemplars(std::string_view text);

struct ClassificationRow {
  std::string id;
  std::optional<int> category;
  std::optional<std::size_t> cell;
};

struct CsaimStage {
  std::vector<MemoryCell> cells;
  MemoryBuildReport report;
  std::vector<ClassificationRow> rows;  // similarity-table order
};

/// Trains memory cells on the exemplars' similarity vectors and classifies
/// every row of the table. Throws InputError for an exemplar id missing from
/// the table.
CsaimStage run_csaim(const PipelineConfig& cfg, const SimilarityTable& table,
                     const std::vector<Exemplar>& exemplars);

/// `id,category,cell`; empty category and cell mean unrecognized.
std::string classification_to_csv(const std::vector<ClassificationRow>& rows);
std::vector<ClassificationRow> classification_from_csv(std::string_view text);

// ---------------------------------------------------------------------------
// ghsom / discover

struct CorpusInputs {
  std::vector<SubjectiveRecord> records;
  Vocabulary vocabulary;
  std::vector<RecordFeatures> features;
};

/// Reads records and vocabulary and assembles features. A record's image
/// similarity is the best-landmark score of its photo, 0 without a photo.
/// Throws MissingFeatureError when with_photos is set and a named photo has
/// no similarity row.
CorpusInputs load_corpus(const PipelineConfig& cfg, const SimilarityTable& table);

GhsomTree run_ghsom(const PipelineConfig& cfg, const CorpusInputs& corpus);

/// Record id -> category of its photo; records without a photo or whose
/// photo was not classified map to nullopt.
std::map<std::string, std::optional<int>> record_categories(
    const CorpusInputs& corpus, const std::vector<ClassificationRow>& rows);

DiscoveryResult run_discover(const PipelineConfig& cfg, const GhsomTree& tree,
                             const CorpusInputs& corpus,
                             const std::vector<ClassificationRow>& rows);

// ---------------------------------------------------------------------------
// commands

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;

/// 2 for errors caused by the inputs (unreadable or malformed files, bad
/// config, undecodable images, missing features), 1 otherwise.
int exit_code_for(const std::exception& e);

/// Each command reads its inputs from the config and earlier artifacts in
/// cfg.out_dir, writes its own artifacts there, logs progress and the stage
/// timing to `log`, and returns an exit code. Errors are reported as
/// "<stage>: <message>".
int cmd_signatures(const PipelineConfig& cfg, std::ostream& log);
int cmd_csaim(const PipelineConfig& cfg, std::ostream& log);
int cmd_ghsom(const PipelineConfig& cfg, std::ostream& log);
int cmd_discover(const PipelineConfig& cfg, std::ostream& log);
/// The four commands in order; stops at the first failing stage.
int cmd_pipeline(const PipelineConfig& cfg, std::ostream& log);

}  // namespace cryptic
