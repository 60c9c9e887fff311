#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryptic/ghsom.hpp"

namespace cryptic {

/// One tourist observation.
struct SubjectiveRecord {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::string location_name;
  int evaluation = 0;  // 0..4
  std::string comment;
  std::string photo;  // empty when the record has no photo

  bool operator==(const SubjectiveRecord&) const = default;
};

/// UTF-8 CSV with header `id,lat,lon,name,evaluation,comment,photo`.
/// Throws ParseError(line) for malformed rows and RangeError(line) for values
/// outside their domain. An empty input yields no records.
std::vector<SubjectiveRecord> parse_records(std::string_view text);
std::vector<SubjectiveRecord> read_records(const std::filesystem::path& path);
std::string records_to_csv(const std::vector<SubjectiveRecord>& records);

struct Vocabulary {
  std::vector<std::string> terms;  // unique, lowercase
  std::string source;
};

/// One term per line; blank lines and lines starting with '#' are skipped;
/// terms are lowercased and de-duplicated keeping the first occurrence.
Vocabulary parse_vocabulary(std::string_view text, std::string source = {});
Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Splits on non-letter bytes and lowercases ASCII. Bytes >= 0x80 count as
/// letters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Vocabulary-restricted tf-idf per document, scaled so the corpus maximum is
/// 1 (all zero when no document mentions a term):
///   tf = count / max(1, tokens), idf = ln(N / (1 + df)) + 1.
std::vector<double> tfidf_scores(const std::vector<std::string>& corpus, const Vocabulary& vocab);

/// Raw (unscaled) sum of tf * idf for one comment against the corpus.
double tfidf_raw(std::string_view comment, const std::vector<std::string>& corpus,
                 const Vocabulary& vocab);
double tfidf_score(std::string_view comment, const std::vector<std::string>& corpus,
                   const Vocabulary& vocab);

/// Per-record GHSOM input, every component in [0, 1].
struct FeatureVector {
  double lat = 0.0;  // min-max over the dataset
  double lon = 0.0;
  double tfidf = 0.0;
  double evaluation = 0.0;  // raw / 4
  double image_sim = 0.0;

  std::array<double, 5> as_array() const { return {lat, lon, tfidf, evaluation, image_sim}; }
  bool operator==(const FeatureVector&) const = default;
};

struct RecordFeatures {
  std::string id;
  FeatureVector features;
};

/// Needs at least 2 records. With photos, every record needs an entry in
/// `landmark_sims` (MissingFeatureError otherwise); without, image_sim is 0.
std::vector<RecordFeatures> build_features(const std::vector<SubjectiveRecord>& records,
                                           const std::map<std::string, double>& landmark_sims,
                                           const Vocabulary& vocab, bool with_photos);

/// GHSOM input: 5 components with photos, the first 4 without.
Dataset to_dataset(const std::vector<RecordFeatures>& features, bool with_photos);

enum class Group { kFamousSpot, kCrypticSpot, kLowInterest, kMixed };

std::string_view group_name(Group g);
Group group_from_name(std::string_view name);

struct DiscoveryThresholds {
  double sim_hi = 0.6;
  double tfidf_hi = 0.5;
  double eval_hi = 0.75;

  void validate() const;
};

Group classify_group(const FeatureVector& f, const DiscoveryThresholds& th);

struct DiscoveryRow {
  std::string id;
  std::string unit_label;  // leaf unit, with count
  Group group = Group::kMixed;
  double image_sim = 0.0;
  std::optional<int> csaim_category;  // nullopt = unrecognized
  double tfidf = 0.0;
  double evaluation = 0.0;
};

struct UnitGroup {
  UnitPath path;
  std::string label;
  Group dominant = Group::kMixed;
  std::array<std::size_t, 4> counts{};  // indexed by Group
};

struct DiscoveryResult {
  std::vector<DiscoveryRow> rows;   // in feature order
  std::vector<UnitGroup> units;     // leaf units holding samples
};

/// Labels every record and the dominant group of each non-empty leaf unit
/// (ties -> Mixed). `categories` maps record id to a CSAIM category; missing
/// ids are reported unrecognized.
DiscoveryResult discover(const GhsomTree& tree, const std::vector<RecordFeatures>& features,
                         const DiscoveryThresholds& th,
                         const std::map<std::string, std::optional<int>>& categories = {});

/// `id,unit,group,image_sim,csaim_category,tfidf,evaluation`
std::string discovery_to_csv(const DiscoveryResult& result);
/// `unit,count,dominant,famous,cryptic,low_interest,mixed`
std::string unit_groups_to_csv(const DiscoveryResult& result);

}  // namespace cryptic
