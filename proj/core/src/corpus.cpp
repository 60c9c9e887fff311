#include "cryptic/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cryptic/csv.hpp"
#include "cryptic/errors.hpp"

namespace cryptic {
namespace {

const CsvRow kRecordHeader = {"id", "lat", "lon", "name", "evaluation", "comment", "photo"};

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool is_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct TermStats {
  std::vector<double> idf;  // per vocab term
};

TermStats term_stats(const std::vector<std::vector<std::string>>& docs, const Vocabulary& vocab) {
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t t = 0; t < vocab.terms.size(); ++t) slot.emplace(vocab.terms[t], t);
  std::vector<std::size_t> df(vocab.terms.size(), 0);
  for (const auto& doc : docs) {
    std::unordered_set<std::size_t> seen;
    for (const auto& tok : doc) {
      const auto it = slot.find(tok);
      if (it != slot.end()) seen.insert(it->second);
    }
    for (auto t : seen) ++df[t];
  }
  TermStats st;
  const double n = static_cast<double>(docs.size());
  for (auto d : df) st.idf.push_back(std::log(n / (1.0 + static_cast<double>(d))) + 1.0);
  return st;
}

double raw_score(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                 const TermStats& st) {
  const double denom = static_cast<double>(std::max<std::size_t>(1, tokens.size()));
  double raw = 0.0;
  for (std::size_t t = 0; t < vocab.terms.size(); ++t) {
    const auto count = std::count(tokens.begin(), tokens.end(), vocab.terms[t]);
    if (count == 0) continue;
    raw += (static_cast<double>(count) / denom) * st.idf[t];
  }
  return raw;
}

std::vector<std::vector<std::string>> tokenize_all(const std::vector<std::string>& corpus) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.size());
  for (const auto& c : corpus) docs.push_back(tokenize(c));
  return docs;
}

}  // namespace

std::vector<SubjectiveRecord> parse_records(std::string_view text) {
  const auto rows = parse_csv(text);
  const auto lines = csv_row_lines(text);
  std::vector<SubjectiveRecord> out;
  if (rows.empty()) return out;
  if (rows.front() != kRecordHeader) {
    throw ParseError("header must be id,lat,lon,name,evaluation,comment,photo", lines.front());
  }
  std::set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::size_t line = lines[i];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != kRecordHeader.size()) {
      throw ParseError("expected 7 fields, got " + std::to_string(row.size()), line);
    }
    SubjectiveRecord rec;
    rec.id = row[0];
    if (rec.id.empty()) throw ParseError("empty id", line);
    if (!ids.insert(rec.id).second) throw ParseError("duplicate id '" + rec.id + "'", line);
    if (!parse_double(row[1], rec.lat)) throw ParseError("lat is not a number", line);
    if (!parse_double(row[2], rec.lon)) throw ParseError("lon is not a number", line);
    if (rec.lat < -90.0 || rec.lat > 90.0) throw RangeError("lat outside [-90, 90]", line);
    if (rec.lon < -180.0 || rec.lon > 180.0) throw RangeError("lon outside [-180, 180]", line);
    rec.location_name = row[3];
    if (!parse_int(row[4], rec.evaluation)) throw ParseError("evaluation is not an integer", line);
    if (rec.evaluation < 0 || rec.evaluation > 4) {
      throw RangeError("evaluation " + row[4] + " outside {0..4}", line);
    }
    rec.comment = row[5];
    rec.photo = row[6];
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SubjectiveRecord> read_records(const std::filesystem::path& path) {
  return parse_records(read_text_file(path));
}

std::string records_to_csv(const std::vector<SubjectiveRecord>& records) {
  std::string out = csv_line(kRecordHeader);
  for (const auto& r : records) {
    out += csv_line({r.id, format_double(r.lat), format_double(r.lon), r.location_name,
                     std::to_string(r.evaluation), r.comment, r.photo});
  }
  return out;
}

Vocabulary parse_vocabulary(std::string_view text, std::string source) {
  Vocabulary v;
  v.source = std::move(source);
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.remove_suffix(1);
    }
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (!line.empty() && line.front() != '#') {
      std::string term = lower_ascii(line);
      if (seen.insert(term).second) v.terms.push_back(std::move(term));
    }
    pos = end + 1;
  }
  return v;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  return parse_vocabulary(read_text_file(path), path.string());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_letter(c)) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<double> tfidf_scores(const std::vector<std::string>& corpus, const Vocabulary& vocab) {
  if (corpus.empty()) return {};
  const auto docs = tokenize_all(corpus);
  const auto st = term_stats(docs, vocab);
  std::vector<double> raw;
  raw.reserve(docs.size());
  for (const auto& d : docs) raw.push_back(raw_score(d, vocab, st));
  const double top = *std::max_element(raw.begin(), raw.end());
  for (auto& r : raw) r = top > 0.0 ? r / top : 0.0;
  return raw;
}

double tfidf_raw(std::string_view comment, const std::vector<std::string>& corpus,
                 const Vocabulary& vocab) {
  if (corpus.empty()) throw StateError("tf-idf needs a non-empty corpus");
  const auto st = term_stats(tokenize_all(corpus), vocab);
  return raw_score(tokenize(comment), vocab, st);
}

double tfidf_score(std::string_view comment, const std::vector<std::string>& corpus,
                   const Vocabulary& vocab) {
  if (corpus.empty()) throw StateError("tf-idf needs a non-empty corpus");
  const auto docs = tokenize_all(corpus);
  const auto st = term_stats(docs, vocab);
  double top = 0.0;
  for (const auto& d : docs) top = std::max(top, raw_score(d, vocab, st));
  if (top <= 0.0) return 0.0;
  return raw_score(tokenize(comment), vocab, st) / top;
}

std::vector<RecordFeatures> build_features(const std::vector<SubjectiveRecord>& records,
                                           const std::map<std::string, double>& landmark_sims,
                                           const Vocabulary& vocab, bool with_photos) {
  if (records.size() < 2) throw StateError("feature assembly needs at least 2 records");
  auto [lat_lo, lat_hi] = std::minmax_element(
      records.begin(), records.end(),
      [](const SubjectiveRecord& l, const SubjectiveRecord& r) { return l.lat < r.lat; });
  auto [lon_lo, lon_hi] = std::minmax_element(
      records.begin(), records.end(),
      [](const SubjectiveRecord& l, const SubjectiveRecord& r) { return l.lon < r.lon; });
  auto scale = [](double v, double lo, double hi) {
    return hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  };

  std::vector<std::string> comments;
  comments.reserve(records.size());
  for (const auto& r : records) comments.push_back(r.comment);
  const auto tfidf = tfidf_scores(comments, vocab);

  std::vector<RecordFeatures> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    FeatureVector f;
    f.lat = scale(r.lat, lat_lo->lat, lat_hi->lat);
    f.lon = scale(r.lon, lon_lo->lon, lon_hi->lon);
    f.tfidf = tfidf[i];
    f.evaluation = r.evaluation / 4.0;
    if (with_photos) {
      const auto it = landmark_sims.find(r.id);
      if (it == landmark_sims.end()) throw MissingFeatureError(r.id);
      f.image_sim = std::clamp(it->second, 0.0, 1.0);
    }
    out.push_back({r.id, f});
  }
  return out;
}

Dataset to_dataset(const std::vector<RecordFeatures>& features, bool with_photos) {
  Dataset d;
  for (const auto& rf : features) {
    const auto a = rf.features.as_array();
    d.ids.push_back(rf.id);
    d.vectors.emplace_back(a.begin(), a.begin() + (with_photos ? 5 : 4));
  }
  return d;
}

std::string_view group_name(Group g) {
  switch (g) {
    case Group::kFamousSpot: return "FamousSpot";
    case Group::kCrypticSpot: return "CrypticSpot";
    case Group::kLowInterest: return "LowInterest";
    case Group::kMixed: return "Mixed";
  }
  return "Mixed";
}

Group group_from_name(std::string_view name) {
  for (Group g : {Group::kFamousSpot, Group::kCrypticSpot, Group::kLowInterest, Group::kMixed}) {
    if (group_name(g) == name) return g;
  }
  throw ConfigError("unknown group '" + std::string(name) + "'");
}

void DiscoveryThresholds::validate() const {
  for (double v : {sim_hi, tfidf_hi, eval_hi}) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("discovery thresholds must be in (0, 1)");
  }
}

Group classify_group(const FeatureVector& f, const DiscoveryThresholds& th) {
  const bool sim_high = f.image_sim >= th.sim_hi;
  const bool tfidf_high = f.tfidf >= th.tfidf_hi;
  const bool eval_high = f.evaluation >= th.eval_hi;
  if (sim_high && tfidf_high && eval_high) return Group::kFamousSpot;
  if (!sim_high && tfidf_high && eval_high) return Group::kCrypticSpot;
  if (!sim_high && !tfidf_high && !eval_high) return Group::kLowInterest;
  return Group::kMixed;
}

DiscoveryResult discover(const GhsomTree& tree, const std::vector<RecordFeatures>& features,
                         const DiscoveryThresholds& th,
                         const std::map<std::string, std::optional<int>>& categories) {
  th.validate();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tree.data.ids.size(); ++i) index.emplace(tree.data.ids[i], i);
  const auto leaves_by_sample = sample_leaf_paths(tree);

  DiscoveryResult result;
  std::vector<Group> by_sample(tree.data.size(), Group::kMixed);
  for (const auto& rf : features) {
    const auto it = index.find(rf.id);
    if (it == index.end()) throw StateError("record '" + rf.id + "' is not in the tree");
    DiscoveryRow row;
    row.id = rf.id;
    row.unit_label = path_label(tree, leaves_by_sample[it->second]);
    row.group = classify_group(rf.features, th);
    row.image_sim = rf.features.image_sim;
    row.tfidf = rf.features.tfidf;
    row.evaluation = rf.features.evaluation;
    if (const auto c = categories.find(rf.id); c != categories.end()) row.csaim_category = c->second;
    by_sample[it->second] = row.group;
    result.rows.push_back(std::move(row));
  }

  for (const auto& path : leaf_paths(tree)) {
    const SomUnit& unit = resolve_unit(tree, path);
    if (unit.mapped.empty()) continue;
    UnitGroup ug;
    ug.path = path;
    ug.label = path_label(tree, path);
    for (std::size_t id : unit.mapped) ++ug.counts[static_cast<std::size_t>(by_sample[id])];
    const auto top = *std::max_element(ug.counts.begin(), ug.counts.end());
    const auto modes = std::count(ug.counts.begin(), ug.counts.end(), top);
    ug.dominant = modes == 1 ? static_cast<Group>(std::max_element(ug.counts.begin(), ug.counts.end()) -
                                                  ug.counts.begin())
                             : Group::kMixed;
    result.units.push_back(std::move(ug));
  }
  return result;
}

std::string discovery_to_csv(const DiscoveryResult& result) {
  std::string out = "id,unit,group,image_sim,csaim_category,tfidf,evaluation\n";
  for (const auto& r : result.rows) {
    out += csv_line({r.id, r.unit_label, std::string(group_name(r.group)),
                     format_double(r.image_sim),
                     r.csaim_category ? std::to_string(*r.csaim_category) : "unrecognized",
                     format_double(r.tfidf), format_double(r.evaluation)});
  }
  return out;
}

std::string unit_groups_to_csv(const DiscoveryResult& result) {
  std::string out = "unit,count,dominant,famous,cryptic,low_interest,mixed\n";
  for (const auto& u : result.units) {
    std::size_t total = 0;
    for (auto c : u.counts) total += c;
    out += csv_line({u.label, std::to_string(total), std::string(group_name(u.dominant)),
                     std::to_string(u.counts[0]), std::to_string(u.counts[1]),
                     std::to_string(u.counts[2]), std::to_string(u.counts[3])});
  }
  return out;
}

}  // namespace cryptic
