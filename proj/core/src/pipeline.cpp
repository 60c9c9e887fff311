#include "cryptic/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <functional>
#include <ostream>
#include <set>
#include <unordered_map>

#include "cryptic/csv.hpp"
#include "cryptic/errors.hpp"

namespace cryptic {
namespace {

namespace fs = std::filesystem;

bool parse_int(std::string_view s, int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

void require_dir(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("paths.") + what + " is not set");
  if (!fs::is_directory(p)) throw InputError(std::string(what) + " directory '" + p.string() + "' does not exist");
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("paths.") + what + " is not set");
  if (!fs::is_regular_file(p)) throw InputError(std::string(what) + " file '" + p.string() + "' does not exist");
}

fs::path out_file(const PipelineConfig& cfg, const char* name) {
  if (cfg.out_dir.empty()) throw ConfigError("output directory is not set");
  return cfg.out_dir / name;
}

SimilarityTable read_similarities(const PipelineConfig& cfg) {
  const auto p = out_file(cfg, files::kSimilarities);
  require_file(p, "similarity");
  return similarity_from_csv(read_text_file(p));
}

std::vector<ClassificationRow> read_classification(const PipelineConfig& cfg) {
  const auto p = out_file(cfg, files::kClassification);
  require_file(p, "classification");
  return classification_from_csv(read_text_file(p));
}

int run_stage(const char* name, const PipelineConfig& cfg, std::ostream& log,
              const std::function<int()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    cfg.validate();
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
    code = body();
  } catch (const std::exception& e) {
    log << name << ": " << e.what() << "\n";
    code = exit_code_for(e);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log << "stage " << name << ": " << secs << " s" << (code == kExitOk ? "" : " (failed)") << "\n";
  return code;
}

}  // namespace

Rng stage_rng(std::uint64_t seed, Stage stage) {
  return Rng(seed).split(static_cast<std::uint64_t>(stage));
}

// ---------------------------------------------------------------------------

std::string similarity_to_csv(const SimilarityTable& table) {
  CsvRow header{"id", "best_landmark", "score"};
  for (const auto& l : table.landmarks) header.push_back("sim_" + l);
  std::string out = csv_line(header);
  for (const auto& r : table.rows) {
    CsvRow row{r.image_id, r.best_landmark, format_double(r.score)};
    for (double s : r.scores) row.push_back(format_double(s));
    out += csv_line(row);
  }
  return out;
}

SimilarityTable similarity_from_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  const auto lines = csv_row_lines(text);
  SimilarityTable t;
  if (rows.empty()) throw ParseError("missing header", 1);
  const auto& h = rows.front();
  if (h.size() < 3 || h[0] != "id" || h[1] != "best_landmark" || h[2] != "score")
    throw ParseError("header must start with id,best_landmark,score", 1);
  for (std::size_t c = 3; c < h.size(); ++c) {
    if (h[c].rfind("sim_", 0) != 0) throw ParseError("column '" + h[c] + "' is not sim_<id>", 1);
    t.landmarks.push_back(h[c].substr(4));
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != h.size()) throw ParseError("expected " + std::to_string(h.size()) + " fields", lines[i]);
    SimilarityRow row;
    row.image_id = r[0];
    row.best_landmark = r[1];
    if (!parse_real(r[2], row.score)) throw ParseError("score is not a number", lines[i]);
    for (std::size_t c = 3; c < r.size(); ++c) {
      double v = 0.0;
      if (!parse_real(r[c], v)) throw ParseError("similarity is not a number", lines[i]);
      if (v < 0.0 || v > 1.0) throw RangeError("similarity outside [0, 1]", lines[i]);
      row.scores.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

SignatureStage run_signatures(const PipelineConfig& cfg) {
  require_dir(cfg.paths.images, "images");
  require_dir(cfg.paths.landmarks, "landmarks");
  const LandmarkSet landmarks = load_landmarks(cfg.paths.landmarks, cfg.signature);

  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(cfg.paths.images)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  SignatureStage out;
  for (const auto& l : landmarks.landmarks()) out.table.landmarks.push_back(l.id);
  const Rng base = stage_rng(cfg.require_seed(), Stage::kSignatures);

  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string id = images[i].filename().string();
    ImageSignature sig;
    try {
      sig = ImageSignature::from_grid(
          id, quantize_image(read_file_bytes(images[i]), cfg.signature.grid_size,
                             cfg.signature.levels));
    } catch (const DecodeError& e) {
      out.failures.push_back(id + ": " + e.what());
      continue;
    }
    SimilarityRow row;
    row.image_id = id;
    row.scores = landmark_scores(sig, landmarks, cfg.signature.trials, base.split(i),
                                 cfg.signature.aggregate);
    // first maximum = smallest id, landmarks are id-sorted
    const auto best = std::max_element(row.scores.begin(), row.scores.end()) - row.scores.begin();
    row.best_landmark = landmarks.landmarks()[static_cast<std::size_t>(best)].id;
    row.score = row.scores[static_cast<std::size_t>(best)];
    out.table.rows.push_back(std::move(row));
    out.signatures.push_back(std::move(sig));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Exemplar> parse_exemplars(std::string_view text) {
  const auto rows = parse_csv(text);
  const auto lines = csv_row_lines(text);
  if (rows.empty() || rows.front() != CsvRow{"id", "category"})
    throw ParseError("header must be id,category", 1);
  std::vector<Exemplar> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() == 1 && r[0].empty()) continue;
    if (r.size() != 2) throw ParseError("expected 2 fields", lines[i]);
    Exemplar e;
    e.id = r[0];
    if (!parse_int(r[1], e.category)) throw ParseError("category is not an integer", lines[i]);
    if (e.category < 1) throw RangeError("category must be >= 1", lines[i]);
    if (!seen.insert(e.id).second) throw ParseError("duplicate id '" + e.id + "'", lines[i]);
    out.push_back(std::move(e));
  }
  return out;
}

CsaimStage run_csaim(const PipelineConfig& cfg, const SimilarityTable& table,
                     const std::vector<Exemplar>& exemplars) {
  if (exemplars.empty()) throw InputError("exemplar file lists no samples");
  std::unordered_map<std::string, const SimilarityRow*> by_id;
  for (const auto& r : table.rows) by_id.emplace(r.image_id, &r);

  std::vector<LabeledSample> train;
  for (const auto& e : exemplars) {
    const auto it = by_id.find(e.id);
    if (it == by_id.end()) throw InputError("exemplar '" + e.id + "' has no similarity row");
    train.push_back({it->second->scores, e.category});
  }

  CsaimStage out;
  out.cells = build_memory_cells(train, cfg.csaim, cfg.memory,
                                 stage_rng(cfg.require_seed(), Stage::kCsaim), &out.report);
  for (const auto& r : table.rows) {
    ClassificationRow row;
    row.id = r.image_id;
    const auto res = classify(out.cells, r.scores, cfg.memory);
    row.category = res.category;
    row.cell = res.cell;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string classification_to_csv(const std::vector<ClassificationRow>& rows) {
  std::string out = "id,category,cell\n";
  for (const auto& r : rows) {
    out += csv_line({r.id, r.category ? std::to_string(*r.category) : std::string(),
                     r.cell ? std::to_string(*r.cell) : std::string()});
  }
  return out;
}

std::vector<ClassificationRow> classification_from_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  const auto lines = csv_row_lines(text);
  if (rows.empty() || rows.front() != CsvRow{"id", "category", "cell"})
    throw ParseError("header must be id,category,cell", 1);
  std::vector<ClassificationRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 3) throw ParseError("expected 3 fields", lines[i]);
    ClassificationRow row;
    row.id = r[0];
    if (!r[1].empty()) {
      int c = 0;
      if (!parse_int(r[1], c)) throw ParseError("category is not an integer", lines[i]);
      row.category = c;
    }
    if (!r[2].empty()) {
      int c = 0;
      if (!parse_int(r[2], c) || c < 0) throw ParseError("cell is not an index", lines[i]);
      row.cell = static_cast<std::size_t>(c);
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------

CorpusInputs load_corpus(const PipelineConfig& cfg, const SimilarityTable& table) {
  require_file(cfg.paths.records, "records");
  require_file(cfg.paths.vocabulary, "vocabulary");
  CorpusInputs c;
  c.records = read_records(cfg.paths.records);
  c.vocabulary = load_vocabulary(cfg.paths.vocabulary);

  std::unordered_map<std::string, double> by_image;
  for (const auto& r : table.rows) by_image.emplace(r.image_id, r.score);
  std::map<std::string, double> sims;
  for (const auto& r : c.records) {
    if (r.photo.empty()) {
      sims.emplace(r.id, 0.0);
    } else if (const auto it = by_image.find(r.photo); it != by_image.end()) {
      sims.emplace(r.id, it->second);
    }
  }
  c.features = build_features(c.records, sims, c.vocabulary, cfg.with_photos);
  return c;
}

GhsomTree run_ghsom(const PipelineConfig& cfg, const CorpusInputs& corpus) {
  return grow_hierarchy(to_dataset(corpus.features, cfg.with_photos), cfg.ghsom,
                        stage_rng(cfg.require_seed(), Stage::kGhsom));
}

std::map<std::string, std::optional<int>> record_categories(
    const CorpusInputs& corpus, const std::vector<ClassificationRow>& rows) {
  std::unordered_map<std::string, std::optional<int>> by_image;
  for (const auto& r : rows) by_image.emplace(r.id, r.category);
  std::map<std::string, std::optional<int>> out;
  for (const auto& r : corpus.records) {
    std::optional<int> cat;
    if (const auto it = by_image.find(r.photo); !r.photo.empty() && it != by_image.end())
      cat = it->second;
    out.emplace(r.id, cat);
  }
  return out;
}

DiscoveryResult run_discover(const PipelineConfig& cfg, const GhsomTree& tree,
                             const CorpusInputs& corpus,
                             const std::vector<ClassificationRow>& rows) {
  return discover(tree, corpus.features, cfg.discovery, record_categories(corpus, rows));
}

// ---------------------------------------------------------------------------

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const DecodeError*>(&e) || dynamic_cast<const LineError*>(&e) ||
      dynamic_cast<const MissingFeatureError*>(&e) || dynamic_cast<const DimensionError*>(&e)) {
    return kExitBadInput;
  }
  return kExitInternal;
}

int cmd_signatures(const PipelineConfig& cfg, std::ostream& log) {
  return run_stage("signatures", cfg, log, [&] {
    const auto stage = run_signatures(cfg);
    write_text_file(out_file(cfg, files::kSignatures), signatures_to_json(stage.signatures));
    write_text_file(out_file(cfg, files::kSimilarities), similarity_to_csv(stage.table));
    log << "signatures: " << stage.table.rows.size() << " images, "
        << stage.table.landmarks.size() << " landmarks\n";
    for (const auto& f : stage.failures) log << "signatures: cannot decode " << f << "\n";
    return stage.failures.empty() ? kExitOk : kExitBadInput;
  });
}

int cmd_csaim(const PipelineConfig& cfg, std::ostream& log) {
  return run_stage("csaim", cfg, log, [&] {
    const auto table = read_similarities(cfg);
    require_file(cfg.paths.exemplars, "exemplars");
    const auto exemplars = parse_exemplars(read_text_file(cfg.paths.exemplars));
    const auto stage = run_csaim(cfg, table, exemplars);
    write_text_file(out_file(cfg, files::kMemoryCells), memory_cells_to_json(stage.cells));
    write_text_file(out_file(cfg, files::kClassification), classification_to_csv(stage.rows));
    log << "csaim: " << stage.cells.size() << " memory cells from " << exemplars.size()
        << " exemplars\n";
    return kExitOk;
  });
}

int cmd_ghsom(const PipelineConfig& cfg, std::ostream& log) {
  return run_stage("ghsom", cfg, log, [&] {
    const auto corpus = load_corpus(cfg, read_similarities(cfg));
    const auto tree = run_ghsom(cfg, corpus);
    write_text_file(out_file(cfg, files::kTree), tree_to_json(tree));
    write_text_file(out_file(cfg, files::kTreeText), render_tree_text(tree));
    log << "ghsom: " << corpus.records.size() << " records, depth " << tree_depth(tree) << ", "
        << leaf_paths(tree).size() << " leaf units\n";
    return kExitOk;
  });
}

int cmd_discover(const PipelineConfig& cfg, std::ostream& log) {
  return run_stage("discover", cfg, log, [&] {
    const auto corpus = load_corpus(cfg, read_similarities(cfg));
    const auto tree_path = out_file(cfg, files::kTree);
    require_file(tree_path, "tree");
    const auto tree = tree_from_json(read_text_file(tree_path),
                                     to_dataset(corpus.features, cfg.with_photos));
    const auto result = run_discover(cfg, tree, corpus, read_classification(cfg));
    write_text_file(out_file(cfg, files::kDiscovery), discovery_to_csv(result));
    write_text_file(out_file(cfg, files::kDiscoveryUnits), unit_groups_to_csv(result));
    std::size_t cryptic = 0;
    for (const auto& r : result.rows) cryptic += r.group == Group::kCrypticSpot;
    log << "discover: " << cryptic << " cryptic of " << result.rows.size() << " records\n";
    return kExitOk;
  });
}

int cmd_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  for (auto* cmd : {&cmd_signatures, &cmd_csaim, &cmd_ghsom, &cmd_discover}) {
    if (const int code = cmd(cfg, log); code != kExitOk) return code;
  }
  return kExitOk;
}

}  // namespace cryptic
