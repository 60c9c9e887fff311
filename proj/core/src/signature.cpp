#include "cryptic/signature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cryptic/csv.hpp"
#include "cryptic/errors.hpp"

namespace cryptic {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CellKey {
  long long radius_sq4;  // (2r)^2 in half-cell units, exact
  double angle;          // counter-clockwise from the wedge start, [0, pi/2)
  std::size_t index;
};

Ring ring_of(long long q, long long s) {
  // R = S/2, q = 4 r^2. Ring A: r < R/3, B: R/3 <= r < 2R/3, C: 2R/3 <= r <= R.
  const long long s2 = s * s;
  if (9 * q < s2) return Ring::kA;
  if (9 * q < 4 * s2) return Ring::kB;
  return Ring::kC;
}

}  // namespace

void SignatureConfig::validate() const {
  if (grid_size < 9) throw ConfigError("grid_size must be >= 9");
  if (levels < 2 || levels > 256) throw ConfigError("levels must be in [2, 256]");
  if (trials < 1) throw ConfigError("trials must be >= 1");
}

IntensityGrid quantize(const RgbImage& image, int size, int levels) {
  if (size < 1) throw ConfigError("grid size must be positive");
  if (levels < 2 || levels > 256) throw ConfigError("levels must be in [2, 256]");
  if (image.width <= 0 || image.height <= 0) throw DecodeError("image has no pixels");

  const int side = std::min(image.width, image.height);
  const int x0 = (image.width - side) / 2;
  const int y0 = (image.height - side) / 2;

  std::vector<int> gray(std::size_t(side) * side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const std::uint8_t* p = image.at(x0 + x, y0 + y);
      gray[std::size_t(y) * side + x] = (299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000;
    }
  }

  const double scale = static_cast<double>(side) / size;
  auto source = [&](int dst) {
    double v = (dst + 0.5) * scale - 0.5;
    return std::clamp(v, 0.0, static_cast<double>(side - 1));
  };

  IntensityGrid grid{size, levels, std::vector<Symbol>(std::size_t(size) * size)};
  for (int row = 0; row < size; ++row) {
    const double sy = source(row);
    const int ya = static_cast<int>(std::floor(sy));
    const int yb = std::min(ya + 1, side - 1);
    const double fy = sy - ya;
    for (int col = 0; col < size; ++col) {
      const double sx = source(col);
      const int xa = static_cast<int>(std::floor(sx));
      const int xb = std::min(xa + 1, side - 1);
      const double fx = sx - xa;
      const double top = gray[std::size_t(ya) * side + xa] * (1.0 - fx) +
                         gray[std::size_t(ya) * side + xb] * fx;
      const double bottom = gray[std::size_t(yb) * side + xa] * (1.0 - fx) +
                            gray[std::size_t(yb) * side + xb] * fx;
      const int g = std::clamp(static_cast<int>(std::floor(top * (1.0 - fy) + bottom * fy + 0.5)),
                               0, 255);
      grid.at(row, col) = static_cast<Symbol>(g * levels / 256);
    }
  }
  return grid;
}

IntensityGrid quantize_image(std::span<const std::uint8_t> image_bytes, int size, int levels) {
  if (size < 9) throw ConfigError("grid size must be >= 9");
  if (levels < 2 || levels > 256) throw ConfigError("levels must be in [2, 256]");
  return quantize(decode_image(image_bytes), size, levels);
}

RegionSpec RegionSpec::from_index(int index, double psi) {
  if (index < 0 || index >= kRegionCount) throw ConfigError("region index out of range");
  return RegionSpec{static_cast<Ring>(index / kWedges), index % kWedges, psi};
}

std::string RegionSpec::name() const {
  std::string out(1, static_cast<char>('A' + static_cast<int>(ring)));
  out += static_cast<char>('0' + wedge);
  return out;
}

std::vector<std::size_t> region_cells(int size, const RegionSpec& region) {
  if (region.wedge < 0 || region.wedge >= kWedges) throw ConfigError("wedge must be in [0, 3]");
  if (!(region.psi >= 0.0 && region.psi < kHalfPi)) throw ConfigError("psi must be in [0, pi/2)");

  const long long s = size;
  std::vector<CellKey> keys;
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const long long dx = 2LL * col + 1 - s;
      const long long dy = s - 2LL * row - 1;  // y grows upwards
      const long long q = dx * dx + dy * dy;
      if (q > s * s) continue;  // outside the inscribed circle
      if (ring_of(q, s) != region.ring) continue;

      double a = std::atan2(static_cast<double>(dy), static_cast<double>(dx)) - region.psi;
      if (a < 0.0) a += kTwoPi;
      if (a >= kTwoPi) a -= kTwoPi;
      const int wedge = std::min(static_cast<int>(a / kHalfPi), kWedges - 1);
      if (wedge != region.wedge) continue;
      keys.push_back({q, a, std::size_t(row) * size + col});
    }
  }
  if (keys.empty()) {
    throw EmptyRegionError("region " + region.name() + " has no cells at grid size " +
                           std::to_string(size));
  }
  std::sort(keys.begin(), keys.end(), [](const CellKey& l, const CellKey& r) {
    if (l.radius_sq4 != r.radius_sq4) return l.radius_sq4 < r.radius_sq4;
    if (l.angle != r.angle) return l.angle < r.angle;
    return l.index < r.index;
  });
  std::vector<std::size_t> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(k.index);
  return out;
}

PixelSequence extract_sequence(const IntensityGrid& grid, const RegionSpec& region) {
  const auto cells = region_cells(grid.size, region);
  PixelSequence seq{{}, region};
  seq.symbols.reserve(cells.size());
  for (std::size_t idx : cells) seq.symbols.push_back(grid.cells[idx]);
  return seq;
}

std::size_t levenshtein(SymbolSpan s, SymbolSpan t) {
  if (s.size() < t.size()) std::swap(s, t);
  // t is the shorter one; a single row of |t|+1 entries.
  std::vector<std::size_t> row(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (s[i - 1] != t[j - 1] ? 1 : 0);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[t.size()];
}

double sequence_similarity(SymbolSpan s, SymbolSpan t) {
  const std::size_t longest = std::max(s.size(), t.size());
  if (longest == 0) throw UndefinedSimilarityError("similarity of two empty sequences");
  return 1.0 - static_cast<double>(levenshtein(s, t)) / static_cast<double>(longest);
}

ImageSignature ImageSignature::from_grid(std::string image_id, IntensityGrid grid) {
  ImageSignature sig;
  sig.image_id_ = std::move(image_id);
  for (int r = 0; r < kRegionCount; ++r) {
    sig.sequences_[r] = extract_sequence(grid, RegionSpec::from_index(r)).symbols;
  }
  // Cells outside the inscribed circle never enter any sequence; zero them so
  // a signature rebuilt from its sequences compares equal.
  const long long s = grid.size;
  for (int row = 0; row < grid.size; ++row) {
    for (int col = 0; col < grid.size; ++col) {
      const long long dx = 2LL * col + 1 - s;
      const long long dy = s - 2LL * row - 1;
      if (dx * dx + dy * dy > s * s) grid.at(row, col) = 0;
    }
  }
  sig.grid_ = std::move(grid);
  return sig;
}

ImageSignature ImageSignature::from_sequences(std::string image_id, int grid_size, int levels,
                                              Sequences sequences) {
  if (grid_size < 9) throw ConfigError("grid_size must be >= 9");
  if (levels < 2 || levels > 256) throw ConfigError("levels must be in [2, 256]");
  IntensityGrid grid{grid_size, levels, std::vector<Symbol>(std::size_t(grid_size) * grid_size, 0)};
  for (int r = 0; r < kRegionCount; ++r) {
    const auto cells = region_cells(grid_size, RegionSpec::from_index(r));
    const auto& seq = sequences[r];
    if (seq.size() != cells.size()) {
      throw ConfigError("sequence " + RegionSpec::from_index(r).name() + " of '" + image_id +
                        "' has " + std::to_string(seq.size()) + " symbols, expected " +
                        std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (seq[i] >= levels) throw ConfigError("symbol out of alphabet in '" + image_id + "'");
      grid.cells[cells[i]] = seq[i];
    }
  }
  ImageSignature sig;
  sig.image_id_ = std::move(image_id);
  sig.grid_ = std::move(grid);
  sig.sequences_ = std::move(sequences);
  return sig;
}

double signature_similarity(const ImageSignature& a, const ImageSignature& b, int trials,
                            Rng& rng, Aggregate aggregate) {
  if (a.grid_size() != b.grid_size() || a.levels() != b.levels()) {
    throw ConfigError("signatures built with different grid size or alphabet");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");

  double acc = aggregate == Aggregate::kMean ? 0.0 : -1.0;
  std::vector<Symbol> sa, sb;
  for (int t = 0; t < trials; ++t) {
    const double psi = rng.uniform(0.0, kHalfPi);
    const auto region = RegionSpec::from_index(static_cast<int>(rng.index(kRegionCount)), psi);
    const auto cells = region_cells(a.grid_size(), region);
    sa.clear();
    sb.clear();
    for (std::size_t idx : cells) {
      sa.push_back(a.grid().cells[idx]);
      sb.push_back(b.grid().cells[idx]);
    }
    const double sim = sequence_similarity(sa, sb);
    if (aggregate == Aggregate::kMean) {
      acc += sim;
    } else {
      acc = std::max(acc, sim);
    }
  }
  return aggregate == Aggregate::kMean ? acc / trials : acc;
}

LandmarkSet::LandmarkSet(std::vector<Landmark> landmarks) : landmarks_(std::move(landmarks)) {
  if (landmarks_.empty()) throw ConfigError("landmark set is empty");
  std::sort(landmarks_.begin(), landmarks_.end(),
            [](const Landmark& l, const Landmark& r) { return l.id < r.id; });
  for (std::size_t i = 1; i < landmarks_.size(); ++i) {
    if (landmarks_[i].id == landmarks_[i - 1].id) {
      throw ConfigError("duplicate landmark id '" + landmarks_[i].id + "'");
    }
  }
}

LandmarkSet load_landmarks(const std::filesystem::path& dir, const SignatureConfig& cfg) {
  cfg.validate();
  const auto manifest = dir / "manifest.csv";
  const auto table = read_csv_file(manifest);
  if (table.empty() || table.front().size() < 2 || table.front()[0] != "landmark_id" ||
      table.front()[1] != "filename") {
    throw ConfigError("'" + manifest.string() + "' must start with header landmark_id,filename");
  }
  std::vector<Landmark> out;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != 2) throw ParseError("expected 2 fields", i + 1);
    const auto bytes = read_file_bytes(dir / row[1]);
    out.push_back({row[0], ImageSignature::from_grid(
                               row[0], quantize_image(bytes, cfg.grid_size, cfg.levels))});
  }
  return LandmarkSet(std::move(out));
}

std::vector<double> landmark_scores(const ImageSignature& sig, const LandmarkSet& landmarks,
                                    int trials, const Rng& rng, Aggregate aggregate) {
  if (landmarks.empty()) throw ConfigError("landmark set is empty");
  std::vector<double> scores;
  scores.reserve(landmarks.size());
  for (const auto& lm : landmarks.landmarks()) {
    Rng local = rng;
    scores.push_back(signature_similarity(sig, lm.signature, trials, local, aggregate));
  }
  return scores;
}

LandmarkMatch landmark_similarity(const ImageSignature& sig, const LandmarkSet& landmarks,
                                  int trials, const Rng& rng, Aggregate aggregate) {
  const auto scores = landmark_scores(sig, landmarks, trials, rng, aggregate);
  const auto& lms = landmarks.landmarks();
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    // lms is sorted by id, so strict > keeps the smallest id on ties.
    if (scores[i] > scores[best]) best = i;
  }
  return {lms[best].id, scores[best]};
}

std::string signatures_to_json(const std::vector<ImageSignature>& signatures) {
  nlohmann::ordered_json doc;
  doc["format"] = "cryptic-signatures";
  doc["version"] = 1;
  auto& arr = doc["signatures"] = nlohmann::ordered_json::array();
  for (const auto& sig : signatures) {
    nlohmann::ordered_json rec;
    rec["image_id"] = sig.image_id();
    rec["grid_size"] = sig.grid_size();
    rec["levels"] = sig.levels();
    auto& seqs = rec["sequences"] = nlohmann::ordered_json::object();
    for (int r = 0; r < kRegionCount; ++r) {
      std::string joined;
      for (Symbol s : sig.sequences()[r]) {
        if (!joined.empty()) joined += ',';
        joined += std::to_string(static_cast<int>(s));
      }
      seqs[RegionSpec::from_index(r).name()] = joined;
    }
    arr.push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

std::vector<ImageSignature> signatures_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("signature cache: ") + e.what());
  }
  if (doc.value("format", "") != "cryptic-signatures") {
    throw ConfigError("signature cache: unexpected format tag");
  }
  std::vector<ImageSignature> out;
  try {
    for (const auto& rec : doc.at("signatures")) {
      ImageSignature::Sequences seqs;
      for (int r = 0; r < kRegionCount; ++r) {
        const std::string joined = rec.at("sequences").at(RegionSpec::from_index(r).name());
        std::stringstream ss(joined);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const int v = std::stoi(item);
          if (v < 0 || v > 255) throw ConfigError("signature cache: symbol out of range");
          seqs[r].push_back(static_cast<Symbol>(v));
        }
      }
      out.push_back(ImageSignature::from_sequences(rec.at("image_id").get<std::string>(),
                                                   rec.at("grid_size").get<int>(),
                                                   rec.at("levels").get<int>(), std::move(seqs)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("signature cache: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ConfigError("signature cache: malformed symbol list");
  }
  return out;
}

}  // namespace cryptic
