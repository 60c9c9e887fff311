#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cryptic/image.hpp"
#include "cryptic/rng.hpp"

namespace cryptic {

using Symbol = std::uint8_t;
using SymbolSpan = std::span<const Symbol>;

/// Square grid of quantized gray levels in [0, levels).
struct IntensityGrid {
  int size = 0;
  int levels = 0;
  std::vector<Symbol> cells;  // row-major, size * size

  Symbol at(int row, int col) const { return cells[std::size_t(row) * size + col]; }
  Symbol& at(int row, int col) { return cells[std::size_t(row) * size + col]; }
  bool operator==(const IntensityGrid&) const = default;
};

enum class Aggregate { kMean, kMax };

struct SignatureConfig {
  int grid_size = 63;
  int levels = 8;
  int trials = 32;
  Aggregate aggregate = Aggregate::kMean;

  void validate() const;
};

/// Gray = round(0.299R + 0.587G + 0.114B); centre-crop to a square; bilinear
/// resize to size x size (half-pixel centres, edge clamp, rounded); then
/// symbol = floor(gray * levels / 256).
IntensityGrid quantize(const RgbImage& image, int size, int levels);
IntensityGrid quantize_image(std::span<const std::uint8_t> image_bytes, int size, int levels);

enum class Ring : int { kA = 0, kB = 1, kC = 2 };

constexpr int kWedges = 4;
constexpr int kRegionCount = 3 * kWedges;

/// One of the twelve ring/wedge sectors, rotated by psi in [0, pi/2).
struct RegionSpec {
  Ring ring = Ring::kA;
  int wedge = 0;
  double psi = 0.0;

  static RegionSpec from_index(int index, double psi = 0.0);
  int index() const { return static_cast<int>(ring) * kWedges + wedge; }
  std::string name() const;  // "A0" .. "C3"
};

/// Cell indices (row-major) of a region, in spiral order: squared radius
/// ascending, then angle ascending counter-clockwise from the wedge start
/// edge, then row-major index. Throws EmptyRegionError if no cell centre
/// falls inside the region.
std::vector<std::size_t> region_cells(int size, const RegionSpec& region);

struct PixelSequence {
  std::vector<Symbol> symbols;
  RegionSpec region;
};

PixelSequence extract_sequence(const IntensityGrid& grid, const RegionSpec& region);

/// Edit distance with unit insert/delete/substitute costs.
/// O(|s||t|) time, O(min(|s|,|t|)) memory.
std::size_t levenshtein(SymbolSpan s, SymbolSpan t);

/// 1 - levenshtein / max(|s|,|t|). Throws UndefinedSimilarityError when both
/// are empty.
double sequence_similarity(SymbolSpan s, SymbolSpan t);

/// Twelve psi = 0 sequences of one image plus the grid they were read from.
/// The grid cells inside the inscribed circle are fully determined by the
/// sequences, so a signature loaded from the cache can still be re-sampled at
/// any psi.
class ImageSignature {
 public:
  using Sequences = std::array<std::vector<Symbol>, kRegionCount>;

  ImageSignature() = default;

  static ImageSignature from_grid(std::string image_id, IntensityGrid grid);
  /// Rebuilds the grid from cached sequences; throws ConfigError when the
  /// lengths do not match the region geometry for `grid_size`.
  static ImageSignature from_sequences(std::string image_id, int grid_size, int levels,
                                       Sequences sequences);

  const std::string& image_id() const noexcept { return image_id_; }
  int grid_size() const noexcept { return grid_.size; }
  int levels() const noexcept { return grid_.levels; }
  const IntensityGrid& grid() const noexcept { return grid_; }
  const std::vector<Symbol>& sequence(Ring ring, int wedge) const {
    return sequences_[static_cast<std::size_t>(static_cast<int>(ring) * kWedges + wedge)];
  }
  const Sequences& sequences() const noexcept { return sequences_; }

  PixelSequence extract(const RegionSpec& region) const {
    return extract_sequence(grid_, region);
  }

  bool operator==(const ImageSignature&) const = default;

 private:
  std::string image_id_;
  IntensityGrid grid_;
  Sequences sequences_;
};

/// Mean (or max) of `trials` sequence similarities. Each trial draws, in this
/// order, psi = rng.uniform(0, pi/2) and a region index rng.index(12)
/// (ring = index / 4, wedge = index % 4). Throws ConfigError if the two
/// signatures differ in grid size or alphabet, or trials < 1.
double signature_similarity(const ImageSignature& a, const ImageSignature& b, int trials,
                            Rng& rng, Aggregate aggregate = Aggregate::kMean);

struct Landmark {
  std::string id;
  ImageSignature signature;
};

class LandmarkSet {
 public:
  LandmarkSet() = default;
  /// Throws ConfigError when empty or ids repeat. Stored sorted by id.
  explicit LandmarkSet(std::vector<Landmark> landmarks);

  const std::vector<Landmark>& landmarks() const noexcept { return landmarks_; }
  std::size_t size() const noexcept { return landmarks_.size(); }
  bool empty() const noexcept { return landmarks_.empty(); }

 private:
  std::vector<Landmark> landmarks_;
};

/// Reads `manifest.csv` (header `landmark_id,filename`) from `dir` and builds
/// signatures for the listed images.
LandmarkSet load_landmarks(const std::filesystem::path& dir, const SignatureConfig& cfg);

struct LandmarkMatch {
  std::string landmark_id;
  double score = 0.0;
};

/// Score against every landmark, in landmark-id order. Every landmark is
/// compared with its own copy of `rng`, so all of them see the same trials.
std::vector<double> landmark_scores(const ImageSignature& sig, const LandmarkSet& landmarks,
                                    int trials, const Rng& rng,
                                    Aggregate aggregate = Aggregate::kMean);

/// Best-matching landmark; ties go to the lexicographically smallest id.
LandmarkMatch landmark_similarity(const ImageSignature& sig, const LandmarkSet& landmarks,
                                  int trials, const Rng& rng,
                                  Aggregate aggregate = Aggregate::kMean);

/// Signature cache document (JSON). See docs/formats.md.
std::string signatures_to_json(const std::vector<ImageSignature>& signatures);
std::vector<ImageSignature> signatures_from_json(const std::string& text);

}  // namespace cryptic
