#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "cryptic/errors.hpp"
#include "cryptic/signature.hpp"
#include "fixtures.hpp"

using namespace cryptic;

namespace {

// Straight from the geometry: pixel centres relative to the grid centre, y up,
// rings by radius against R/3 and 2R/3, wedge by angle from psi.
std::vector<std::size_t> oracle_region(int S, Ring ring, int wedge, double psi) {
  struct Cell {
    double r2, angle;
    std::size_t index;
  };
  std::vector<Cell> cells;
  const double c = (S - 1) / 2.0;
  const double R = S / 2.0;
  for (int row = 0; row < S; ++row) {
    for (int col = 0; col < S; ++col) {
      const double x = col - c;
      const double y = c - row;
      const double r2 = x * x + y * y;
      if (r2 > R * R) continue;
      Ring which = Ring::kC;
      if (36.0 * r2 < double(S) * S) which = Ring::kA;
      else if (9.0 * r2 < double(S) * S) which = Ring::kB;
      if (which != ring) continue;
      double a = std::atan2(y, x) - psi;
      while (a < 0) a += 2 * std::numbers::pi;
      while (a >= 2 * std::numbers::pi) a -= 2 * std::numbers::pi;
      int w = int(a / (std::numbers::pi / 2));
      if (w > 3) w = 3;
      if (w != wedge) continue;
      cells.push_back({r2, a, std::size_t(row) * S + col});
    }
  }
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& l, const Cell& r) {
    if (l.r2 != r.r2) return l.r2 < r.r2;
    if (l.angle != r.angle) return l.angle < r.angle;
    return l.index < r.index;
  });
  std::vector<std::size_t> out;
  for (const auto& cell : cells) out.push_back(cell.index);
  return out;
}

std::size_t naive_lev(const std::vector<Symbol>& s, const std::vector<Symbol>& t, std::size_t i,
                      std::size_t j, std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (std::min(i, j) == 0) return std::max(i, j);
  const auto key = std::pair{i, j};
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const std::size_t v = std::min({naive_lev(s, t, i - 1, j, memo) + 1, naive_lev(s, t, i, j - 1, memo) + 1,
                                  naive_lev(s, t, i - 1, j - 1, memo) + (s[i - 1] != t[j - 1])});
  memo[key] = v;
  return v;
}

std::vector<Symbol> random_seq(Rng& rng, std::size_t max_len, int alphabet) {
  std::vector<Symbol> s(rng.index(max_len + 1));
  for (auto& x : s) x = static_cast<Symbol>(rng.index(std::size_t(alphabet)));
  return s;
}

IntensityGrid random_grid(Rng& rng, int S, int L) {
  IntensityGrid g{S, L, std::vector<Symbol>(std::size_t(S) * S)};
  for (auto& c : g.cells) c = static_cast<Symbol>(rng.index(std::size_t(L)));
  return g;
}

IntensityGrid load_grid9() {
  std::ifstream in(fixtures::data_dir() / "grid9.txt");
  IntensityGrid g{9, 8, {}};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char ch : line) g.cells.push_back(static_cast<Symbol>(ch - '0'));
  }
  REQUIRE(g.cells.size() == 81);
  return g;
}

RgbImage flat_image(int w, int h, std::uint8_t v) {
  RgbImage img(w, h);
  std::fill(img.pixels.begin(), img.pixels.end(), v);
  return img;
}

std::vector<Symbol> to_syms(std::string_view s) {
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("quantize: flat images and the 2x2 hand example") {
  const auto black = quantize(flat_image(10, 10, 0), 9, 4);
  CHECK(std::all_of(black.cells.begin(), black.cells.end(), [](Symbol s) { return s == 0; }));
  const auto white = quantize(flat_image(10, 10, 255), 9, 4);
  CHECK(std::all_of(white.cells.begin(), white.cells.end(), [](Symbol s) { return s == 3; }));

  RgbImage img(2, 2);
  const std::uint8_t vals[4] = {0, 64, 128, 192};
  for (int i = 0; i < 4; ++i) std::fill_n(img.at(i % 2, i / 2), 3, vals[i]);
  const auto g = quantize(img, 2, 4);
  CHECK(g.cells == std::vector<Symbol>{0, 1, 2, 3});
}

TEST_CASE("quantize: gray weights, centre crop and 2x box average") {
  // Pure red 255 -> gray round(76.245) = 76 -> 76*256/256 = 76.
  RgbImage red(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) red.at(x, y)[0] = 255;
  CHECK(quantize(red, 4, 256).cells.front() == 76);

  // 6x4 image, crop keeps columns 1..4. Halving samples at 0.5 + 2k, so each
  // output is the mean of a 2x2 block.
  RgbImage img(6, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) std::fill_n(img.at(x, y), 3, std::uint8_t(10 * x + 50 * y));
  const auto g = quantize(img, 2, 256);
  // block (x 1..2, y 0..1): 10,20,60,70 -> 40
  CHECK(int(g.at(0, 0)) == 40);
  CHECK(int(g.at(0, 1)) == 60);
  CHECK(int(g.at(1, 0)) == 140);
  CHECK(int(g.at(1, 1)) == 160);
}

TEST_CASE("quantize_image: argument and decode errors") {
  const auto png = encode_png(flat_image(12, 12, 100));
  CHECK_THROWS_AS(quantize_image(png, 8, 8), ConfigError);
  CHECK_THROWS_AS(quantize_image(png, 9, 1), ConfigError);
  CHECK_THROWS_AS(quantize_image(png, 9, 257), ConfigError);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  CHECK_THROWS_AS(quantize_image(junk, 9, 8), DecodeError);
  const auto g = quantize_image(png, 9, 8);
  CHECK(g.size == 9);
  CHECK(g.cells.front() == 100 * 8 / 256);
}

TEST_CASE("png and jpeg decode round trip") {
  RgbImage img(7, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = std::uint8_t(i * 37);
  const auto back = decode_image(encode_png(img));
  CHECK(back.width == 7);
  CHECK(back.pixels == img.pixels);
  const auto jpg = decode_image(encode_jpeg(flat_image(16, 8, 128)));
  CHECK(jpg.width == 16);
  CHECK(jpg.height == 8);
  CHECK(std::abs(int(jpg.pixels[0]) - 128) <= 2);
}

TEST_CASE("9x9 fixture: ring sequences checked by hand") {
  const auto g = load_grid9();
  CHECK(extract_sequence(g, {Ring::kA, 0, 0.0}).symbols == std::vector<Symbol>{0, 1, 6});
  CHECK(extract_sequence(g, {Ring::kA, 1, 0.0}).symbols == std::vector<Symbol>{5, 4});
  CHECK(extract_sequence(g, {Ring::kA, 2, 0.0}).symbols == std::vector<Symbol>{7, 2});
  CHECK(extract_sequence(g, {Ring::kA, 3, 0.0}).symbols == std::vector<Symbol>{3, 4});
  CHECK(extract_sequence(g, {Ring::kB, 0, 0.0}).symbols == std::vector<Symbol>{2, 7, 3, 4});
  // centre cell first
  CHECK(region_cells(9, {Ring::kA, 0, 0.0}).front() == 40);
}

TEST_CASE("region cells match brute-force enumeration") {
  Rng rng(5);
  for (int S : {9, 10, 11, 12, 16, 21, 32, 63}) {
    for (int trial = 0; trial < 4; ++trial) {
      const double psi = trial == 0 ? 0.0 : rng.uniform(0.0, std::numbers::pi / 2);
      std::vector<std::size_t> all;
      for (int r = 0; r < kRegionCount; ++r) {
        const auto spec = RegionSpec::from_index(r, psi);
        const auto cells = region_cells(S, spec);
        CHECK(!cells.empty());
        CHECK(cells == oracle_region(S, spec.ring, spec.wedge, psi));
        all.insert(all.end(), cells.begin(), cells.end());
      }
      // bijection onto the inscribed disc
      std::set<std::size_t> uniq(all.begin(), all.end());
      CHECK(uniq.size() == all.size());
      std::size_t disc = 0;
      const double c = (S - 1) / 2.0;
      for (int row = 0; row < S; ++row)
        for (int col = 0; col < S; ++col)
          disc += (col - c) * (col - c) + (row - c) * (row - c) <= S * S / 4.0;
      CHECK(all.size() == disc);
    }
  }
}

TEST_CASE("region errors") {
  CHECK_THROWS_AS(region_cells(2, {Ring::kA, 0, 0.0}), EmptyRegionError);
  CHECK_THROWS_AS(region_cells(9, {Ring::kA, 4, 0.0}), ConfigError);
  CHECK_THROWS_AS(region_cells(9, {Ring::kA, 0, std::numbers::pi / 2}), ConfigError);
  CHECK_THROWS_AS(region_cells(9, {Ring::kA, 0, -0.1}), ConfigError);
  CHECK(RegionSpec::from_index(7).name() == "B3");
}

TEST_CASE("extract_sequence is deterministic") {
  Rng rng(9);
  const auto g = random_grid(rng, 21, 8);
  const RegionSpec spec{Ring::kC, 2, 0.3};
  CHECK(extract_sequence(g, spec).symbols == extract_sequence(g, spec).symbols);
}

TEST_CASE("levenshtein: base cases and kitten/sitting") {
  const std::vector<Symbol> empty;
  const auto three = to_syms("abc");
  CHECK(levenshtein(empty, three) == 3);
  CHECK(levenshtein(three, empty) == 3);
  CHECK(levenshtein(three, three) == 0);
  CHECK(levenshtein(to_syms("kitten"), to_syms("sitting")) == 3);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  const auto k = to_syms("kitten"), s = to_syms("sitting");
  CHECK(naive_lev(k, s, k.size(), s.size(), memo) == 3);
}

TEST_CASE("levenshtein equals the memoised recursion on random pairs") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const int alphabet = 1 + int(rng.index(8));
    const auto s = random_seq(rng, 40, alphabet);
    const auto t = random_seq(rng, 40, alphabet);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    REQUIRE(levenshtein(s, t) == naive_lev(s, t, s.size(), t.size(), memo));
  }
}

TEST_CASE("sequence_similarity") {
  CHECK(sequence_similarity(to_syms("abcd"), to_syms("abcd")) == 1.0);
  CHECK(sequence_similarity(to_syms("aaaa"), to_syms("bbbb")) == 0.0);
  CHECK(sequence_similarity(to_syms("kitten"), to_syms("sitting")) == doctest::Approx(1.0 - 3.0 / 7.0));
  const std::vector<Symbol> empty;
  CHECK_THROWS_AS(sequence_similarity(empty, empty), UndefinedSimilarityError);
  CHECK(sequence_similarity(empty, to_syms("a")) == 0.0);
}

TEST_CASE("signature_similarity: self, determinism, symmetry") {
  Rng rng(3);
  const auto a = ImageSignature::from_grid("a", random_grid(rng, 31, 8));
  const auto b = ImageSignature::from_grid("b", random_grid(rng, 31, 8));
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL}) {
    Rng r1(seed), r2(seed), r3(seed);
    CHECK(signature_similarity(a, a, 16, r1) == 1.0);
    const double ab = signature_similarity(a, b, 16, r2);
    const double ba = signature_similarity(b, a, 16, r3);
    CHECK(ab == ba);
    Rng r4(seed);
    CHECK(signature_similarity(a, b, 16, r4) == ab);
  }
  const auto other = ImageSignature::from_grid("c", random_grid(rng, 33, 8));
  Rng r(1);
  CHECK_THROWS_AS(signature_similarity(a, other, 4, r), ConfigError);
  CHECK_THROWS_AS(signature_similarity(a, b, 0, r), ConfigError);
}

TEST_CASE("signature_similarity equals a straight-line trial loop") {
  Rng gen(17);
  const auto ga = random_grid(gen, 27, 8);
  auto gb = ga;
  for (std::size_t i = 0; i < gb.cells.size(); i += 3) gb.cells[i] = Symbol((gb.cells[i] + 1) % 8);
  const auto a = ImageSignature::from_grid("a", ga);
  const auto b = ImageSignature::from_grid("b", gb);

  Rng oracle(42);
  double total = 0.0, best = -1.0;
  for (int t = 0; t < 64; ++t) {
    const double psi = oracle.uniform(0.0, std::numbers::pi / 2);
    const int idx = int(oracle.index(12));
    const auto cells = oracle_region(27, Ring(idx / 4), idx % 4, psi);
    std::vector<Symbol> sa, sb;
    for (auto c : cells) {
      sa.push_back(a.grid().cells[c]);
      sb.push_back(b.grid().cells[c]);
    }
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    const double sim = 1.0 - double(levenshtein(sa, sb)) / double(std::max(sa.size(), sb.size()));
    total += sim;
    best = std::max(best, sim);
  }
  Rng r(42);
  CHECK(signature_similarity(a, b, 64, r) == doctest::Approx(total / 64).epsilon(1e-12));
  Rng r2(42);
  CHECK(signature_similarity(a, b, 64, r2, Aggregate::kMax) == best);
}

TEST_CASE("signature cache round trip and re-extraction at any psi") {
  Rng rng(23);
  const auto sig = ImageSignature::from_grid("img-1", random_grid(rng, 63, 8));
  const auto back = signatures_from_json(signatures_to_json({sig}));
  REQUIRE(back.size() == 1);
  CHECK(back[0] == sig);
  const auto rebuilt = ImageSignature::from_sequences("img-1", 63, 8, sig.sequences());
  for (double psi : {0.1, 0.7, 1.5}) {
    const RegionSpec spec{Ring::kB, 1, psi};
    CHECK(rebuilt.extract(spec).symbols == sig.extract(spec).symbols);
  }
  auto bad = sig.sequences();
  bad[0].pop_back();
  CHECK_THROWS_AS(ImageSignature::from_sequences("x", 63, 8, bad), ConfigError);
}

TEST_CASE("landmark_similarity: identity, single landmark, argmax and ties") {
  Rng rng(29);
  std::vector<Landmark> lms;
  for (const char* id : {"gate", "pagoda", "shrine"})
    lms.push_back({id, ImageSignature::from_grid(id, random_grid(rng, 21, 8))});
  const LandmarkSet set(lms);
  const Rng base(7);

  const auto own = landmark_similarity(lms[1].signature, set, 8, base);
  CHECK(own.landmark_id == "pagoda");
  CHECK(own.score == 1.0);

  const auto probe = ImageSignature::from_grid("p", random_grid(rng, 21, 8));
  const auto single = landmark_similarity(probe, LandmarkSet({lms[2]}), 8, base);
  CHECK(single.landmark_id == "shrine");

  // brute force over the set, each landmark with a fresh copy of the stream
  std::string best_id;
  double best = -1.0;
  for (const auto& lm : set.landmarks()) {
    Rng local = base;
    const double s = signature_similarity(probe, lm.signature, 8, local);
    if (s > best) {
      best = s;
      best_id = lm.id;
    }
  }
  const auto got = landmark_similarity(probe, set, 8, base);
  CHECK(got.landmark_id == best_id);
  CHECK(got.score == best);

  // identical signatures under two ids: the smaller id wins
  const LandmarkSet twins({{"zeta", lms[0].signature}, {"alpha", lms[0].signature}});
  CHECK(landmark_similarity(lms[0].signature, twins, 4, base).landmark_id == "alpha");

  CHECK_THROWS_AS(LandmarkSet(std::vector<Landmark>{}), ConfigError);
  CHECK_THROWS_AS(LandmarkSet({lms[0], lms[0]}), ConfigError);
}

TEST_CASE("corruption lowers similarity") {
  Rng rng(31);
  const auto grid = random_grid(rng, 63, 8);
  const auto base = ImageSignature::from_grid("g", grid);
  double prev = 2.0;
  for (double frac : {0.0, 0.1, 0.5}) {
    auto g = grid;
    Rng flip(99);
    for (auto& c : g.cells)
      if (flip.uniform() < frac) c = Symbol((c + 1 + flip.index(7)) % 8);
    Rng r(5);
    const double s = signature_similarity(base, ImageSignature::from_grid("c", g), 32, r);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("load_landmarks reads the synthetic manifest") {
  SignatureConfig cfg;
  const auto set = load_landmarks(fixtures::repo_dir() / "data/synthetic/landmarks", cfg);
  CHECK(set.size() == 6);
  CHECK(set.landmarks().front().id == "bridge");
  CHECK_THROWS_AS(load_landmarks(fixtures::data_dir() / "no-such-dir", cfg), InputError);
}
