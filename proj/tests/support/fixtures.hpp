#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "cryptic/csv.hpp"
#include "cryptic/ghsom.hpp"
#include "cryptic/immune.hpp"
#include "cryptic/rng.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return CRYPTIC_TEST_DATA_DIR; }
inline std::filesystem::path repo_dir() { return CRYPTIC_SOURCE_DIR; }

// x1 AND x2 over {0,1}^2.
inline cryptic::TrainingSet and_set() {
  cryptic::TrainingSet ts;
  ts.samples = {{{0, 0}, 0}, {{0, 1}, 0}, {{1, 0}, 0}, {{1, 1}, 1}};
  return ts;
}

inline double normal(cryptic::Rng& g) {
  const double u1 = g.uniform_open(0.0, 1.0);
  const double u2 = g.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Unit Gaussians at (0,0) and (10,10), 30 samples each, categories 0 and 1.
inline std::vector<cryptic::LabeledSample> two_gaussians(std::uint64_t seed) {
  cryptic::Rng g(1000 + seed);
  std::vector<cryptic::LabeledSample> out;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 30; ++i) {
      const double x = c * 10 + normal(g);
      const double y = c * 10 + normal(g);
      out.push_back({{x, y}, c});
    }
  }
  return out;
}

// a = tr_num / 2: with the default a = 1 almost every clone is receptor
// edited once affinities reach the tens, and RECSA stalls on 60 samples.
inline cryptic::CsaimConfig gaussian_config() {
  cryptic::CsaimConfig cfg;
  cfg.a = 30.0;
  return cfg;
}

// 150 samples, 4 features, three clusters (committed CSV).
inline cryptic::Dataset iris_like() {
  const auto rows = cryptic::read_csv_file(data_dir() / "iris_like.csv");
  cryptic::Dataset d;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    d.ids.push_back(rows[i][0]);
    std::vector<double> v;
    for (int c = 1; c <= 4; ++c) v.push_back(std::stod(rows[i][c]));
    d.vectors.push_back(std::move(v));
  }
  return d;
}

}  // namespace fixtures
