#include "cryptic/immune.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "cryptic/errors.hpp"

namespace cryptic {
namespace {

double dot(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

int round_half_away(long long num, long long den) {
  // num, den >= 0
  return static_cast<int>((2 * num + den) / (2 * den));
}

void evaluate(Antibody& ab, const TrainingSet& data, double e_sim) {
  ab.affinity = affinity(ab, data, e_sim);
}

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void TrainingSet::validate() const {
  if (samples.empty()) throw StateError("training set is empty");
  const std::size_t k = samples.front().x.size();
  if (k == 0) throw DimensionError("samples have zero dimension");
  for (const auto& s : samples) {
    if (s.x.size() != k) throw DimensionError("ragged training set");
    if (!finite_all(s.x)) throw StateError("non-finite sample value");
    if (s.target != 0 && s.target != 1) throw StateError("target must be 0 or 1");
  }
}

void CsaimConfig::validate() const {
  if (n < 1 || n > m) throw ConfigError("csaim: need 1 <= n <= m");
  if (q < 1) throw ConfigError("csaim: q must be >= 1");
  if (!(a > 0.0)) throw ConfigError("csaim: a must be > 0");
  if (!(anneal_alpha > 0.0)) throw ConfigError("csaim: anneal_alpha must be > 0");
  if (!(replace_beta > 0.0 && replace_beta < 1.0)) {
    throw ConfigError("csaim: replace_beta must be in (0, 1)");
  }
  if (replace_period < 1) throw ConfigError("csaim: replace_period must be >= 1");
  if (g_max < 0) throw ConfigError("csaim: g_max must be >= 0");
  if (!(gamma_w > 0.0) || !(gamma_theta > 0.0)) {
    throw ConfigError("csaim: gamma_w and gamma_theta must be > 0");
  }
  if (!(e_sim >= 0.0)) throw ConfigError("csaim: e_sim must be >= 0");
  if (n_sub < 1) throw ConfigError("csaim: n_sub must be >= 1");
}

int fires(const Antibody& ab, std::span<const double> x, double e_sim) {
  return std::abs(dot(ab.weights, x) - ab.threshold) >= e_sim ? 1 : 0;
}

int affinity(const Antibody& ab, const TrainingSet& data, double e_sim) {
  int total = 0;
  for (const auto& s : data.samples) {
    if (s.x.size() != ab.weights.size()) {
      throw DimensionError("antibody has " + std::to_string(ab.weights.size()) +
                           " weights, sample has " + std::to_string(s.x.size()));
    }
    if (fires(ab, s.x, e_sim) == s.target) ++total;
  }
  return total;
}

std::vector<int> sub_region_partition(std::size_t k, int n_sub) {
  if (n_sub < 1) throw ConfigError("n_sub must be >= 1");
  std::vector<int> labels(k);
  for (std::size_t i = 0; i < k; ++i) {
    labels[i] = static_cast<int>(i * static_cast<std::size_t>(n_sub) / std::max<std::size_t>(k, 1));
  }
  return labels;
}

Antibody hypermutate(const Antibody& ab, const CsaimConfig& cfg, Rng& rng) {
  Antibody out = ab;
  out.affinity.reset();
  if (out.weights.empty()) throw DimensionError("antibody has no weights");
  const std::size_t i = rng.index(out.weights.size());
  out.weights[i] += rng.uniform_open(-cfg.gamma_w, cfg.gamma_w);
  out.threshold += rng.uniform_open(-1.0, cfg.gamma_theta);
  return out;
}

Antibody receptor_edit(const Antibody& ab, Rng& rng) {
  const std::size_t k = ab.weights.size();
  if (k < 2) throw DimensionError("receptor editing needs at least 2 weights");
  Antibody out = ab;
  out.affinity.reset();
  const std::size_t i = rng.index(k);
  std::size_t j = rng.index(k - 1);
  if (j >= i) ++j;
  std::swap(out.weights[i], out.weights[j]);
  return out;
}

std::vector<int> clone_counts(int n, int q) {
  if (n < 1 || q < 1) throw ConfigError("clone_counts needs n >= 1 and q >= 1");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    out.push_back(round_half_away(static_cast<long long>(n - i) * q, n));
  }
  return out;
}

MutationRates mutation_rates(double affinity_value, double a) {
  MutationRates r;
  if (affinity_value <= 0.0) {
    r.hypermutation = 1.0;
  } else {
    r.hypermutation = std::clamp(a / affinity_value, 0.0, 1.0);
  }
  r.receptor_editing = 1.0 - r.hypermutation;
  return r;
}

Antibody random_antibody(std::size_t k, Rng& rng) {
  Antibody ab;
  ab.weights.resize(k);
  for (auto& w : ab.weights) w = rng.uniform(-1.0, 1.0);
  ab.threshold = rng.uniform(0.0, 1.0);
  return ab;
}

void sort_pools(ElitePools& pools, const CsaimConfig& cfg) {
  if (cfg.invert_clone_allocation) {
    std::stable_sort(pools.begin(), pools.end(), [](const Antibody& l, const Antibody& r) {
      return l.affinity.value_or(0) > r.affinity.value_or(0);
    });
  } else {
    std::stable_sort(pools.begin(), pools.end(), [](const Antibody& l, const Antibody& r) {
      return l.affinity.value_or(0) < r.affinity.value_or(0);
    });
  }
}

void recsa_generation(ElitePools& pools, const TrainingSet& data, const CsaimConfig& cfg,
                      int generation, const Rng& rng) {
  if (pools.empty()) throw StateError("no elite pools");
  const int n = static_cast<int>(pools.size());
  const auto counts = clone_counts(n, cfg.q);
  const std::size_t k = pools.front().weights.size();

  for (int i = 0; i < n; ++i) {
    Antibody& parent = pools[static_cast<std::size_t>(i)];
    if (!parent.affinity) evaluate(parent, data, cfg.e_sim);
    const int clones = counts[static_cast<std::size_t>(i)];
    if (clones == 0) continue;

    Rng prng = rng.split(static_cast<std::uint64_t>(i));
    const auto rates = mutation_rates(*parent.affinity, cfg.a);
    std::optional<Antibody> best;
    for (int c = 0; c < clones; ++c) {
      const bool use_hm = k < 2 || prng.bernoulli(rates.hypermutation);
      Antibody clone = use_hm ? hypermutate(parent, cfg, prng) : receptor_edit(parent, prng);
      evaluate(clone, data, cfg.e_sim);
      if (!best || *clone.affinity > *best->affinity) best = std::move(clone);
    }

    const int d_parent = *parent.affinity;
    const int d_best = *best->affinity;
    bool replace = false;
    if (d_parent < d_best) {
      replace = true;
    } else if (i == 0) {
      replace = false;
    } else {
      replace = prng.bernoulli(std::exp((d_best - d_parent) / cfg.anneal_alpha));
    }
    if (replace) parent = std::move(*best);
  }

  if ((generation + 1) % cfg.replace_period == 0) {
    // c = round(beta * n), but never the whole population: the best pool stays.
    const int c = std::min(
        static_cast<int>(std::floor(cfg.replace_beta * n + 0.5)), n - 1);
    if (c > 0) {
      std::vector<std::size_t> order(pools.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return *pools[l].affinity < *pools[r].affinity;
      });
      Rng fresh = rng.split(0xD1CEULL << 32);
      for (int r = 0; r < c; ++r) {
        Antibody ab = random_antibody(k, fresh);
        evaluate(ab, data, cfg.e_sim);
        pools[order[static_cast<std::size_t>(r)]] = std::move(ab);
      }
    }
  }
  sort_pools(pools, cfg);
}

RecsaResult run_recsa(const TrainingSet& data, const CsaimConfig& cfg, const Rng& rng) {
  cfg.validate();
  data.validate();
  const std::size_t k = data.dim();

  Rng init = rng.split(0);
  std::vector<Antibody> initial;
  initial.reserve(static_cast<std::size_t>(cfg.m));
  for (int i = 0; i < cfg.m; ++i) {
    Antibody ab = random_antibody(k, init);
    evaluate(ab, data, cfg.e_sim);
    initial.push_back(std::move(ab));
  }
  std::stable_sort(initial.begin(), initial.end(), [](const Antibody& l, const Antibody& r) {
    return *l.affinity > *r.affinity;
  });

  RecsaResult result;
  result.pools.assign(initial.begin(), initial.begin() + cfg.n);
  sort_pools(result.pools, cfg);

  auto pool_best = [](const ElitePools& pools) {
    const Antibody* best = &pools.front();
    for (const auto& ab : pools) {
      if (*ab.affinity > *best->affinity) best = &ab;
    }
    return best;
  };

  result.best = *pool_best(result.pools);
  result.best_trace.push_back(*result.best.affinity);

  for (int gen = 0; gen < cfg.g_max; ++gen) {
    recsa_generation(result.pools, data, cfg, gen, rng.split(static_cast<std::uint64_t>(gen) + 1));
    const Antibody* best = pool_best(result.pools);
    if (*best->affinity > *result.best.affinity) result.best = *best;
    result.best_trace.push_back(*best->affinity);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Memory cells

void MemoryConfig::validate() const {
  if (initial_categories < 1) throw ConfigError("memory: initial_categories must be >= 1");
  if (!(crowd_radius_factor > 0.0)) throw ConfigError("memory: crowd_radius_factor must be > 0");
  if (max_retry < 0) throw ConfigError("memory: max_retry must be >= 0");
}

std::vector<double> normalize_to_antibody(std::span<const double> d, std::span<const double> h) {
  if (d.size() != h.size()) throw DimensionError("sample and antibody dimensions differ");
  std::optional<std::size_t> j;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0 || h[i] == 0.0) continue;
    if (!j || d[i] < d[*j]) j = i;
  }
  if (!j) throw NormalizationError("no index with nonzero sample and antibody element");
  const double scale = h[*j] / d[*j];
  std::vector<double> out(d.begin(), d.end());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0 && h[i] != 0.0) out[i] = d[i] * scale;
  }
  return out;
}

double mu_theta(std::span<const double> normalized, MuThetaMode mode) {
  double s = 0.0;
  for (double v : normalized) s += mode == MuThetaMode::kSumAbs ? std::abs(v) : v;
  return s;
}

double response_distance(const MemoryCell& cell, std::span<const double> d) {
  const auto dn = normalize_to_antibody(d, cell.center.weights);
  return euclidean(dn, cell.center.weights);
}

bool responds(const MemoryCell& cell, std::span<const double> d, const MemoryConfig& cfg) {
  const auto dn = normalize_to_antibody(d, cell.center.weights);
  return euclidean(dn, cell.center.weights) < mu_theta(dn, cfg.mu_theta_mode);
}

ClassifyResult classify(std::span<const MemoryCell> cells, std::span<const double> d,
                        const MemoryConfig& cfg) {
  struct Candidate {
    bool binds;
    double distance;
    int category;
    std::size_t index;
  };
  std::optional<Candidate> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    std::vector<double> dn;
    try {
      dn = normalize_to_antibody(d, cell.center.weights);
    } catch (const NormalizationError&) {
      continue;
    }
    const double mu = mu_theta(dn, cfg.mu_theta_mode);
    const double dist = euclidean(dn, cell.center.weights);
    if (!(dist < mu)) continue;
    Candidate cand{fires(cell.center, d, cell.e_sim) == 1, dist / mu, cell.category, i};
    auto better = [](const Candidate& l, const Candidate& r) {
      if (l.binds != r.binds) return l.binds;
      if (l.distance != r.distance) return l.distance < r.distance;
      return l.category < r.category;
    };
    if (!best || better(cand, *best)) best = cand;
  }
  if (!best) return {};
  return {best->category, best->index};
}

namespace {

/// Connected components of "distance < radius", each reduced to the member
/// nearest its centroid.
std::vector<MemoryCell> crowd_cells(const std::vector<Antibody>& elites, int category,
                                    double radius_factor, double e_sim) {
  const std::size_t n = elites.size();
  if (n == 0) return {};
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = euclidean(elites[i].weights, elites[j].weights);
      total += dist[i][j];
      ++pairs;
    }
  }
  const double radius = pairs ? radius_factor * total / static_cast<double>(pairs) : 0.0;

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist[i][j] < radius || radius == 0.0) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> crowds;
  for (std::size_t i = 0; i < n; ++i) crowds[find(i)].push_back(i);

  std::vector<MemoryCell> out;
  for (const auto& [root, members] : crowds) {
    const std::size_t k = elites[members.front()].weights.size();
    std::vector<double> centroid(k, 0.0);
    for (auto m : members) {
      for (std::size_t d = 0; d < k; ++d) centroid[d] += elites[m].weights[d];
    }
    for (auto& c : centroid) c /= static_cast<double>(members.size());
    std::size_t pick = members.front();
    double pick_dist = euclidean(elites[pick].weights, centroid);
    for (auto m : members) {
      const double dm = euclidean(elites[m].weights, centroid);
      if (dm < pick_dist) {
        pick = m;
        pick_dist = dm;
      }
    }
    out.push_back({elites[pick], category, static_cast<int>(members.size()), e_sim});
  }
  return out;
}

std::vector<Antibody> strong_elites(const RecsaResult& run) {
  // Elites far below the run's best are leftovers of re-seeding, not a crowd.
  const int best = *run.best.affinity;
  std::vector<Antibody> out;
  out.push_back(run.best);
  for (const auto& ab : run.pools) {
    if (*ab.affinity * 10 >= best * 9 && !(ab == run.best)) out.push_back(ab);
  }
  return out;
}

}  // namespace

std::vector<MemoryCell> build_memory_cells(std::span<const LabeledSample> data,
                                           const CsaimConfig& cfg, const MemoryConfig& mcfg,
                                           const Rng& rng, MemoryBuildReport* report) {
  cfg.validate();
  mcfg.validate();
  if (data.empty()) throw StateError("no labeled samples");
  std::set<int> categories;
  for (const auto& s : data) categories.insert(s.category);

  MemoryBuildReport local;
  MemoryBuildReport& rep = report ? *report : local;
  rep = {};

  std::vector<MemoryCell> cells;
  std::vector<std::size_t> missed(data.size());
  std::iota(missed.begin(), missed.end(), std::size_t{0});

  for (int round = 0; round <= mcfg.max_retry && !missed.empty(); ++round) {
    std::size_t added = 0;
    for (int category : categories) {
      TrainingSet ts;
      bool any_positive = false;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const bool positive = data[i].category == category;
        if (positive) {
          // Later rounds only chase the positives that were missed.
          if (round > 0 && !std::binary_search(missed.begin(), missed.end(), i)) continue;
          any_positive = true;
        }
        ts.samples.push_back({data[i].x, positive ? 1 : 0});
      }
      if (!any_positive) continue;
      const Rng crng = rng.split(static_cast<std::uint64_t>(round) << 32 ^
                                 static_cast<std::uint32_t>(category));
      const auto run = run_recsa(ts, cfg, crng);
      auto elites = strong_elites(run);
      if (round > 0) {
        // Only antibodies that actually respond to a missed sample may join
        // a crowd in the retry rounds.
        std::erase_if(elites, [&](const Antibody& ab) {
          const MemoryCell probe{ab, category, 1, cfg.e_sim};
          return std::none_of(missed.begin(), missed.end(), [&](std::size_t i) {
            if (data[i].category != category || fires(ab, data[i].x, cfg.e_sim) != 1) return false;
            try {
              return responds(probe, data[i].x, mcfg);
            } catch (const NormalizationError&) {
              return false;
            }
          });
        });
      }
      auto fresh = crowd_cells(elites, category, mcfg.crowd_radius_factor, cfg.e_sim);
      if (fresh.empty()) {
        rep.log.push_back("round " + std::to_string(round) + ": category " +
                          std::to_string(category) + " formed no crowd");
      }
      added += fresh.size();
      cells.insert(cells.end(), fresh.begin(), fresh.end());
    }
    rep.cells_per_round.push_back(static_cast<int>(added));
    rep.rounds = round + 1;

    missed.clear();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto r = classify(cells, data[i].x, mcfg);
      if (!r.category || *r.category != data[i].category) missed.push_back(i);
    }
  }
  return cells;
}

std::string memory_cells_to_json(std::span<const MemoryCell> cells) {
  nlohmann::ordered_json doc;
  doc["format"] = "cryptic-memory-cells";
  doc["version"] = 1;
  auto& arr = doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json j;
    j["category"] = c.category;
    j["weights"] = c.center.weights;
    j["threshold"] = c.center.threshold;
    j["crowd_size"] = c.crowd_size;
    j["e_sim"] = c.e_sim;
    if (c.center.affinity) j["affinity"] = *c.center.affinity;
    arr.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::vector<MemoryCell> memory_cells_from_json(const std::string& text) {
  std::vector<MemoryCell> out;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "cryptic-memory-cells") {
      throw ConfigError("memory-cell store: unexpected format tag");
    }
    for (const auto& j : doc.at("cells")) {
      MemoryCell c;
      c.category = j.at("category").get<int>();
      c.center.weights = j.at("weights").get<std::vector<double>>();
      c.center.threshold = j.at("threshold").get<double>();
      if (j.contains("affinity")) c.center.affinity = j.at("affinity").get<int>();
      c.crowd_size = j.at("crowd_size").get<int>();
      c.e_sim = j.at("e_sim").get<double>();
      if (c.crowd_size < 1) throw ConfigError("memory-cell store: crowd_size < 1");
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("memory-cell store: ") + e.what());
  }
  return out;
}

}  // namespace cryptic
