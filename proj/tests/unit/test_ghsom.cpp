#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "cryptic/errors.hpp"
#include "cryptic/ghsom.hpp"
#include "fixtures.hpp"

using namespace cryptic;

namespace {

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Walk every map; the callback sees the map, its path and the samples the
// parent handed down.
void walk(const SomMap& map, UnitPath& prefix, const std::vector<std::size_t>& parent,
          const std::function<void(const SomMap&, const UnitPath&, const std::vector<std::size_t>&)>& fn) {
  fn(map, prefix, parent);
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      const auto& u = map.unit(r, c);
      if (!u.child) continue;
      prefix.push_back({c, r});
      walk(*u.child, prefix, u.mapped, fn);
      prefix.pop_back();
    }
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.ids.push_back("x" + std::to_string(i));
    std::vector<double> v;
    const double centre = double(rng.index(4)) * 5;
    for (std::size_t k = 0; k < dim; ++k) v.push_back(centre + rng.uniform(-1, 1));
    d.vectors.push_back(v);
  }
  return d;
}

std::vector<UnitPath> all_unit_paths(const GhsomTree& t) {
  std::vector<UnitPath> out;
  UnitPath prefix;
  walk(t.root, prefix, iota_n(t.data.size()), [&](const SomMap& m, const UnitPath& p, const auto&) {
    for (int r = 0; r < m.rows; ++r)
      for (int c = 0; c < m.cols; ++c) {
        auto q = p;
        q.push_back({c, r});
        out.push_back(q);
      }
  });
  return out;
}

}  // namespace

TEST_CASE("train_map on a single sample pulls every unit onto it") {
  Dataset d{{"a", "b"}, {{1.0, 2.0}, {5.0, 5.0}}};
  Rng rng(1);
  const std::vector<std::size_t> only{1};
  SomMap m = make_map(2, 2, d, only, rng);
  GhsomConfig cfg;
  cfg.epochs = 200;
  train_map(m, d, only, cfg, rng);
  for (const auto& u : m.units) CHECK(dist(u.weight, d.vectors[1]) < 1e-6);
  CHECK(m.units[0].mapped == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(train_map(m, d, std::vector<std::size_t>{}, cfg, rng), StateError);
}

TEST_CASE("assign_samples: ties go to the first unit, qe is summed distance") {
  Dataset d{{"a", "b", "c"}, {{0.0}, {1.0}, {3.0}}};
  SomMap m;
  m.rows = m.cols = 2;
  m.units.resize(4);
  m.units[0].weight = {0.5};
  m.units[1].weight = {0.5};
  m.units[2].weight = {3.0};
  m.units[3].weight = {10.0};
  assign_samples(m, d, iota_n(3));
  CHECK(m.units[0].mapped == std::vector<std::size_t>{0, 1});
  CHECK(m.units[1].mapped.empty());
  CHECK(m.units[0].qe == 1.0);
  CHECK(m.units[2].qe == 0.0);
  CHECK(m.total_qe() == 1.0);
  // mean over non-empty units: (0.5 + 0) / 2
  CHECK(m.mean_mqe() == 0.25);
}

TEST_CASE("insert_between: geometry and mean weights") {
  SomMap m;
  m.rows = m.cols = 2;
  m.units.resize(4);
  m.unit(0, 0).weight = {0.0, 0.0};
  m.unit(0, 1).weight = {4.0, 0.0};
  m.unit(1, 0).weight = {0.0, 1.0};
  m.unit(1, 1).weight = {4.0, 1.0};
  m.unit(0, 0).qe = 5.0;
  // error unit (0,0); right neighbour is 4 away, lower one 1: new column
  const auto ins = insert_between(m);
  CHECK(ins.column);
  CHECK(ins.index == 1);
  CHECK(ins.error_unit == GridPos{0, 0});
  CHECK(ins.neighbor == GridPos{1, 0});
  CHECK(m.rows == 2);
  CHECK(m.cols == 3);
  CHECK(m.unit(0, 1).weight == std::vector<double>{2.0, 0.0});
  CHECK(m.unit(1, 1).weight == std::vector<double>{2.0, 1.0});
  CHECK(m.unit(1, 2).weight == std::vector<double>{4.0, 1.0});

  SomMap v;
  v.rows = v.cols = 2;
  v.units.resize(4);
  v.unit(0, 0).weight = {0.0};
  v.unit(0, 1).weight = {1.0};
  v.unit(1, 0).weight = {8.0};
  v.unit(1, 1).weight = {9.0};
  v.unit(1, 1).qe = 1.0;
  const auto row = insert_between(v);
  CHECK_FALSE(row.column);
  CHECK(row.index == 1);
  CHECK(v.rows == 3);
  CHECK(v.unit(1, 0).weight == std::vector<double>{4.0});
  CHECK(v.unit(1, 1).weight == std::vector<double>{5.0});
  CHECK(v.unit(2, 1).weight == std::vector<double>{9.0});
}

TEST_CASE("Case1/Case2 decisions match direct evaluation on 500 tuples") {
  Rng rng(500);
  for (int t = 0; t < 500; ++t) {
    GhsomConfig cfg;
    cfg.alpha_strat = rng.uniform(0.0, 0.3);
    cfg.tau1 = rng.uniform(0.05, 1.0);
    cfg.tau2 = rng.uniform(0.001, 0.2);
    cfg.beta_qe = rng.uniform(0.1, 2.0);
    const std::size_t n_I = 1 + rng.index(500);
    const std::size_t n_k = rng.index(n_I + 1);
    const double qe0 = rng.uniform(1, 100);
    const double qe = rng.uniform(0, qe0);
    const double sum_qe = qe + rng.uniform(0, qe0);

    const bool case1 = double(n_k) <= cfg.alpha_strat * double(n_I);
    const auto expected = case1                 ? StratifyDecision::kCase1Stop
                          : qe > cfg.tau2 * qe0 ? StratifyDecision::kStratify
                                                : StratifyDecision::kLeaf;
    REQUIRE(decide_stratify(n_k, qe, n_I, qe0, cfg) == expected);
    REQUIRE(should_insert(qe, sum_qe, cfg) == (qe >= cfg.beta_qe * cfg.tau1 * sum_qe));
  }
  GhsomConfig cfg;
  // 7 <= 0.05 * 150 = 7.5
  CHECK(decide_stratify(7, 100, 150, 10, cfg) == StratifyDecision::kCase1Stop);
  CHECK(decide_stratify(8, 100, 150, 10, cfg) == StratifyDecision::kStratify);
  CHECK(decide_stratify(8, 0.3, 150, 10, cfg) == StratifyDecision::kLeaf);
  CHECK(should_insert(6.0, 10.0, cfg));
  CHECK_FALSE(should_insert(5.9, 10.0, cfg));
}

TEST_CASE("four identical samples stay in one unit") {
  Dataset d{{"a", "b", "c", "d"}, std::vector<std::vector<double>>(4, {1.0, 1.0})};
  const auto t = grow_hierarchy(d, GhsomConfig{}, Rng(3));
  CHECK(t.qe0 == 0.0);
  CHECK(t.root.rows == 2);
  CHECK(t.root.cols == 2);
  CHECK(t.root.units[0].mapped.size() == 4);
  CHECK(tree_depth(t) == 1);
  CHECK_THROWS_AS(expand_unit(t, {{1, 1}}, Rng(1)), EmptyUnitError);
  Dataset three{{"a", "b", "c"}, {{1.0}, {2.0}, {3.0}}};
  CHECK_THROWS_AS(grow_hierarchy(three, GhsomConfig{}, Rng(1)), StateError);
}

TEST_CASE("iris-like fixture: conservation, qe, winners and leaves") {
  const auto data = fixtures::iris_like();
  REQUIRE(data.size() == 150);
  GhsomConfig cfg;
  const auto t = grow_hierarchy(data, cfg, Rng(42));

  // qe0 from scratch
  std::vector<double> mean(4, 0.0);
  for (const auto& v : data.vectors)
    for (int k = 0; k < 4; ++k) mean[k] += v[k] / 150.0;
  double qe0 = 0;
  for (const auto& v : data.vectors) qe0 += dist(v, mean);
  CHECK(t.qe0 == doctest::Approx(qe0).epsilon(1e-12));

  int maps = 0;
  UnitPath prefix;
  walk(t.root, prefix, iota_n(150), [&](const SomMap& m, const UnitPath& path, const auto& parent) {
    ++maps;
    std::vector<std::size_t> got;
    for (const auto& u : m.units) {
      got.insert(got.end(), u.mapped.begin(), u.mapped.end());
      double qe = 0;
      for (auto id : u.mapped) qe += dist(data.vectors[id], u.weight);
      CHECK(std::fabs(qe - u.qe) <= 1e-9);
      // each sample sits at its nearest unit
      for (auto id : u.mapped) {
        const double own = dist(data.vectors[id], u.weight);
        for (const auto& o : m.units) CHECK(own <= dist(data.vectors[id], o.weight) + 1e-12);
      }
    }
    std::sort(got.begin(), got.end());
    auto want = parent;
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    (void)path;
  });
  CHECK(maps >= 2);

  // every leaf is explained by one of the stopping rules
  for (const auto& p : leaf_paths(t)) {
    const auto& u = resolve_unit(t, p);
    const bool small = double(u.mapped.size()) <= cfg.alpha_strat * 150;
    const bool accurate = u.qe <= cfg.tau2 * t.qe0;
    const bool capped = int(p.size()) >= cfg.max_depth;
    CHECK((small || accurate || capped));
  }

  // every sample ends in exactly one leaf
  const auto leaves = sample_leaf_paths(t);
  for (std::size_t i = 0; i < 150; ++i) {
    const auto& mapped = resolve_unit(t, leaves[i]).mapped;
    CHECK(std::binary_search(mapped.begin(), mapped.end(), i));
  }
}

TEST_CASE("grow_hierarchy is deterministic per seed") {
  const auto data = fixtures::iris_like();
  CHECK(tree_to_json(grow_hierarchy(data, {}, Rng(5))) == tree_to_json(grow_hierarchy(data, {}, Rng(5))));
}

TEST_CASE("path labels") {
  CHECK(format_path({}) == "[R]");
  CHECK(format_path({{0, 1}, {1, 0}}) == "[R][01][10]");
  CHECK(format_path({{12, 3}}) == "[R][12,3]");
  const auto p = parse_path_label("[R][01][10]:11");
  CHECK(p.path == UnitPath{{0, 1}, {1, 0}});
  REQUIRE(p.count);
  CHECK(*p.count == 11);
  CHECK_FALSE(parse_path_label("[R]").count);
  for (const char* bad : {"", "R", "[R][0]", "[R][012]", "[R][0a]", "[R]:3", "[R][01]x", "[R][1,2]",
                          "[R][01", "[R][01]:"}) {
    CHECK_THROWS_AS(parse_path_label(bad), PathError);
  }
}

TEST_CASE("path labels round-trip on 200 random paths") {
  Rng rng(200);
  for (int i = 0; i < 200; ++i) {
    UnitPath p(rng.index(6));
    for (auto& g : p) g = {int(rng.index(14)), int(rng.index(14))};
    const auto text = format_path(p);
    REQUIRE(parse_path_label(text).path == p);
    if (!p.empty()) REQUIRE(parse_path_label(text + ":" + std::to_string(i)).count == std::size_t(i));
  }
}

TEST_CASE("every unit of generated trees round-trips through its label") {
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    const auto data = random_dataset(rng, 20 + rng.index(60), 1 + rng.index(3));
    GhsomConfig cfg;
    cfg.epochs = 5;
    const auto tree = grow_hierarchy(data, cfg, rng.split(t));
    for (const auto& p : all_unit_paths(tree)) {
      const auto label = path_label(tree, p);
      const auto parsed = parse_path_label(label);
      REQUIRE(parsed.path == p);
      REQUIRE(*parsed.count == resolve_unit(tree, p).mapped.size());
      REQUIRE(&resolve_unit(tree, parsed.path) == &resolve_unit(tree, p));
    }
  }
}

TEST_CASE("resolve errors") {
  const auto t = grow_hierarchy(fixtures::iris_like(), {}, Rng(42));
  CHECK_THROWS_AS(resolve_unit(t, {{9, 9}}), PathError);
  CHECK_THROWS_AS(resolve_parent_map(t, {}), PathError);
  CHECK(path_count(t, {}) == 150);
  CHECK(path_label(t, {}) == "[R]");
  UnitPath leaf;
  for (const auto& p : leaf_paths(t))
    if (p.size() == 1) leaf = p;
  if (!leaf.empty()) {
    auto deeper = leaf;
    deeper.push_back({0, 0});
    CHECK_THROWS_AS(resolve_unit(t, deeper), PathError);
  }
}

TEST_CASE("expand_unit grows only the chosen unit") {
  GhsomConfig cfg;
  cfg.alpha_strat = 0.5;  // Case1 keeps the root units as leaves
  const auto t = grow_hierarchy(fixtures::iris_like(), cfg, Rng(42));
  UnitPath target;
  for (const auto& p : leaf_paths(t)) {
    if (p.size() == 1 && resolve_unit(t, p).mapped.size() >= 2) {
      target = p;
      break;
    }
  }
  REQUIRE(!target.empty());
  const auto before = tree_to_json(t);
  const auto r = expand_unit(t, target, Rng(9));
  CHECK(tree_to_json(t) == before);  // input untouched
  CHECK(r.changed == std::vector<UnitPath>{target});

  const auto& unit = resolve_unit(r.tree, target);
  REQUIRE(unit.child);
  std::vector<std::size_t> got;
  for (const auto& u : unit.child->units) got.insert(got.end(), u.mapped.begin(), u.mapped.end());
  std::sort(got.begin(), got.end());
  CHECK(got == resolve_unit(t, target).mapped);

  // siblings keep their subtrees and samples
  for (int row = 0; row < t.root.rows; ++row)
    for (int col = 0; col < t.root.cols; ++col) {
      if (GridPos{col, row} == target[0]) continue;
      const auto& a = t.root.unit(row, col);
      const auto& b = r.tree.root.unit(row, col);
      CHECK(a.child == b.child);
      CHECK(a.mapped == b.mapped);
    }
  // same seed, same result
  CHECK(tree_hash(expand_unit(t, target, Rng(9)).tree) == tree_hash(r.tree));
  CHECK_THROWS_AS(expand_unit(t, {}, Rng(9)), PathError);
}

TEST_CASE("expand_unit respects the depth cap") {
  GhsomConfig cfg;
  cfg.max_depth = 1;
  const auto t = grow_hierarchy(fixtures::iris_like(), cfg, Rng(1));
  CHECK(tree_depth(t) == 1);
  UnitPath target;
  for (const auto& p : leaf_paths(t))
    if (!resolve_unit(t, p).mapped.empty()) target = p;
  CHECK_THROWS_AS(expand_unit(t, target, Rng(1)), StateError);
}

TEST_CASE("tree JSON round trip") {
  const auto data = fixtures::iris_like();
  const auto t = grow_hierarchy(data, {}, Rng(42));
  const auto text = tree_to_json(t);
  const auto back = tree_from_json(text, data);
  CHECK(tree_to_json(back) == text);
  CHECK(tree_hash(back) == tree_hash(t));
  CHECK(tree_hash(t).size() == 16);
  CHECK(render_tree_text(back) == render_tree_text(t));
  CHECK(render_tree_text(t).rfind("[R]:150 qe0=", 0) == 0);

  auto fewer = data;
  fewer.ids.pop_back();
  fewer.vectors.pop_back();
  CHECK_THROWS_AS(tree_from_json(text, fewer), ConfigError);
  CHECK_THROWS_AS(tree_from_json("{}", data), ConfigError);
}
