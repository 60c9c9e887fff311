#include "cryptic/ghsom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cryptic/errors.hpp"

namespace cryptic {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

std::size_t winner_of(const SomMap& map, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = squared_distance(map.units[0].weight, x);
  for (std::size_t u = 1; u < map.units.size(); ++u) {
    const double d = squared_distance(map.units[u].weight, x);
    if (d < best_d) {
      best_d = d;
      best = u;
    }
  }
  return best;
}

struct GrowContext {
  const Dataset& data;
  const GhsomConfig& cfg;
  std::size_t n_total;
  double qe0;
};

SomMap grow_map(const GrowContext& ctx, const std::vector<std::size_t>& members,
                double parent_mqe, int depth, const Rng& rng) {
  Rng train_rng = rng.split(0);
  SomMap map = make_map(2, 2, ctx.data, members, train_rng);
  train_map(map, ctx.data, members, ctx.cfg, train_rng);

  auto can_grow = [&] { return map.units.size() < members.size(); };

  while (map.mean_mqe() > ctx.cfg.tau1 * parent_mqe && can_grow()) {
    grow_breadth(map, ctx.data, members, ctx.cfg, train_rng);
  }

  // Case2: the map as a whole is good enough, yet one unit still carries a
  // dominant share of the error and is not going to get a child map.
  if (can_grow()) {
    const double sum_qe = map.total_qe();
    const auto worst = std::max_element(
        map.units.begin(), map.units.end(),
        [](const SomUnit& l, const SomUnit& r) { return l.qe < r.qe; });
    if (should_insert(worst->qe, sum_qe, ctx.cfg) &&
        decide_stratify(worst->mapped.size(), worst->qe, ctx.n_total, ctx.qe0, ctx.cfg) !=
            StratifyDecision::kStratify) {
      grow_breadth(map, ctx.data, members, ctx.cfg, train_rng);
    }
  }

  // Case1: a unit that would stratify on error alone but holds too few
  // samples makes the map grow once more instead.
  if (can_grow()) {
    const bool blocked = std::any_of(map.units.begin(), map.units.end(), [&](const SomUnit& u) {
      return decide_stratify(u.mapped.size(), u.qe, ctx.n_total, ctx.qe0, ctx.cfg) ==
                 StratifyDecision::kCase1Stop &&
             u.qe > ctx.cfg.tau2 * ctx.qe0 && has_distinct_samples(u, ctx.data);
    });
    if (blocked) grow_breadth(map, ctx.data, members, ctx.cfg, train_rng);
  }

  if (depth < ctx.cfg.max_depth) {
    for (std::size_t i = 0; i < map.units.size(); ++i) {
      SomUnit& u = map.units[i];
      if (!should_stratify(u, ctx.n_total, ctx.qe0, ctx.cfg)) continue;
      u.child = std::make_shared<const SomMap>(
          grow_map(ctx, u.mapped, u.mqe(), depth + 1, rng.split(i + 1)));
    }
  }
  return map;
}

double sum_distance_to_mean(const Dataset& data) {
  const std::size_t d = data.dim();
  std::vector<double> mean(d, 0.0);
  for (const auto& v : data.vectors) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += v[i];
  }
  for (auto& m : mean) m /= static_cast<double>(data.size());
  double total = 0.0;
  for (const auto& v : data.vectors) total += distance(v, mean);
  return total;
}

std::string pos_token(const GridPos& p) {
  if (p.col < 10 && p.row < 10) {
    return "[" + std::to_string(p.col) + std::to_string(p.row) + "]";
  }
  return "[" + std::to_string(p.col) + "," + std::to_string(p.row) + "]";
}

}  // namespace

void Dataset::validate() const {
  if (ids.size() != vectors.size()) throw StateError("dataset ids and vectors differ in length");
  if (vectors.empty()) return;
  const std::size_t d = vectors.front().size();
  if (d == 0) throw DimensionError("zero-dimensional samples");
  for (const auto& v : vectors) {
    if (v.size() != d) throw DimensionError("ragged dataset");
    for (double x : v) {
      if (!std::isfinite(x)) throw StateError("non-finite sample value");
    }
  }
}

void GhsomConfig::validate() const {
  if (!(tau1 > 0.0 && tau1 < 1.0)) throw ConfigError("ghsom: tau1 must be in (0, 1)");
  if (!(tau2 > 0.0 && tau2 < 1.0)) throw ConfigError("ghsom: tau2 must be in (0, 1)");
  if (!(alpha_strat > 0.0 && alpha_strat < 1.0)) {
    throw ConfigError("ghsom: alpha_strat must be in (0, 1)");
  }
  if (!(beta_qe > 0.0)) throw ConfigError("ghsom: beta_qe must be > 0");
  if (epochs < 1) throw ConfigError("ghsom: epochs must be >= 1");
  if (!(lr0 > 0.0)) throw ConfigError("ghsom: lr0 must be > 0");
  if (max_depth < 1) throw ConfigError("ghsom: max_depth must be >= 1");
}

double SomMap::total_qe() const {
  double s = 0.0;
  for (const auto& u : units) s += u.qe;
  return s;
}

double SomMap::mean_mqe() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& u : units) {
    if (u.mapped.empty()) continue;
    s += u.mqe();
    ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

SomMap make_map(int rows, int cols, const Dataset& data, std::span<const std::size_t> members,
                Rng& rng) {
  if (rows < 2 || cols < 2) throw ConfigError("maps are at least 2x2");
  if (members.empty()) throw StateError("cannot initialise a map without samples");
  SomMap map;
  map.rows = rows;
  map.cols = cols;
  map.units.resize(std::size_t(rows) * cols);
  for (auto& u : map.units) u.weight = data.vectors[members[rng.index(members.size())]];
  return map;
}

void assign_samples(SomMap& map, const Dataset& data, std::span<const std::size_t> members) {
  for (auto& u : map.units) {
    u.mapped.clear();
    u.qe = 0.0;
  }
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t id : sorted) {
    SomUnit& u = map.units[winner_of(map, data.vectors[id])];
    u.mapped.push_back(id);
  }
  for (auto& u : map.units) {
    for (std::size_t id : u.mapped) u.qe += distance(data.vectors[id], u.weight);
  }
}

void train_map(SomMap& map, const Dataset& data, std::span<const std::size_t> members,
               const GhsomConfig& cfg, Rng& rng) {
  if (members.empty()) throw StateError("train_map: no samples");
  const double radius0 =
      cfg.radius0 > 0.0 ? cfg.radius0 : std::max(map.rows, map.cols) / 2.0;
  std::vector<std::size_t> order(members.begin(), members.end());
  std::sort(order.begin(), order.end());
  const std::size_t total = static_cast<std::size_t>(cfg.epochs) * order.size();
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t id : order) {
      const double frac = total > 1 ? static_cast<double>(step) / static_cast<double>(total - 1) : 0.0;
      const double lr = cfg.lr0 * (1.0 - frac) + 0.01 * cfg.lr0 * frac;
      const double radius = radius0 * (1.0 - frac) + 0.5 * frac;
      const double two_r2 = 2.0 * radius * radius;
      const auto& x = data.vectors[id];
      const std::size_t win = winner_of(map, x);
      const int wr = static_cast<int>(win) / map.cols;
      const int wc = static_cast<int>(win) % map.cols;
      for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
          const double g2 = double((r - wr) * (r - wr) + (c - wc) * (c - wc));
          const double h = std::exp(-g2 / two_r2);
          auto& w = map.unit(r, c).weight;
          for (std::size_t d = 0; d < w.size(); ++d) w[d] += lr * h * (x[d] - w[d]);
        }
      }
      ++step;
    }
  }
  assign_samples(map, data, members);
}

Insertion insert_between(SomMap& map) {
  std::size_t e = 0;
  for (std::size_t u = 1; u < map.units.size(); ++u) {
    if (map.units[u].qe > map.units[e].qe) e = u;
  }
  const int er = static_cast<int>(e) / map.cols;
  const int ec = static_cast<int>(e) % map.cols;

  // Neighbours in row-major order, so ties keep the first.
  const GridPos candidates[4] = {{ec, er - 1}, {ec - 1, er}, {ec + 1, er}, {ec, er + 1}};
  std::optional<GridPos> far;
  double far_d = -1.0;
  for (const auto& p : candidates) {
    if (p.row < 0 || p.row >= map.rows || p.col < 0 || p.col >= map.cols) continue;
    const double d = squared_distance(map.unit(er, ec).weight, map.unit(p.row, p.col).weight);
    if (d > far_d) {
      far_d = d;
      far = p;
    }
  }

  Insertion ins;
  ins.error_unit = {ec, er};
  ins.neighbor = *far;
  ins.column = far->row == er;

  SomMap grown;
  if (ins.column) {
    const int at = std::max(ec, far->col);  // new column index
    grown.rows = map.rows;
    grown.cols = map.cols + 1;
    grown.units.resize(std::size_t(grown.rows) * grown.cols);
    for (int r = 0; r < map.rows; ++r) {
      for (int c = 0, src = 0; c < grown.cols; ++c) {
        if (c == at) {
          SomUnit fresh;
          const auto& a = map.unit(r, at - 1).weight;
          const auto& b = map.unit(r, at).weight;
          fresh.weight.resize(a.size());
          for (std::size_t d = 0; d < a.size(); ++d) fresh.weight[d] = (a[d] + b[d]) / 2.0;
          grown.unit(r, c) = std::move(fresh);
        } else {
          grown.unit(r, c) = map.unit(r, src++);
        }
      }
    }
    ins.index = at;
  } else {
    const int at = std::max(er, far->row);
    grown.rows = map.rows + 1;
    grown.cols = map.cols;
    grown.units.resize(std::size_t(grown.rows) * grown.cols);
    for (int r = 0, src = 0; r < grown.rows; ++r) {
      for (int c = 0; c < grown.cols; ++c) {
        if (r == at) {
          SomUnit fresh;
          const auto& a = map.unit(at - 1, c).weight;
          const auto& b = map.unit(at, c).weight;
          fresh.weight.resize(a.size());
          for (std::size_t d = 0; d < a.size(); ++d) fresh.weight[d] = (a[d] + b[d]) / 2.0;
          grown.unit(r, c) = std::move(fresh);
        } else {
          grown.unit(r, c) = map.unit(src, c);
        }
      }
      if (r != at) ++src;
    }
    ins.index = at;
  }
  map = std::move(grown);
  return ins;
}

Insertion grow_breadth(SomMap& map, const Dataset& data, std::span<const std::size_t> members,
                       const GhsomConfig& cfg, Rng& rng) {
  const Insertion ins = insert_between(map);
  train_map(map, data, members, cfg, rng);
  return ins;
}

StratifyDecision decide_stratify(std::size_t n_k, double qe_k, std::size_t n_total,
                                 double qe_root, const GhsomConfig& cfg) {
  if (static_cast<double>(n_k) <= cfg.alpha_strat * static_cast<double>(n_total)) {
    return StratifyDecision::kCase1Stop;
  }
  return qe_k > cfg.tau2 * qe_root ? StratifyDecision::kStratify : StratifyDecision::kLeaf;
}

bool should_stratify(const SomUnit& unit, std::size_t n_total, double qe_root,
                     const GhsomConfig& cfg) {
  return decide_stratify(unit.mapped.size(), unit.qe, n_total, qe_root, cfg) ==
         StratifyDecision::kStratify;
}

bool should_insert(double qe_k, double sum_qe, const GhsomConfig& cfg) {
  return qe_k >= cfg.beta_qe * cfg.tau1 * sum_qe;
}

bool should_insert(const SomUnit& unit, const SomMap& map, const GhsomConfig& cfg) {
  return should_insert(unit.qe, map.total_qe(), cfg);
}

bool has_distinct_samples(const SomUnit& unit, const Dataset& data) {
  for (std::size_t i = 1; i < unit.mapped.size(); ++i) {
    if (data.vectors[unit.mapped[i]] != data.vectors[unit.mapped[0]]) return true;
  }
  return false;
}

GhsomTree grow_hierarchy(Dataset data, const GhsomConfig& cfg, const Rng& rng) {
  cfg.validate();
  data.validate();
  if (data.size() < 4) throw StateError("grow_hierarchy needs at least 4 samples");
  GhsomTree tree;
  tree.config = cfg;
  tree.data = std::move(data);
  tree.qe0 = sum_distance_to_mean(tree.data);
  std::vector<std::size_t> all(tree.data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const GrowContext ctx{tree.data, cfg, tree.data.size(), tree.qe0};
  tree.root = grow_map(ctx, all, tree.qe0 / static_cast<double>(tree.data.size()), 1, rng);
  return tree;
}

// ---------------------------------------------------------------------------
// Paths

std::string format_path(const UnitPath& path) {
  std::string out = "[R]";
  for (const auto& p : path) out += pos_token(p);
  return out;
}

ParsedLabel parse_path_label(std::string_view label) {
  auto fail = [&](const std::string& why) -> PathError {
    return PathError("bad path label '" + std::string(label) + "': " + why);
  };
  if (label.substr(0, 3) != "[R]") throw fail("must start with [R]");
  ParsedLabel out;
  std::size_t i = 3;
  auto parse_int = [&](std::string_view s) {
    if (s.empty() || s.size() > 6) throw fail("bad index");
    int v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') throw fail("bad index");
      v = v * 10 + (c - '0');
    }
    return v;
  };
  while (i < label.size() && label[i] == '[') {
    const std::size_t close = label.find(']', i);
    if (close == std::string_view::npos) throw fail("unclosed bracket");
    const std::string_view body = label.substr(i + 1, close - i - 1);
    GridPos p;
    const std::size_t comma = body.find(',');
    if (comma != std::string_view::npos) {
      p.col = parse_int(body.substr(0, comma));
      p.row = parse_int(body.substr(comma + 1));
      if (p.col < 10 && p.row < 10) throw fail("single-digit positions use the [cr] form");
    } else {
      if (body.size() != 2) throw fail("expected two digits");
      p.col = parse_int(body.substr(0, 1));
      p.row = parse_int(body.substr(1, 1));
    }
    out.path.push_back(p);
    i = close + 1;
  }
  if (i < label.size()) {
    if (label[i] != ':' || out.path.empty()) throw fail("unexpected trailing text");
    const std::string_view digits = label.substr(i + 1);
    if (digits.empty() || digits.size() > 18) throw fail("bad count");
    std::size_t count = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') throw fail("bad count");
      count = count * 10 + static_cast<std::size_t>(c - '0');
    }
    out.count = count;
  }
  return out;
}

const SomMap& resolve_parent_map(const GhsomTree& tree, const UnitPath& path) {
  if (path.empty()) throw PathError("the root path has no parent map");
  const SomMap* map = &tree.root;
  for (std::size_t level = 0; level + 1 < path.size(); ++level) {
    const auto& p = path[level];
    if (p.row < 0 || p.row >= map->rows || p.col < 0 || p.col >= map->cols) {
      throw PathError("position " + pos_token(p) + " is off the map in " +
                      format_path(UnitPath(path.begin(), path.begin() + long(level) + 1)));
    }
    const SomUnit& u = map->unit(p.row, p.col);
    if (!u.child) {
      throw PathError("unit " + format_path(UnitPath(path.begin(), path.begin() + long(level) + 1)) +
                      " has no child map");
    }
    map = u.child.get();
  }
  return *map;
}

const SomUnit& resolve_unit(const GhsomTree& tree, const UnitPath& path) {
  const SomMap& map = resolve_parent_map(tree, path);
  const auto& p = path.back();
  if (p.row < 0 || p.row >= map.rows || p.col < 0 || p.col >= map.cols) {
    throw PathError("position " + pos_token(p) + " is off the map in " + format_path(path));
  }
  return map.unit(p.row, p.col);
}

std::size_t path_count(const GhsomTree& tree, const UnitPath& path) {
  if (path.empty()) return tree.data.size();
  return resolve_unit(tree, path).mapped.size();
}

std::string path_label(const GhsomTree& tree, const UnitPath& path) {
  if (path.empty()) return "[R]";
  return format_path(path) + ":" + std::to_string(resolve_unit(tree, path).mapped.size());
}

namespace {

void collect_leaves(const SomMap& map, UnitPath& prefix, std::vector<UnitPath>& out) {
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      prefix.push_back({c, r});
      const SomUnit& u = map.unit(r, c);
      if (u.child) {
        collect_leaves(*u.child, prefix, out);
      } else {
        out.push_back(prefix);
      }
      prefix.pop_back();
    }
  }
}

int depth_of(const SomMap& map) {
  int deepest = 0;
  for (const auto& u : map.units) {
    if (u.child) deepest = std::max(deepest, depth_of(*u.child));
  }
  return deepest + 1;
}

}  // namespace

std::vector<UnitPath> leaf_paths(const GhsomTree& tree) {
  std::vector<UnitPath> out;
  UnitPath prefix;
  collect_leaves(tree.root, prefix, out);
  return out;
}

std::vector<UnitPath> sample_leaf_paths(const GhsomTree& tree) {
  std::vector<UnitPath> out(tree.data.size());
  for (const auto& path : leaf_paths(tree)) {
    for (std::size_t id : resolve_unit(tree, path).mapped) out[id] = path;
  }
  return out;
}

int tree_depth(const GhsomTree& tree) { return depth_of(tree.root); }

ExpandResult expand_unit(const GhsomTree& tree, const UnitPath& path, const Rng& rng) {
  if (path.empty()) throw PathError("the root map cannot be expanded; pick a unit");
  const SomUnit& unit = resolve_unit(tree, path);
  if (unit.mapped.empty()) {
    throw EmptyUnitError("unit " + format_path(path) + " has no samples");
  }
  const int child_depth = static_cast<int>(path.size()) + 1;
  if (child_depth > tree.config.max_depth) {
    throw StateError("unit " + format_path(path) + " is at the depth cap");
  }
  const GrowContext ctx{tree.data, tree.config, tree.data.size(), tree.qe0};
  SomMap child = grow_map(ctx, unit.mapped, unit.mqe(), child_depth, rng);

  ExpandResult result{tree, {path}};
  SomMap* map = &result.tree.root;
  for (std::size_t level = 0; level + 1 < path.size(); ++level) {
    SomUnit& u = map->unit(path[level].row, path[level].col);
    auto copy = std::make_shared<SomMap>(*u.child);
    map = copy.get();
    u.child = std::move(copy);
  }
  map->unit(path.back().row, path.back().col).child =
      std::make_shared<const SomMap>(std::move(child));
  return result;
}

// ---------------------------------------------------------------------------
// Export

namespace {

using ojson = nlohmann::ordered_json;

ojson config_json(const GhsomConfig& c) {
  ojson j;
  j["tau1"] = c.tau1;
  j["tau2"] = c.tau2;
  j["alpha_strat"] = c.alpha_strat;
  j["beta_qe"] = c.beta_qe;
  j["epochs"] = c.epochs;
  j["lr0"] = c.lr0;
  j["radius0"] = c.radius0;
  j["max_depth"] = c.max_depth;
  return j;
}

GhsomConfig config_from_json(const nlohmann::json& j) {
  GhsomConfig c;
  c.tau1 = j.at("tau1").get<double>();
  c.tau2 = j.at("tau2").get<double>();
  c.alpha_strat = j.at("alpha_strat").get<double>();
  c.beta_qe = j.at("beta_qe").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.lr0 = j.at("lr0").get<double>();
  c.radius0 = j.at("radius0").get<double>();
  c.max_depth = j.at("max_depth").get<int>();
  return c;
}

ojson map_json(const GhsomTree& tree, const SomMap& map, UnitPath& prefix) {
  ojson j;
  j["path"] = format_path(prefix);
  j["rows"] = map.rows;
  j["cols"] = map.cols;
  auto& units = j["units"] = ojson::array();
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      const SomUnit& u = map.unit(r, c);
      prefix.push_back({c, r});
      ojson ju;
      ju["col"] = c;
      ju["row"] = r;
      ju["path"] = format_path(prefix);
      ju["label"] = format_path(prefix) + ":" + std::to_string(u.mapped.size());
      ju["count"] = u.mapped.size();
      ju["qe"] = u.qe;
      ju["weight"] = u.weight;
      auto& ids = ju["samples"] = ojson::array();
      for (std::size_t id : u.mapped) ids.push_back(tree.data.ids[id]);
      ju["child"] = u.child ? map_json(tree, *u.child, prefix) : ojson(nullptr);
      prefix.pop_back();
      units.push_back(std::move(ju));
    }
  }
  return j;
}

SomMap map_from_json(const nlohmann::json& j,
                     const std::unordered_map<std::string, std::size_t>& index) {
  SomMap map;
  map.rows = j.at("rows").get<int>();
  map.cols = j.at("cols").get<int>();
  if (map.rows < 2 || map.cols < 2) throw ConfigError("tree export: map smaller than 2x2");
  const auto& units = j.at("units");
  if (units.size() != std::size_t(map.rows) * map.cols) {
    throw ConfigError("tree export: unit count does not match grid");
  }
  map.units.resize(units.size());
  for (const auto& ju : units) {
    const int r = ju.at("row").get<int>();
    const int c = ju.at("col").get<int>();
    if (r < 0 || r >= map.rows || c < 0 || c >= map.cols) {
      throw ConfigError("tree export: unit position off grid");
    }
    SomUnit& u = map.unit(r, c);
    u.weight = ju.at("weight").get<std::vector<double>>();
    u.qe = ju.at("qe").get<double>();
    for (const auto& id : ju.at("samples")) {
      const auto it = index.find(id.get<std::string>());
      if (it == index.end()) throw ConfigError("tree export: unknown sample id " + id.dump());
      u.mapped.push_back(it->second);
    }
    if (!ju.at("child").is_null()) {
      u.child = std::make_shared<const SomMap>(map_from_json(ju.at("child"), index));
    }
  }
  return map;
}

void render_map(const GhsomTree& tree, const SomMap& map, UnitPath& prefix, std::string& out) {
  char buf[64];
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      const SomUnit& u = map.unit(r, c);
      prefix.push_back({c, r});
      out.append(2 * prefix.size(), ' ');
      out += format_path(prefix) + ":" + std::to_string(u.mapped.size());
      std::snprintf(buf, sizeof buf, " qe=%.6f", u.qe);
      out += buf;
      if (u.child) {
        out += " -> " + std::to_string(u.child->rows) + "x" + std::to_string(u.child->cols);
      }
      out += '\n';
      if (u.child) render_map(tree, *u.child, prefix, out);
      prefix.pop_back();
    }
  }
}

}  // namespace

std::string tree_to_json(const GhsomTree& tree) {
  ojson doc;
  doc["format"] = "cryptic-ghsom-tree";
  doc["version"] = 1;
  doc["config"] = config_json(tree.config);
  doc["dimension"] = tree.data.dim();
  doc["sample_count"] = tree.data.size();
  doc["qe0"] = tree.qe0;
  UnitPath prefix;
  doc["root"] = map_json(tree, tree.root, prefix);
  return doc.dump(2) + "\n";
}

GhsomTree tree_from_json(const std::string& text, Dataset data) {
  GhsomTree tree;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "cryptic-ghsom-tree") {
      throw ConfigError("tree export: unexpected format tag");
    }
    tree.config = config_from_json(doc.at("config"));
    tree.qe0 = doc.at("qe0").get<double>();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < data.ids.size(); ++i) index.emplace(data.ids[i], i);
    tree.root = map_from_json(doc.at("root"), index);
    if (doc.at("sample_count").get<std::size_t>() != data.size()) {
      throw ConfigError("tree export: sample count does not match the dataset");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("tree export: ") + e.what());
  }
  tree.data = std::move(data);
  return tree;
}

std::string render_tree_text(const GhsomTree& tree) {
  std::string out = "[R]:" + std::to_string(tree.data.size()) + " qe0=";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", tree.qe0);
  out += buf;
  out += " -> " + std::to_string(tree.root.rows) + "x" + std::to_string(tree.root.cols) + "\n";
  UnitPath prefix;
  render_map(tree, tree.root, prefix, out);
  return out;
}

std::string tree_hash(const GhsomTree& tree) {
  const std::string text = tree_to_json(tree);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
  return buf;
}

}  // namespace cryptic
