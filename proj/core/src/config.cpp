#include "cryptic/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "cryptic/csv.hpp"
#include "cryptic/errors.hpp"

namespace cryptic {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw ConfigError(key + ": '" + std::string(text) + "' is not a valid number");
  return value;
}

bool parse_bool(const std::string& key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": '" + std::string(text) + "' is not a boolean");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value,
                                  const fs::path& base)>;

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

// Nested member helpers keep the table below flat.
template <typename Outer, typename T>
Setter nested_number(Outer PipelineConfig::*outer, T Outer::*field) {
  return [outer, field](PipelineConfig& c, const std::string& key, const std::string& v,
                        const fs::path&) { (c.*outer).*field = parse_number<T>(key, v); };
}

template <typename Outer>
Setter nested_bool(Outer PipelineConfig::*outer, bool Outer::*field) {
  return [outer, field](PipelineConfig& c, const std::string& key, const std::string& v,
                        const fs::path&) { (c.*outer).*field = parse_bool(key, v); };
}

Setter path_setter(fs::path PipelinePaths::*field) {
  return [field](PipelineConfig& c, const std::string&, const std::string& v, const fs::path& base) {
    c.paths.*field = resolve(base, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["paths.records"] = path_setter(&PipelinePaths::records);
    t["paths.images"] = path_setter(&PipelinePaths::images);
    t["paths.landmarks"] = path_setter(&PipelinePaths::landmarks);
    t["paths.vocabulary"] = path_setter(&PipelinePaths::vocabulary);
    t["paths.exemplars"] = path_setter(&PipelinePaths::exemplars);
    t["paths.out"] = [](PipelineConfig& c, const std::string&, const std::string& v,
                        const fs::path& base) { c.out_dir = resolve(base, v); };

    t["signature.grid_size"] = nested_number(&PipelineConfig::signature, &SignatureConfig::grid_size);
    t["signature.levels"] = nested_number(&PipelineConfig::signature, &SignatureConfig::levels);
    t["signature.trials"] = nested_number(&PipelineConfig::signature, &SignatureConfig::trials);
    t["signature.aggregate"] = [](PipelineConfig& c, const std::string& key, const std::string& v,
                                  const fs::path&) {
      if (v == "mean") c.signature.aggregate = Aggregate::kMean;
      else if (v == "max") c.signature.aggregate = Aggregate::kMax;
      else throw ConfigError(key + ": expected mean or max, got '" + v + "'");
    };

    t["csaim.m"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::m);
    t["csaim.n"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::n);
    t["csaim.q"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::q);
    t["csaim.a"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::a);
    t["csaim.anneal_alpha"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::anneal_alpha);
    t["csaim.replace_beta"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::replace_beta);
    t["csaim.replace_period"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::replace_period);
    t["csaim.g_max"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::g_max);
    t["csaim.e_sim"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::e_sim);
    t["csaim.gamma_w"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::gamma_w);
    t["csaim.gamma_theta"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::gamma_theta);
    t["csaim.n_sub"] = nested_number(&PipelineConfig::csaim, &CsaimConfig::n_sub);
    t["csaim.invert_clone_allocation"] =
        nested_bool(&PipelineConfig::csaim, &CsaimConfig::invert_clone_allocation);

    t["memory.initial_categories"] =
        nested_number(&PipelineConfig::memory, &MemoryConfig::initial_categories);
    t["memory.crowd_radius_factor"] =
        nested_number(&PipelineConfig::memory, &MemoryConfig::crowd_radius_factor);
    t["memory.max_retry"] = nested_number(&PipelineConfig::memory, &MemoryConfig::max_retry);
    t["memory.mu_theta_mode"] = [](PipelineConfig& c, const std::string& key, const std::string& v,
                                   const fs::path&) {
      if (v == "sum_abs") c.memory.mu_theta_mode = MuThetaMode::kSumAbs;
      else if (v == "sum") c.memory.mu_theta_mode = MuThetaMode::kSum;
      else throw ConfigError(key + ": expected sum_abs or sum, got '" + v + "'");
    };

    t["ghsom.tau1"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::tau1);
    t["ghsom.tau2"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::tau2);
    t["ghsom.alpha_strat"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::alpha_strat);
    t["ghsom.beta_qe"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::beta_qe);
    t["ghsom.epochs"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::epochs);
    t["ghsom.lr0"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::lr0);
    t["ghsom.radius0"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::radius0);
    t["ghsom.max_depth"] = nested_number(&PipelineConfig::ghsom, &GhsomConfig::max_depth);

    t["discovery.sim_hi"] = nested_number(&PipelineConfig::discovery, &DiscoveryThresholds::sim_hi);
    t["discovery.tfidf_hi"] =
        nested_number(&PipelineConfig::discovery, &DiscoveryThresholds::tfidf_hi);
    t["discovery.eval_hi"] = nested_number(&PipelineConfig::discovery, &DiscoveryThresholds::eval_hi);

    t["pipeline.with_photos"] = [](PipelineConfig& c, const std::string& key, const std::string& v,
                                   const fs::path&) { c.with_photos = parse_bool(key, v); };
    t["pipeline.seed"] = [](PipelineConfig& c, const std::string& key, const std::string& v,
                            const fs::path&) { c.seed = parse_number<std::uint64_t>(key, v); };
    return t;
  }();
  return table;
}

void set_key(PipelineConfig& cfg, const std::string& key, const std::string& value,
             const fs::path& base) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
  it->second(cfg, key, value, base);
}

}  // namespace

void PipelineConfig::validate() const {
  signature.validate();
  csaim.validate();
  memory.validate();
  ghsom.validate();
  discovery.validate();
  if (!seed) throw ConfigError("a seed is required");
}

std::uint64_t PipelineConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required");
  return *seed;
}

void apply_override(PipelineConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' is not section.key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.find('.') == std::string::npos)
    throw ConfigError("override key '" + key + "' needs a section");
  set_key(cfg, key, value, fs::current_path());
}

PipelineConfig parse_config(std::string_view ini_text, const fs::path& base_dir,
                            const std::vector<std::string>& overrides) {
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  PipelineConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      // key outside any section
      throw ConfigError("setting '" + section + "' is outside a section");
    }
    for (const auto& [key, node] : body) {
      set_key(cfg, section + "." + key, trim(node.data()), base_dir);
    }
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

PipelineConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  const std::string text = read_text_file(file);
  fs::path base = file.parent_path();
  if (base.empty()) base = fs::current_path();
  return parse_config(text, fs::absolute(base), overrides);
}

std::string config_to_ini(const PipelineConfig& c) {
  std::ostringstream out;
  auto num = [](double v) { return format_double(v); };
  out << "[paths]\n"
      << "records = " << c.paths.records.string() << "\n"
      << "images = " << c.paths.images.string() << "\n"
      << "landmarks = " << c.paths.landmarks.string() << "\n"
      << "vocabulary = " << c.paths.vocabulary.string() << "\n"
      << "exemplars = " << c.paths.exemplars.string() << "\n";
  if (!c.out_dir.empty()) out << "out = " << c.out_dir.string() << "\n";
  out << "\n[signature]\n"
      << "grid_size = " << c.signature.grid_size << "\n"
      << "levels = " << c.signature.levels << "\n"
      << "trials = " << c.signature.trials << "\n"
      << "aggregate = " << (c.signature.aggregate == Aggregate::kMean ? "mean" : "max") << "\n";
  out << "\n[csaim]\n"
      << "m = " << c.csaim.m << "\n"
      << "n = " << c.csaim.n << "\n"
      << "q = " << c.csaim.q << "\n"
      << "a = " << num(c.csaim.a) << "\n"
      << "anneal_alpha = " << num(c.csaim.anneal_alpha) << "\n"
      << "replace_beta = " << num(c.csaim.replace_beta) << "\n"
      << "replace_period = " << c.csaim.replace_period << "\n"
      << "g_max = " << c.csaim.g_max << "\n"
      << "e_sim = " << num(c.csaim.e_sim) << "\n"
      << "gamma_w = " << num(c.csaim.gamma_w) << "\n"
      << "gamma_theta = " << num(c.csaim.gamma_theta) << "\n"
      << "n_sub = " << c.csaim.n_sub << "\n"
      << "invert_clone_allocation = " << (c.csaim.invert_clone_allocation ? "true" : "false")
      << "\n";
  out << "\n[memory]\n"
      << "initial_categories = " << c.memory.initial_categories << "\n"
      << "mu_theta_mode = " << (c.memory.mu_theta_mode == MuThetaMode::kSumAbs ? "sum_abs" : "sum")
      << "\n"
      << "crowd_radius_factor = " << num(c.memory.crowd_radius_factor) << "\n"
      << "max_retry = " << c.memory.max_retry << "\n";
  out << "\n[ghsom]\n"
      << "tau1 = " << num(c.ghsom.tau1) << "\n"
      << "tau2 = " << num(c.ghsom.tau2) << "\n"
      << "alpha_strat = " << num(c.ghsom.alpha_strat) << "\n"
      << "beta_qe = " << num(c.ghsom.beta_qe) << "\n"
      << "epochs = " << c.ghsom.epochs << "\n"
      << "lr0 = " << num(c.ghsom.lr0) << "\n"
      << "radius0 = " << num(c.ghsom.radius0) << "\n"
      << "max_depth = " << c.ghsom.max_depth << "\n";
  out << "\n[discovery]\n"
      << "sim_hi = " << num(c.discovery.sim_hi) << "\n"
      << "tfidf_hi = " << num(c.discovery.tfidf_hi) << "\n"
      << "eval_hi = " << num(c.discovery.eval_hi) << "\n";
  out << "\n[pipeline]\n"
      << "with_photos = " << (c.with_photos ? "true" : "false") << "\n";
  if (c.seed) out << "seed = " << *c.seed << "\n";
  return out.str();
}

}  // namespace cryptic
