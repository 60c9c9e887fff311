#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryptic/corpus.hpp"
#include "cryptic/ghsom.hpp"
#include "cryptic/immune.hpp"
#include "cryptic/signature.hpp"

namespace cryptic {

struct PipelinePaths {
  std::filesystem::path records;
  std::filesystem::path images;      // photo directory
  std::filesystem::path landmarks;   // directory with manifest.csv
  std::filesystem::path vocabulary;
  std::filesystem::path exemplars;   // `id,category`
};

struct PipelineConfig {
  PipelinePaths paths;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // mandatory, no clock fallback
  SignatureConfig signature;
  CsaimConfig csaim;
  MemoryConfig memory;
  GhsomConfig ghsom;
  DiscoveryThresholds discovery;
  bool with_photos = true;

  /// Range checks of every embedded config plus a present seed.
  void validate() const;
  std::uint64_t require_seed() const;
};

/// INI text. Keys live in sections [paths] [signature] [csaim] [memory]
/// [ghsom] [discovery] [pipeline]; unknown sections or keys are rejected.
/// Relative paths are resolved against `base_dir`. `overrides` are
/// "section.key=value" strings applied on top; their relative paths resolve
/// against the working directory.
PipelineConfig parse_config(std::string_view ini_text, const std::filesystem::path& base_dir,
                            const std::vector<std::string>& overrides = {});

/// Reads the file (throws InputError) and calls parse_config with its directory.
PipelineConfig load_config(const std::filesystem::path& file,
                           const std::vector<std::string>& overrides = {});

/// Applies one "section.key=value" to an already built config.
void apply_override(PipelineConfig& cfg, std::string_view assignment);

/// Canonical INI of every setting, absolute paths. parse_config of the result
/// gives back an equal config.
std::string config_to_ini(const PipelineConfig& cfg);

}  // namespace cryptic
