#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenchlab/env.hpp"
#include "quenchlab/growth.hpp"
#include "quenchlab/lattice.hpp"
#include "quenchlab/localize.hpp"
#include "quenchlab/pspm.hpp"

namespace quenchlab::cli {

enum class FieldType { integer, real, boolean, string, int_list, real_list, object };

struct FieldSpec {
  std::string name;
  FieldType type;
  nlohmann::json default_value;  // null: optional with no default
  std::string help;
};

struct Schema {
  std::string subcommand;
  std::string help;
  std::vector<FieldSpec> fields;
};

const std::vector<Schema>& schemas();
// Throws ConfigError for an unknown subcommand.
const Schema& schema_for(const std::string& subcommand);

// Parses flag text for one field: numbers, true/false, comma-separated lists,
// JSON text for objects. Throws ConfigError.
nlohmann::json parse_flag_value(const FieldSpec& field, const std::string& text);

// Rejects unknown keys and mistyped values, fills defaults. Throws ConfigError.
nlohmann::json normalize_config(const Schema& schema, const nlohmann::json& raw);

// Throws IoError if the file cannot be read, ConfigError if it is not a JSON object.
nlohmann::json load_config_file(const std::filesystem::path& path);

// Replaces "seed" with the value of QUENCHLAB_SEED when that variable is set.
void apply_seed_override(nlohmann::json& config);

struct PolymerConfig {
  int d = 1;
  int n = 100;
  double beta = 1.0;
  DistSpec dist;
  std::uint64_t seed = 0;
  double delta = 0.1;
  int K = 2;
  LocalizationMode localization_mode = LocalizationMode::certificate;
  bool frames = true;
  std::optional<Coord> point_to_point;
  std::string output = "out";

  static PolymerConfig from_json(const nlohmann::json& normalized);
};

struct MskConfig {
  double lambda1 = 0.5;
  double d11 = 1.0;
  double d22 = 1.0;
  double d12 = 1.0;
  std::vector<double> beta_grid;
  std::vector<double> h_grid;
  int quad_order = 120;
  bool search = true;
  std::uint64_t seed = 0;
  std::string output = "out";

  static MskConfig from_json(const nlohmann::json& normalized);
};

struct PspmConfig {
  std::optional<PSPM> f;
  std::string input;
  double beta = 1.0;
  DistSpec dist;
  double alpha = 2.0;
  int samples = 10;
  int n_mc = 100;
  int polymer_n = 0;
  int repetitions = 5;
  std::uint64_t seed = 0;
  std::string output = "out";

  static PspmConfig from_json(const nlohmann::json& normalized);
};

struct PassageConfig {
  bool lpp = false;
  int n = 16;
  std::optional<Box> box;
  Coord src{0, 0};
  std::optional<Coord> dst;
  DistSpec dist = DistSpec::exponential(1.0);
  int replicas = 1;
  std::uint64_t seed = 0;
  std::string output = "out";

  Box resolved_box() const;
  Coord resolved_dst() const;
  static PassageConfig from_json(const nlohmann::json& normalized, bool lpp);
};

struct FluctConfig {
  FluctuationConfig experiment;
  std::string output = "out";

  static FluctConfig from_json(const nlohmann::json& normalized);
};

struct SelftestConfig {
  int trials = 200;
  int max_atoms = 5;
  double alpha = 2.0;
  std::uint64_t seed = 0;
  std::string output = "out";

  static SelftestConfig from_json(const nlohmann::json& normalized);
};

}  // namespace quenchlab::cli
