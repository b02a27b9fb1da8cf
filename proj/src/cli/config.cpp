#include "quenchlab/cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "quenchlab/errors.hpp"
#include "quenchlab/quadrature.hpp"

namespace quenchlab::cli {

namespace {

using nlohmann::json;

json gaussian_default() { return json{{"kind", "gaussian"}, {"params", {{"mean", 0.0}, {"sd", 1.0}}}}; }
json exponential_default() { return json{{"kind", "exponential"}, {"params", {{"rate", 1.0}}}}; }

std::vector<Schema> build_schemas() {
  const FieldSpec seed{"seed", FieldType::integer, 0, "random seed (QUENCHLAB_SEED overrides)"};
  const FieldSpec output{"output", FieldType::string, "out", "output directory"};
  std::vector<Schema> out;
  out.push_back({"polymer",
                 "directed polymer run: frame dumps, summary and localization report",
                 {{"d", FieldType::integer, 1, "transverse dimension (1 or 2)"},
                  {"n", FieldType::integer, 100, "polymer length"},
                  {"beta", FieldType::real, 1.0, "inverse temperature"},
                  {"dist", FieldType::object, gaussian_default(), "weight law as JSON {kind, params}"},
                  seed,
                  {"delta", FieldType::real, 0.1, "localization mass defect"},
                  {"K", FieldType::integer, 2, "localization diameter"},
                  {"localization_mode", FieldType::string, "certificate", "exact or certificate"},
                  {"frames", FieldType::boolean, true, "write per-step frame CSVs"},
                  {"point_to_point", FieldType::int_list, nullptr, "endpoint for the point-to-point partition function"},
                  output}});
  out.push_back({"msk",
                 "two-species SK sweep over a (beta, h) grid",
                 {{"lambda1", FieldType::real, 0.5, "weight of species 1"},
                  {"d11", FieldType::real, 1.0, "variance delta2_11"},
                  {"d22", FieldType::real, 1.0, "variance delta2_22"},
                  {"d12", FieldType::real, 1.0, "variance delta2_12"},
                  {"beta_grid", FieldType::real_list, json::array({1.0}), "inverse temperatures"},
                  {"h_grid", FieldType::real_list, json::array({0.5}), "external fields"},
                  {"quad_order", FieldType::integer, kDefaultQuadratureOrder, "normal-expectation quadrature order"},
                  {"search", FieldType::boolean, true, "search for a 1RSB witness where the AT check is broken"},
                  seed,
                  output}});
  out.push_back({"pspm",
                 "update-map samples, R functional and Wasserstein proxy for a subprobability measure",
                 {{"f", FieldType::object, nullptr, "inline PSPM JSON {d, copies}"},
                  {"input", FieldType::string, "", "path to a PSPM JSON file"},
                  {"beta", FieldType::real, 1.0, "inverse temperature"},
                  {"dist", FieldType::object, gaussian_default(), "weight law"},
                  {"alpha", FieldType::real, 2.0, "metric parameter (> 1)"},
                  {"samples", FieldType::integer, 10, "number of update draws"},
                  {"n_mc", FieldType::integer, 100, "Monte Carlo draws for R"},
                  {"polymer_n", FieldType::integer, 0, "if > 0, estimate W(rho_n, T rho_n) from a d=1 run"},
                  {"repetitions", FieldType::integer, 5, "repetitions of the Wasserstein proxy"},
                  seed,
                  output}});
  for (const char* name : {"fpp", "lpp"}) {
    const bool lpp = std::string(name) == "lpp";
    out.push_back({name,
                   lpp ? "last-passage times and geodesics" : "first-passage times and geodesics",
                   {{"n", FieldType::integer, 16, "scale: default target (n, 0) for fpp, (n, n) for lpp"},
                    {"box", FieldType::int_list, nullptr, "x0,x1,y0,y1 (default from n)"},
                    {"src", FieldType::int_list, json::array({0, 0}), "source vertex"},
                    {"dst", FieldType::int_list, nullptr, "target vertex"},
                    {"dist", FieldType::object, exponential_default(), "weight law"},
                    {"replicas", FieldType::integer, 1, "independent fields"},
                    seed,
                    output}});
  }
  out.push_back({"fluct",
                 "coupled fluctuation experiment",
                 {{"model", FieldType::string, "fpp", "fpp, lpp or polymer"},
                  {"dist", FieldType::object, exponential_default(), "weight law"},
                  {"n_list", FieldType::int_list, json::array({64, 128}), "system sizes"},
                  {"replicas", FieldType::integer, 200, "replicas per size (>= 20)"},
                  {"m", FieldType::integer, 1, "extra copies in the coupling"},
                  {"mode", FieldType::string, nullptr, "min or max (default min for fpp, max otherwise)"},
                  {"alpha", FieldType::real, 1.0, "switch-rate scale"},
                  {"beta", FieldType::real, 1.0, "inverse temperature (polymer)"},
                  seed,
                  output}});
  out.push_back({"metric-selftest",
                 "metric axioms of the exact PSPM distance on random triples",
                 {{"trials", FieldType::integer, 200, "random triples"},
                  {"max_atoms", FieldType::integer, 5, "atoms per measure"},
                  {"alpha", FieldType::real, 2.0, "metric parameter (> 1)"},
                  seed,
                  output}});
  return out;
}

std::string type_name(FieldType t) {
  switch (t) {
    case FieldType::integer: return "integer";
    case FieldType::real: return "number";
    case FieldType::boolean: return "boolean";
    case FieldType::string: return "string";
    case FieldType::int_list: return "list of integers";
    case FieldType::real_list: return "list of numbers";
    case FieldType::object: return "JSON object";
  }
  return "value";
}

bool type_matches(FieldType t, const json& v) {
  switch (t) {
    case FieldType::integer: return v.is_number_integer();
    case FieldType::real: return v.is_number();
    case FieldType::boolean: return v.is_boolean();
    case FieldType::string: return v.is_string();
    case FieldType::int_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_integer(); });
    case FieldType::real_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
    case FieldType::object: return v.is_object();
  }
  return false;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::uint64_t get_seed(const json& c) {
  const json& s = c.at("seed");
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.get<std::int64_t>() < 0) throw ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(s.get<std::int64_t>());
}

DistSpec get_dist(const json& c, const char* key) {
  try {
    return c.at(key).get<DistSpec>();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

Coord get_coord(const json& v, const char* key) {
  if (v.size() != 2) throw ConfigError(std::string(key) + " must have two coordinates");
  return {v[0].get<int>(), v[1].get<int>()};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

const std::vector<Schema>& schemas() {
  static const std::vector<Schema> all = build_schemas();
  return all;
}

const Schema& schema_for(const std::string& subcommand) {
  for (const auto& s : schemas())
    if (s.subcommand == subcommand) return s;
  throw ConfigError("unknown subcommand '" + subcommand + "'");
}

json parse_flag_value(const FieldSpec& field, const std::string& text) {
  try {
    switch (field.type) {
      case FieldType::integer: {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size()) break;
        return v;
      }
      case FieldType::real: {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) break;
        return v;
      }
      case FieldType::boolean:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        break;
      case FieldType::string:
        return text;
      case FieldType::int_list:
      case FieldType::real_list: {
        json arr = json::array();
        const FieldSpec elem{field.name, field.type == FieldType::int_list ? FieldType::integer : FieldType::real,
                             nullptr, ""};
        for (const auto& part : split(text, ',')) arr.push_back(parse_flag_value(elem, part));
        return arr;
      }
      case FieldType::object: {
        json v = json::parse(text);
        if (v.is_object()) return v;
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + field.name + ": expected " + type_name(field.type) + ", got '" + text + "'");
}

json normalize_config(const Schema& schema, const json& raw) {
  if (!raw.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : raw.items()) {
    const auto it = std::find_if(schema.fields.begin(), schema.fields.end(),
                                 [&](const FieldSpec& f) { return f.name == key; });
    if (it == schema.fields.end()) throw ConfigError("unknown key '" + key + "' for subcommand " + schema.subcommand);
    if (!value.is_null() && !type_matches(it->type, value))
      throw ConfigError("key '" + key + "' must be a " + type_name(it->type));
  }
  json out = json::object();
  for (const auto& f : schema.fields) {
    if (raw.contains(f.name) && !raw.at(f.name).is_null())
      out[f.name] = raw.at(f.name);
    else
      out[f.name] = f.default_value;
  }
  return out;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path.string() + " must hold a JSON object");
  return j;
}

void apply_seed_override(json& config) {
  const char* env = std::getenv("QUENCHLAB_SEED");
  if (!env || !*env) return;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(env, &pos);
    if (pos != std::string(env).size() || std::string(env).front() == '-') throw std::invalid_argument("seed");
    config["seed"] = static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(std::string("QUENCHLAB_SEED is not a nonnegative integer: '") + env + "'");
  }
}

PolymerConfig PolymerConfig::from_json(const json& c) {
  PolymerConfig p;
  p.d = c.at("d").get<int>();
  p.n = c.at("n").get<int>();
  p.beta = c.at("beta").get<double>();
  p.dist = get_dist(c, "dist");
  p.seed = get_seed(c);
  p.delta = c.at("delta").get<double>();
  p.K = c.at("K").get<int>();
  const std::string mode = c.at("localization_mode").get<std::string>();
  require(mode == "exact" || mode == "certificate", "localization_mode must be exact or certificate");
  p.localization_mode = mode == "exact" ? LocalizationMode::exact : LocalizationMode::certificate;
  p.frames = c.at("frames").get<bool>();
  if (!c.at("point_to_point").is_null()) {
    const json& v = c.at("point_to_point");
    require(static_cast<int>(v.size()) == p.d, "point_to_point must have d coordinates");
    p.point_to_point = Coord{v[0].get<int>(), p.d == 2 ? v[1].get<int>() : 0};
  }
  p.output = c.at("output").get<std::string>();
  require(p.d == 1 || p.d == 2, "d must be 1 or 2");
  require(p.n >= 1 && p.n <= (p.d == 1 ? 100000 : 400), "n out of range (1..1e5 for d=1, 1..400 for d=2)");
  require(p.beta >= 0.0, "beta must be >= 0");
  require(p.delta > 0.0 && p.delta < 1.0, "delta must lie in (0, 1)");
  require(p.K >= 0, "K must be >= 0");
  return p;
}

MskConfig MskConfig::from_json(const json& c) {
  MskConfig m;
  m.lambda1 = c.at("lambda1").get<double>();
  m.d11 = c.at("d11").get<double>();
  m.d22 = c.at("d22").get<double>();
  m.d12 = c.at("d12").get<double>();
  m.beta_grid = c.at("beta_grid").get<std::vector<double>>();
  m.h_grid = c.at("h_grid").get<std::vector<double>>();
  m.quad_order = c.at("quad_order").get<int>();
  m.search = c.at("search").get<bool>();
  m.seed = get_seed(c);
  m.output = c.at("output").get<std::string>();
  require(!m.beta_grid.empty() && !m.h_grid.empty(), "beta_grid and h_grid must be nonempty");
  require(m.quad_order >= 1 && m.quad_order <= 4001, "quad_order must lie in [1, 4001]");
  for (double b : m.beta_grid) require(b >= 0.0, "beta_grid entries must be >= 0");
  for (double h : m.h_grid) require(h >= 0.0, "h_grid entries must be >= 0");
  return m;
}

PspmConfig PspmConfig::from_json(const json& c) {
  PspmConfig p;
  try {
    if (!c.at("f").is_null()) p.f = c.at("f").get<PSPM>();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("f: ") + e.what());
  }
  p.input = c.at("input").get<std::string>();
  p.beta = c.at("beta").get<double>();
  p.dist = get_dist(c, "dist");
  p.alpha = c.at("alpha").get<double>();
  p.samples = c.at("samples").get<int>();
  p.n_mc = c.at("n_mc").get<int>();
  p.polymer_n = c.at("polymer_n").get<int>();
  p.repetitions = c.at("repetitions").get<int>();
  p.seed = get_seed(c);
  p.output = c.at("output").get<std::string>();
  require(p.f.has_value() != !p.input.empty(), "give exactly one of f and input");
  require(p.alpha > 1.0, "alpha must be > 1");
  require(p.samples >= 1, "samples must be >= 1");
  require(p.n_mc >= 2, "n_mc must be >= 2");
  require(p.polymer_n >= 0, "polymer_n must be >= 0");
  require(p.repetitions >= 2, "repetitions must be >= 2");
  return p;
}

Box PassageConfig::resolved_box() const {
  if (box) return *box;
  if (lpp) return {std::min(src[0], 0), std::max(n, src[0]), std::min(src[1], 0), std::max(n, src[1])};
  return {-n / 4, n + n / 4, -n / 2, n / 2};
}

Coord PassageConfig::resolved_dst() const {
  if (dst) return *dst;
  return lpp ? Coord{n, n} : Coord{n, 0};
}

PassageConfig PassageConfig::from_json(const json& c, bool lpp) {
  PassageConfig p;
  p.lpp = lpp;
  p.n = c.at("n").get<int>();
  if (!c.at("box").is_null()) {
    const json& b = c.at("box");
    require(b.size() == 4, "box must be x0,x1,y0,y1");
    p.box = Box{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
    require(p.box->x1 >= p.box->x0 && p.box->y1 >= p.box->y0, "box must satisfy x0 <= x1 and y0 <= y1");
  }
  p.src = get_coord(c.at("src"), "src");
  if (!c.at("dst").is_null()) p.dst = get_coord(c.at("dst"), "dst");
  p.dist = get_dist(c, "dist");
  p.replicas = c.at("replicas").get<int>();
  p.seed = get_seed(c);
  p.output = c.at("output").get<std::string>();
  require(p.n >= 1, "n must be >= 1");
  require(p.replicas >= 1, "replicas must be >= 1");
  const Box b = p.resolved_box();
  require(b.contains(p.src) && b.contains(p.resolved_dst()), "src and dst must lie in the box");
  if (lpp) {
    const Coord d = p.resolved_dst();
    require(d[0] >= p.src[0] && d[1] >= p.src[1], "lpp requires dst >= src componentwise");
  } else {
    require(p.dist.essinf() >= 0.0, "fpp needs a nonnegative weight law");
  }
  return p;
}

FluctConfig FluctConfig::from_json(const json& c) {
  FluctConfig f;
  auto& e = f.experiment;
  try {
    e.model = growth_model_from_string(c.at("model").get<std::string>());
    if (!c.at("mode").is_null()) e.mode = coupling_mode_from_string(c.at("mode").get<std::string>());
  } catch (const ParameterError& err) {
    throw ConfigError(err.what());
  }
  e.dist = get_dist(c, "dist");
  e.n_list = c.at("n_list").get<std::vector<int>>();
  e.replicas = c.at("replicas").get<int>();
  e.m = c.at("m").get<int>();
  e.alpha = c.at("alpha").get<double>();
  e.beta = c.at("beta").get<double>();
  e.seed = get_seed(c);
  f.output = c.at("output").get<std::string>();
  require(e.replicas >= kMinReplicas, "replicas must be >= 20");
  try {
    e.validate();
  } catch (const ParameterError& err) {
    throw ConfigError(err.what());
  }
  return f;
}

SelftestConfig SelftestConfig::from_json(const json& c) {
  SelftestConfig s;
  s.trials = c.at("trials").get<int>();
  s.max_atoms = c.at("max_atoms").get<int>();
  s.alpha = c.at("alpha").get<double>();
  s.seed = get_seed(c);
  s.output = c.at("output").get<std::string>();
  require(s.trials >= 1, "trials must be >= 1");
  require(s.max_atoms >= 1 && s.max_atoms <= static_cast<int>(kExactMetricAtoms), "max_atoms must lie in [1, 8]");
  require(s.alpha > 1.0, "alpha must be > 1");
  return s;
}

}  // namespace quenchlab::cli
