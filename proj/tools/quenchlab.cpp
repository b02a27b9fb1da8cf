#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "quenchlab/cli/config.hpp"
#include "quenchlab/cli/runners.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/version.hpp"

namespace ql = quenchlab::cli;

int main(int argc, char** argv) {
  CLI::App app{"quenchlab: disordered-systems experiments"};
  app.set_version_flag("--version", std::string(quenchlab::kVersion));
  app.require_subcommand(1);
  std::string config_path;
  int jobs = 1;
  std::map<std::string, std::map<std::string, std::string>> flags;
  for (const auto& schema : ql::schemas()) {
    CLI::App* sub = app.add_subcommand(schema.subcommand, schema.help);
    sub->add_option("--config", config_path, "JSON config file; its keys override flags");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    auto& slot = flags[schema.subcommand];
    for (const auto& field : schema.fields) {
      std::string help = field.help;
      if (!field.default_value.is_null()) help += " [default " + field.default_value.dump() + "]";
      sub->add_option("--" + field.name, slot[field.name], help);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ql::kExitConfig;
  }
  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  nlohmann::json raw = nlohmann::json::object();
  try {
    const ql::Schema& schema = ql::schema_for(name);
    for (const auto& field : schema.fields)
      if (chosen->count("--" + field.name) > 0) raw[field.name] = ql::parse_flag_value(field, flags[name][field.name]);
    if (!config_path.empty()) {
      const nlohmann::json file = ql::load_config_file(config_path);
      for (const auto& [key, value] : file.items()) raw[key] = value;
    }
  } catch (const quenchlab::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return ql::kExitConfig;
  } catch (const quenchlab::IoError& e) {
    std::cerr << "error: I/O: " << e.what() << '\n';
    return ql::kExitIo;
  }
  return ql::execute(name, raw, jobs);
}
