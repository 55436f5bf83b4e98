#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msface/msface.h"

namespace {

const char* kCommandHelp[][2] = {
    {"synth", "generate a synthetic dataset into out"},
    {"scan", "catalog a dataset directory and list missing samples"},
    {"extract", "write a distance table per sensor and illumination cell"},
    {"sweep", "identification rate against window size"},
    {"mismatch", "train/test illumination mismatch matrix"},
    {"fuse", "score-level fusion across sensor combinations"},
    {"grid", "weight grid search over saved distance tables"},
};

void print_log(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

int report(msf_status status) {
  std::fprintf(stderr, "msface: error (%s): %s\n", msf_status_string(status), msf_last_error());
  return status == MSF_BAD_CONFIG ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multispectral face identification experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(msf_version()));

  struct Command {
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> overrides;
  };
  std::vector<Command> commands(sizeof kCommandHelp / sizeof kCommandHelp[0]);

  for (std::size_t c = 0; c < commands.size(); ++c) {
    Command& cmd = commands[c];
    cmd.app = app.add_subcommand(kCommandHelp[c][0], kCommandHelp[c][1]);
    cmd.app->add_option("-c,--config", cmd.config_file, "key = value configuration file");
    for (std::size_t k = 0; k < msf_config_key_count(); ++k) {
      const std::string name = msf_config_key_name(k);
      std::string help = msf_config_key_help(k);
      const std::string def = msf_config_key_default(k);
      if (!def.empty()) help += " [" + def + "]";
      cmd.app->add_option("--" + name, cmd.overrides[name], help);
    }
  }

  CLI11_PARSE(app, argc, argv);

  for (Command& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    msf_config* config = nullptr;
    if (msf_status s = msf_config_create(&config); s != MSF_OK) return report(s);
    msf_status status = MSF_OK;
    if (!cmd.config_file.empty()) status = msf_config_load(config, cmd.config_file.c_str());
    for (const auto& [key, value] : cmd.overrides) {
      if (status != MSF_OK) break;
      if (cmd.app->count("--" + key) == 0) continue;
      status = msf_config_set(config, key.c_str(), value.c_str());
    }
    if (status == MSF_OK) status = msf_run(config, cmd.app->get_name().c_str(), print_log, nullptr);
    msf_config_destroy(config);
    return status == MSF_OK ? 0 : report(status);
  }
  return 1;
}
