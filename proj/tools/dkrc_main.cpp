// dkrc: collect -> train -> control -> eigen
//
//   dkrc <command> [--config FILE] [--out DIR] [--section.key VALUE ...]
//
// Config keys given as flags override the file; DKRC_CONFIG names the config
// file when --config is absent.

#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dkrc/config.hpp"
#include "dkrc/error.hpp"
#include "dkrc/pipeline.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() < 3) {
      throw dkrc::Error(dkrc::ErrorKind::Config, "unexpected argument '" + arg + "'");
    }
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(body, extras[++i]);
    } else {
      throw dkrc::Error(dkrc::ErrorKind::Config, "flag '" + arg + "' is missing a value");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Koopman representation for control"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "dkrc_out";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"collect", "Collect exploration data and write the dataset CSV"},
      {"train", "Train the lifting network and identify A, B, C"},
      {"control", "Play seeded games with the LQR/MPC controller"},
      {"eigen", "Export Koopman eigenfunction grids (pendulum only)"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Config file (key = value lines)");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->allow_extras();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (config_path.empty()) {
      if (const char* env = std::getenv("DKRC_CONFIG")) config_path = env;
    }
    const auto file_entries = config_path.empty()
                                  ? std::vector<std::pair<std::string, std::string>>{}
                                  : dkrc::read_config_file(config_path);
    const dkrc::RunConfig cfg = dkrc::build_config(file_entries, parse_overrides(sub->remaining()));

    const std::string name = sub->get_name();
    if (name == "collect") dkrc::pipeline::cmd_collect(cfg, out_dir, std::cout);
    else if (name == "train") dkrc::pipeline::cmd_train(cfg, out_dir, std::cout);
    else if (name == "control") dkrc::pipeline::cmd_control(cfg, out_dir, std::cout);
    else dkrc::pipeline::cmd_eigen(cfg, out_dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "dkrc: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
