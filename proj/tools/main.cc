#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maskmem/app.h"
#include "maskmem/error.h"

namespace {

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

bool is_bool_key(const std::string& key) {
  const std::string v = maskmem::get_config_value(maskmem::RunConfig{}, key);
  return v == "true" || v == "false";
}

// Registers one option per config key on `cmd`; values land in `given`.
void add_config_options(CLI::App* cmd, std::map<std::string, std::string>& given,
                        std::vector<std::string>& config_files) {
  cmd->add_option("--config", config_files,
                  "key = value config file(s); flags given here override them");
  const maskmem::RunConfig defaults;
  for (const auto& key : maskmem::config_keys()) {
    std::string names = "--" + dashed(key);
    if (dashed(key) != key) names += ",--" + key;
    if (key == "data_dir") names += ",--data,--out";
    const std::string help = "default: " + maskmem::get_config_value(defaults, key);
    if (is_bool_key(key)) {
      cmd->add_option_function<std::string>(
             names, [&given, key](const std::string& v) { given[key] = v; }, help)
          ->expected(0, 1)
          ->default_str("true");
    } else {
      cmd->add_option_function<std::string>(
          names, [&given, key](const std::string& v) { given[key] = v; }, help);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-network dialog models with answer masking"};
  app.require_subcommand(1);
  std::map<std::string, std::string> given;
  std::vector<std::string> config_files;
  std::vector<std::string> csv_files;

  auto* gen = app.add_subcommand("generate", "simulate dialog corpora and write a data directory");
  auto* train = app.add_subcommand("train", "train a model on a data directory");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint; prints CSV rows");
  auto* report = app.add_subcommand("report", "print a results grid from metrics CSV files");
  auto* chat = app.add_subcommand("chat", "talk to a trained model");
  for (auto* cmd : {gen, train, eval, report, chat}) add_config_options(cmd, given, config_files);
  report->add_option("csv", csv_files, "metrics CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    maskmem::RunConfig config;
    for (const auto& f : config_files) maskmem::apply_config_file(config, f);
    for (const auto& [key, value] : given) maskmem::set_config_value(config, key, value);

    if (gen->parsed()) maskmem::cmd_generate(config, std::cout);
    if (train->parsed()) maskmem::cmd_train(config, std::cout);
    if (eval->parsed()) maskmem::cmd_eval(config, std::cout);
    if (report->parsed()) maskmem::cmd_report(config, csv_files, std::cout);
    if (chat->parsed()) maskmem::cmd_chat(config, std::cin, std::cout);
  } catch (const maskmem::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const maskmem::ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const maskmem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
