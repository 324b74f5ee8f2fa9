// SPDX-License-Identifier: MIT
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "llob/experiments.hpp"

// Exit codes: 0 all bands pass, 1 some band fails, 2 bad input, 3 numerical failure.
int main(int argc, char** argv) {
  CLI::App app{"latent order book experiments"};
  std::string name, config_file, out_dir;
  std::vector<std::string> sets;
  long long seed = -1;
  bool unsafe = false, print_config = false;
  app.add_option("experiment", name, "experiment name, or 'list'")->required();
  app.add_option("--config", config_file, "key = value file");
  app.add_option("--set", sets, "override one key, key=value (repeatable)");
  app.add_option("--seed", seed, "random seed (experiments that draw random numbers)");
  app.add_option("--out", out_dir, "directory for CSV, manifest and summary files");
  app.add_flag("--unsafe", unsafe, "skip regime guards");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (name == "list") {
      std::cout << llob::list_experiments();
      return 0;
    }
    const llob::Experiment& e = llob::find_experiment(name);
    llob::Config cfg = llob::default_config(e);
    if (!config_file.empty()) cfg.load(config_file);
    for (const auto& s : sets) cfg.set_assignment(s);
    if (seed >= 0) {
      if (!cfg.has("seed")) throw llob::input_error("experiment '" + name + "' takes no seed");
      cfg.set("seed", std::to_string(seed));
    }
    if (unsafe) {
      if (!cfg.has("unsafe")) throw llob::input_error("experiment '" + name + "' has no regime guards");
      cfg.set("unsafe", "true");
    }
    if (print_config) {
      std::cout << cfg.dump();
      return 0;
    }
    const llob::Report rep = llob::run_experiment(e, cfg, out_dir);
    std::cout << llob::format_report(rep);
    return rep.passed() ? 0 : 1;
  } catch (const llob::input_error& ex) {
    std::cerr << "input error: " << ex.what() << '\n';
    return 2;
  } catch (const llob::numerical_error& ex) {
    std::cerr << "numerical error: " << ex.what() << '\n';
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 3;
  }
}
