// tools/tandem-opt.cc

// Copyright 2026  The tandem-opt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tandem/harness.hpp"

int main(int argc, char** argv) {
  using namespace tandem;
  CLI::App app{"Tandem ASV + CM evaluation and optimisation on synthetic detector problems."};
  app.require_subcommand(1);

  std::string config, out, data, ckpt, method, exclude, runs, split = "eval";
  std::size_t seeds = 0;
  bool have_exclude = false;

  auto* gen = app.add_subcommand("gen-data", "Generate train/dev/eval trial lists and features.");
  gen->add_option("--config", config, "Config file (key = value)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();

  auto* pre = app.add_subcommand("pretrain", "Pretrain the ASV and CM scorers separately.");
  pre->add_option("--data", data, "Data directory written by gen-data")->required()->check(CLI::ExistingDirectory);
  pre->add_option("--out", out, "Checkpoint JSON to write")->required();
  pre->add_option("--config", config, "Config overriding <data>/config.txt")->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train-tandem", "Run one tandem optimisation method over several seeds.");
  train->add_option("--method", method, "FINETUNE, REINFORCE, REINFORCE_CALIB, REINFORCE_TDCF, "
                                        "REINFORCE_CALIB_TDCF or SOFT_TDCF")
      ->required();
  train->add_option("--ckpt", ckpt, "Pretrained checkpoint")->required()->check(CLI::ExistingFile);
  train->add_option("--data", data, "Data directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--seeds", seeds, "Number of seeds (default: train.seeds from the config)");
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--exclude-attacks", exclude,
                    "Comma-separated attacks left out of the filtered eval report (default: outlier attacks)");
  train->add_option("--config", config, "Config overriding <data>/config.txt")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("evaluate", "Score one split and write a metric report.");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data, "Data directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--split", split, "train, dev or eval");
  eval->add_option("--exclude-attacks", exclude, "Comma-separated attacks to drop before scoring metrics");
  eval->add_option("--out", out, "Report JSON; the score file is written next to it")->required();
  eval->add_option("--config", config, "Config overriding <data>/config.txt")->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("report", "Aggregate run directories into comparison and learning-curve CSVs.");
  rep->add_option("--runs", runs, "Directory searched recursively for run.json")->required();
  rep->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  have_exclude = train->count("--exclude-attacks") > 0;

  try {
    std::optional<HarnessConfig> cfg;
    if (!config.empty() && !app.got_subcommand(gen)) cfg = load_config(config);

    if (app.got_subcommand(gen)) {
      gen_data(load_config(config), out, std::cout);
    } else if (app.got_subcommand(pre)) {
      pretrain(load_data(data, cfg), out, std::cout);
    } else if (app.got_subcommand(train)) {
      const Method m = parse_method(method);
      DataSet d = load_data(data, cfg);
      auto excluded = have_exclude ? parse_attack_list(exclude) : outlier_attacks(d.config.world);
      train_tandem(m, load_checkpoint(ckpt), d, seeds ? seeds : d.config.seeds, excluded, out, std::cout);
    } else if (app.got_subcommand(eval)) {
      DataSet d = load_data(data, cfg);
      auto j = evaluate(load_checkpoint(ckpt), d, split, parse_attack_list(exclude), out);
      std::cout << report_line(split, metric_report_from_json(j["report"])) << '\n';
    } else if (app.got_subcommand(rep)) {
      report(runs, out, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
