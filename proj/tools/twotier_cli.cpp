// Copyright 2026 The twotier Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "twotier/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-tier hyper-parameter optimization for tabular RL on cart-pole"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a seeded comparison of the optimizers");
  std::string config_path;
  std::string optimizers;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::string out_dir;
  unsigned threads = 0;
  int episodes = 0;
  bool rs_fix_structural = false;
  run->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("--optimizers", optimizers, "comma-separated subset of two_tier,random,mono_bo");
  auto* seed_opt = run->add_option("--seed", seed, "base seed (repetition r uses seed + r)");
  run->add_option("--reps", reps, "number of repetitions")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  run->add_option("--episodes", episodes, "episodes per meta-episode")->check(CLI::PositiveNumber);
  run->add_flag("--rs-fix-structural", rs_fix_structural, "random search keeps the baseline structure");

  auto* sum = app.add_subcommand("summarize", "Recompute summary.csv from results.csv");
  std::string in_path;
  std::string sum_out;
  std::string interval = "normal";
  sum->add_option("--in", in_path, "results.csv")->required()->check(CLI::ExistingFile);
  sum->add_option("--out", sum_out, "summary.csv to write")->required();
  sum->add_option("--interval", interval, "normal or t")->check(CLI::IsMember({"normal", "t"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      twotier::ConfigBuilder builder;
      if (!config_path.empty()) builder.parse_file(config_path);
      if (!optimizers.empty()) builder.set("optimizers", optimizers);
      if (*seed_opt) builder.set("seed", std::to_string(seed));
      if (reps > 0) builder.set("repetitions", std::to_string(reps));
      if (!out_dir.empty()) builder.set("out", out_dir);
      if (threads > 0) builder.set("threads", std::to_string(threads));
      if (episodes > 0) builder.set("episodes", std::to_string(episodes));
      if (rs_fix_structural) builder.set("rs_fix_structural", "true");
      const twotier::CampaignConfig cfg = builder.build();
      const int status = twotier::run_campaign(cfg, std::cerr);
      std::cout << twotier::read_text(std::filesystem::path(cfg.out_dir) / "best.txt");
      return status;
    }
    twotier::summarize_file(in_path, sum_out,
                            interval == "t" ? twotier::IntervalKind::StudentT : twotier::IntervalKind::Normal);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
