// Copyright 2026 The StegGuard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// stegguard command-line front end.
//
//   stegguard pretrain    [--role victim|independent]
//   stegguard fingerprint --victim W
//   stegguard attack KIND --victim W [--param X] [--epochs N]
//   stegguard verify      --bundle B --suspect W... [--panel W...] [--victim W]
//   stegguard explain     --bundle B --encoder W... [--layer blockI] [--image I]
//   stegguard ablate AXIS --victim W [--panel W...] [--bundle B]
//
// Every command accepts --config FILE, --seed N, --out DIR and --exit-verdict.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stegguard/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool exit_verdict = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "master seed (overrides SG_SEED and the config)");
  cmd->add_option("--out", c.out, "write into this run directory instead of a new one");
  cmd->add_flag("--exit-verdict", c.exit_verdict, "exit 10 for piracy, 11 for independent");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"StegGuard: fingerprinting and verifying self-supervised encoders"};
  app.require_subcommand(1);

  Common common;
  sg::CommandOptions opts;
  std::string victim, bundle;
  std::vector<std::string> suspects, panel, encoders;
  std::optional<double> param;
  std::optional<int> epochs;

  auto* pretrain = app.add_subcommand("pretrain", "contrastive pre-training of an encoder");
  pretrain->add_option("--role", opts.role, "victim or independent")
      ->check(CLI::IsMember({"victim", "independent"}));

  auto* fingerprint = app.add_subcommand("fingerprint", "learn the embedder/extractor pair");
  fingerprint->add_option("--victim", victim, "victim weight file")->required();

  auto* attack = app.add_subcommand("attack", "derive a piracy encoder or oracle wrapper");
  attack->add_option("kind", opts.attack,
                     "extract | ft-same | ft-other | ftal | rtal | prune | noise | shuffle")
      ->required();
  attack->add_option("--victim", victim, "victim weight file")->required();
  attack->add_option("--param", param, "prune rate, noise scale or shuffle fraction");
  attack->add_option("--epochs", epochs, "training epochs (extract, fine-tuning)");

  auto* verify = app.add_subcommand("verify", "verify suspect encoders against a bundle");
  verify->add_option("--bundle", bundle, "fingerprint bundle")->required();
  verify->add_option("--suspect", suspects, "suspect weight file or wrapper descriptor")
      ->required();
  verify->add_option("--panel", panel, "independent encoders for the t-test and calibration");
  verify->add_option("--victim", victim, "victim weight file (threshold calibration)");

  auto* explain = app.add_subcommand("explain", "GradCAM heat maps on a stego image");
  explain->add_option("--bundle", bundle, "fingerprint bundle")->required();
  explain->add_option("--encoder", encoders, "encoder weight files")->required();
  explain->add_option("--layer", opts.layer, "target block, e.g. block3 (default: last)");
  explain->add_option("--image", opts.image_index, "dataset index of the image");

  auto* ablate = app.add_subcommand("ablate", "run an ablation sweep");
  ablate->add_option("axis", opts.axis,
                     "secret-length | train-size | dataset | query-count | fcaemb")
      ->required();
  ablate->add_option("--victim", victim, "victim weight file")->required();
  ablate->add_option("--panel", panel, "independent encoders for p-values");
  ablate->add_option("--bundle", bundle, "bundle for the query-count axis");

  for (auto* cmd : {pretrain, fingerprint, attack, verify, explain, ablate}) {
    add_common(cmd, common);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sg::kExitConfig;
  }

  try {
    opts.config = sg::load_run_config(common.config, common.seed);
    if (!common.out.empty()) opts.out = common.out;
    opts.exit_verdict = common.exit_verdict;
    opts.victim = victim;
    opts.bundle = bundle;
    for (const auto& s : suspects) opts.suspects.emplace_back(s);
    for (const auto& p : panel) opts.panel.emplace_back(p);
    for (const auto& e : encoders) opts.encoders.emplace_back(e);
    opts.param = param;
    opts.epochs = epochs;

    if (*pretrain) return sg::cmd_pretrain(opts);
    if (*fingerprint) return sg::cmd_fingerprint(opts);
    if (*attack) return sg::cmd_attack(opts);
    if (*verify) return sg::cmd_verify(opts);
    if (*explain) return sg::cmd_explain(opts);
    return sg::cmd_ablate(opts);
  } catch (const std::exception& e) {
    std::cerr << "stegguard: " << e.what() << "\n";
    return sg::exit_code_for(e);
  }
}
