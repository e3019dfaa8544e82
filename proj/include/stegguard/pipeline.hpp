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


#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stegguard/attacks.hpp"
#include "stegguard/explain.hpp"
#include "stegguard/verifier.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitConfig = 2,
  kExitTraining = 3,
  kExitIncompatible = 4,
  kExitPiracy = 10,
  kExitIndependent = 11,
};

// Maps a caught exception to its exit code.
int exit_code_for(const std::exception& e);

struct DatasetConfig {
  std::string kind = "synth";  // synth | raw
  std::filesystem::path path;  // raw only
  DatasetLayout layout;
  std::uint64_t seed = 7;      // synth only
  int n = 5000;                // synth: count; raw: 0 keeps every record

  void validate() const;
  Json to_json() const;
  static DatasetConfig from_json(const Json& j);
  ImageDataset load() const;
  // Stable tag recorded in encoder provenance.
  std::string tag() const;
};

struct QueryConfig {
  int queries = 1000;
  std::optional<double> threshold;  // calibrated when absent
  double significance = 0.05;
  // Draw the query set from images outside the fingerprint set.
  bool disjoint = false;
  int holdout = 200;               // calibration images

  void validate() const;
  Json to_json() const;
  static QueryConfig from_json(const Json& j);
};

struct RunConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  EncoderSpec encoder;
  SslConfig ssl;
  TrainConfig fingerprint;
  QueryConfig verify;
  ExtractConfig extract;
  FinetuneConfig finetune;
  DatasetConfig other_dataset;  // ft-other, surrogate data
  double prune_rate = 0.3;
  double noise_eps = 0.15;
  double shuffle_fraction = 0.05;
  std::filesystem::path out_dir = "runs";

  RunConfig();
  void validate() const;
  Json to_json() const;
  // Unknown keys are rejected; missing ones keep their defaults.
  static RunConfig from_json(const Json& j);
  // Propagates the master seed into every section.
  void apply_seed(std::uint64_t master);
};

// Reads a JSON config (or the defaults when `path` is empty) and applies the
// SG_SEED environment override, then `seed_override` if given.
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override);

// runs/<timestamp>-<digest>/ with manifest.json, weights/, bundles/,
// reports/ and csv/. Output digests are recorded relative to the root.
class RunDirectory {
 public:
  // `fixed` pins the directory (used by --out); otherwise a new one is named
  // from the UTC time and the digest of `identity`.
  RunDirectory(const std::filesystem::path& base, const Json& identity,
               const std::optional<std::filesystem::path>& fixed);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path weights() const { return root_ / "weights"; }
  std::filesystem::path bundles() const { return root_ / "bundles"; }
  std::filesystem::path reports() const { return root_ / "reports"; }
  std::filesystem::path csv() const { return root_ / "csv"; }

  void add_input(const std::filesystem::path& path);
  // Records a written file; `digest` overrides the file hash (reports are
  // recorded without their timestamp).
  void add_output(const std::filesystem::path& path,
                  const std::optional<std::string>& digest = std::nullopt);
  void write_manifest(const std::string& command, const Json& args, const RunConfig& config);

 private:
  std::filesystem::path root_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

// SHA-256 over the manifest with timestamps removed.
std::string manifest_digest(const std::filesystem::path& manifest_path);

struct CommandOptions {
  RunConfig config;
  std::optional<std::filesystem::path> out;  // fixed run directory
  bool exit_verdict = false;
  std::string role = "victim";               // pretrain
  std::filesystem::path victim;              // weight file
  std::filesystem::path bundle;
  std::vector<std::filesystem::path> suspects;  // weight or wrapper files
  std::vector<std::filesystem::path> panel;
  std::vector<std::filesystem::path> encoders;  // explain
  std::string attack;                           // attack kind
  std::string axis;                             // ablate axis
  std::string layer;                            // explain target
  int image_index = 0;
  std::optional<double> param;  // attack strength override
  std::optional<int> epochs;    // attack epochs override
};

int cmd_pretrain(const CommandOptions& options);
int cmd_fingerprint(const CommandOptions& options);
int cmd_attack(const CommandOptions& options);
int cmd_verify(const CommandOptions& options);
int cmd_explain(const CommandOptions& options);
int cmd_ablate(const CommandOptions& options);

// Opens a suspect file: an "SGW1" weight file or a wrapper descriptor.
std::shared_ptr<EncoderOracle> open_suspect(const std::filesystem::path& path, int image_size);

// Columns: epoch, loss_secret, loss_image, total, ebr_proxy (= loss_secret), ebr.
void write_curve_csv(const std::filesystem::path& path, std::span<const EpochRecord> curve);

inline const std::vector<int> kSecretLengthSweep = {16, 32, 64, 128, 256, 512};
inline const std::vector<std::string> kAblationAxes = {"secret-length", "train-size", "dataset",
                                                       "query-count", "fcaemb"};

}  // namespace SG_REAL_NS
}  // namespace sg
