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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stegguard/data.hpp"
#include "stegguard/encoder.hpp"
#include "stegguard/stego.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// (1/L) * sum_i (bits_i - logits_i)^2
double loss_secret(std::span<const Real> bits, std::span<const Real> logits);
// Mean squared error over every entry.
double loss_image(const Tensor& x, const Tensor& stego);
// l_image + alpha * l_secret
double total_loss(double l_image, double l_secret, double alpha);

// `kReverse` trains the extractor to return the complement of the secret.
enum class Direction { kForward, kReverse };

struct TrainConfig {
  double alpha = 0.7;
  int secret_len = 64;
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double stop_ebr = 0.05;  // stop once the epoch bit-error rate drops below
  int width = 64;          // embedder hidden channels
  // The image term's weight ramps linearly from 0 to 1 over this many epochs;
  // afterwards the objective is exactly l_image + alpha * l_secret.
  int warmup_epochs = 0;
  bool fca = true;
  Direction direction = Direction::kForward;
  std::uint64_t seed = 0;

  void validate() const;
  Json to_json() const;
  static TrainConfig from_json(const Json& j);
};

struct EpochRecord {
  int epoch = 0;
  double loss_secret = 0;  // also the MSE proxy for the bit-error rate
  double loss_image = 0;
  double total = 0;
  double ebr = 0;  // thresholded bit errors against the training target
};

struct StepRecord {
  double loss_secret;
  double loss_image;
  double total;
};

class FingerprintBundle {
 public:
  FingerprintBundle(Embedder embedder, Extractor extractor, TrainConfig config,
                    std::string victim_digest, int image_size);

  const StegoSpec& spec() const { return embedder_.spec(); }
  const TrainConfig& config() const { return config_; }
  const std::string& victim_digest() const { return victim_digest_; }
  int image_size() const { return image_size_; }
  int secret_len() const { return spec().secret_len; }
  int embed_dim() const { return extractor_.embed_dim(); }
  const std::vector<EpochRecord>& curve() const { return curve_; }
  std::vector<EpochRecord>& curve() { return curve_; }

  // Stego images as submitted to a suspect: eval-mode embedder, clamped.
  Tensor stego(const Tensor& images, const Tensor& secrets) const;
  Tensor extract(const Tensor& embeddings) const;

  Embedder& embedder() { return embedder_; }
  const Embedder& embedder() const { return embedder_; }
  Extractor& extractor() { return extractor_; }
  const Extractor& extractor() const { return extractor_; }

  // SHA-256 of the serialized bundle.
  std::string digest() const;

 private:
  Embedder embedder_;
  Extractor extractor_;
  TrainConfig config_;
  std::string victim_digest_;
  int image_size_;
  std::vector<EpochRecord> curve_;
};

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
  std::vector<StepRecord>* steps = nullptr;
};

// Learns the embedder/extractor pair against a frozen victim. Throws
// TrainingError on a non-finite loss (with the batch index) or if the victim's
// parameters changed.
FingerprintBundle train_fingerprint(const Encoder& victim, const ImageDataset& data,
                                    const TrainConfig& config,
                                    const TrainOptions& options = {});

// "SGF1" bundle file.
std::vector<std::uint8_t> encode_bundle(const FingerprintBundle& bundle);
FingerprintBundle decode_bundle(std::span<const std::uint8_t> bytes);
void save_bundle(const FingerprintBundle& bundle, const std::filesystem::path& path);
FingerprintBundle load_bundle(const std::filesystem::path& path);

}  // namespace SG_REAL_NS
}  // namespace sg
