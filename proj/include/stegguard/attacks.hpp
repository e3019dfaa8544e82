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
#include <memory>
#include <string>
#include <vector>

#include "stegguard/encoder.hpp"
#include "stegguard/oracle.hpp"

namespace sg {
inline namespace SG_REAL_NS {

struct ExtractConfig {
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;

  Json to_json() const;
};

// Trains a surrogate by regressing its embeddings onto the victim's answers
// (mean squared error). The victim is only reachable through the oracle; it is
// queried once per surrogate image.
Encoder extract_model(EncoderOracle& victim, const EncoderSpec& surrogate_spec,
                      const ImageDataset& data, const ExtractConfig& config);

// ft-same and ftal are the same attack: continue contrastive training on the
// pre-training data. ft-other uses other data. rtal first re-initializes the
// final linear layer.
enum class FinetuneMode { kSame, kOther, kFtal, kRtal };
FinetuneMode parse_finetune_mode(const std::string& text);
std::string to_string(FinetuneMode mode);

struct FinetuneConfig {
  FinetuneMode mode = FinetuneMode::kSame;
  int epochs = 10;
  int batch_size = 256;
  double lr = 1e-4;
  double temperature = 0.5;
  std::uint64_t seed = 0;

  Json to_json() const;
};

Encoder finetune(const Encoder& encoder, const ImageDataset& data, const FinetuneConfig& config);

// Per conv layer, the floor(rate * C) filters with the smallest L1 weight
// norm (ties broken by index). Sets for a smaller rate are nested in those for
// a larger one.
std::vector<std::vector<int>> pruned_filters(const Encoder& encoder, double rate);

// Zeroes the selected filters (weights, bias and the following batch-norm
// scale and shift). Shapes are unchanged.
Encoder prune(const Encoder& encoder, double rate);

std::shared_ptr<EncoderOracle> noise_embeddings(std::shared_ptr<EncoderOracle> inner,
                                                double eps, std::uint64_t seed);
std::shared_ptr<EncoderOracle> shuffle_embeddings(std::shared_ptr<EncoderOracle> inner,
                                                  double fraction, std::uint64_t seed);

// Serialized form of a noise/shuffle wrapper around an encoder weight file.
struct WrapperDescriptor {
  std::string kind;  // noise | shuffle
  std::string inner;  // weight file path
  double param = 0.0;  // eps or fraction
  std::uint64_t seed = 0;

  Json to_json() const;
  static WrapperDescriptor from_json(const Json& j);
};

std::shared_ptr<EncoderOracle> open_wrapper(const WrapperDescriptor& desc,
                                            std::shared_ptr<EncoderOracle> inner);

}  // namespace SG_REAL_NS
}  // namespace sg
