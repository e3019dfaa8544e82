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
#include <memory>
#include <string>
#include <vector>

#include "stegguard/container.hpp"
#include "stegguard/data.hpp"
#include "stegguard/nn.hpp"
#include "stegguard/oracle.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// Architectures (base channel widths before the width multiplier, "P" marks
// a 2x2 max pool after the block):
//
//   conv-small  16P 32P 32P 64
//   conv-wide   24P 24 48P 48 96P 96
//   conv-deep   16P 16 32P 32 32 64P 64 64
//
// Every block is conv3x3 -> batch norm -> activation. The stack ends with a
// global average pool and a linear layer to the embedding width D.
struct EncoderSpec {
  std::string arch = "conv-small";
  int embed_dim = 128;
  Activation activation = Activation::kRelu;
  double width = 1.0;

  void validate() const;
  Json to_json() const;
  static EncoderSpec from_json(const Json& j);
};

struct BlockLayout {
  int channels;
  bool pool;
};

// Layer list for a spec; throws ConfigError for unknown architectures.
std::vector<BlockLayout> block_layout(const EncoderSpec& spec);

// Where an encoder came from. `config` describes how it was produced
// (dataset tag, seeds, hyper-parameters, parent digest for attacks) and
// `digest` is SHA-256 over the canonical JSON of (spec, config).
struct Provenance {
  std::string role = "independent";  // victim | independent | piracy
  Json config = Json::object();
  std::string digest;

  Json to_json() const;
};

std::string provenance_digest(const EncoderSpec& spec, const Json& config);

inline constexpr int kProjectionDim = 64;

class Encoder {
 public:
  struct BlockCache {
    Conv2d::Cache conv;
    BatchNorm2d::Cache bn;
    Tensor pre_activation;
    Tensor activation;  // block output before pooling
    MaxPool2::Cache pool;
  };
  struct Cache {
    std::vector<BlockCache> blocks;
    std::array<int, 4> last_shape{};
    Linear::Cache fc;
  };
  struct HeadCache {
    Linear::Cache fc1;
    Tensor hidden_pre;
    Linear::Cache fc2;
  };

  // Fan-in uniform initialisation, deterministic in (spec, seed).
  static Encoder build(const EncoderSpec& spec, std::uint64_t seed);

  const EncoderSpec& spec() const { return spec_; }
  int embed_dim() const { return spec_.embed_dim; }
  int num_blocks() const { return static_cast<int>(convs_.size()); }
  const Provenance& provenance() const { return provenance_; }
  void set_provenance(const std::string& role, Json config);

  // (N, 3, S, S) images -> (N, D) embeddings.
  Tensor forward(const Tensor& images, Mode mode, Cache* cache) const;
  Tensor embed(const Tensor& images) const { return forward(images, Mode::kEval, nullptr); }
  void update_running(const Cache& cache);
  // Back-propagates d(loss)/d(embedding), accumulating parameter gradients,
  // and returns d(loss)/d(images).
  Tensor backward(const Tensor& dy, const Cache& cache);
  // Same without touching parameter gradients (frozen encoder).
  Tensor backward_input(const Tensor& dy, const Cache& cache) const;
  // Gradient of the loss with respect to the output of block `block`.
  Tensor block_gradient(const Tensor& dy, const Cache& cache, int block) const;
  // Evaluates the network from the output of block `block` onwards (eval
  // mode). Used to check block gradients numerically.
  Tensor forward_from_block(int block, const Tensor& activation) const;

  // Projection head used only by the contrastive objective: D -> D -> 64.
  Tensor project(const Tensor& embeddings, HeadCache* cache) const;
  Tensor project_backward(const Tensor& dz, const HeadCache& cache);
  void reinit_output_layer(std::uint64_t seed);

  std::vector<Param*> params(bool include_head = true);
  std::vector<const Param*> params(bool include_head = true) const;
  std::size_t num_parameters(bool include_head = false) const;
  // All tensors that define the encoder, in a fixed order (parameters, then
  // batch-norm running statistics).
  std::vector<NamedTensor> state() const;
  void load_state(std::span<const NamedTensor> tensors);
  // SHA-256 over state() bytes.
  std::string parameter_digest() const;

  Conv2d& conv(int i) { return convs_[static_cast<std::size_t>(i)]; }
  const Conv2d& conv(int i) const { return convs_[static_cast<std::size_t>(i)]; }
  BatchNorm2d& bn(int i) { return bns_[static_cast<std::size_t>(i)]; }
  const BatchNorm2d& bn(int i) const { return bns_[static_cast<std::size_t>(i)]; }

 private:
  template <class Self>
  static Tensor run_backward(Self& self, const Tensor& dy, const Cache& cache,
                             int stop_block);

  EncoderSpec spec_;
  Provenance provenance_;
  std::vector<Conv2d> convs_;
  std::vector<BatchNorm2d> bns_;
  std::vector<bool> pools_;
  Linear fc_;
  Linear head1_;
  Linear head2_;
};

// Black-box access to a local encoder.
class LocalEncoderOracle : public EncoderOracle {
 public:
  LocalEncoderOracle(std::shared_ptr<const Encoder> encoder, int image_size,
                     std::string tag);

 protected:
  Tensor do_embed(const Tensor& images, std::uint64_t first_query) override;

 private:
  std::shared_ptr<const Encoder> encoder_;
};

std::shared_ptr<EncoderOracle> make_oracle(std::shared_ptr<const Encoder> encoder,
                                           int image_size, std::string tag);

struct SslConfig {
  int epochs = 30;
  int batch_size = 256;
  double temperature = 0.5;
  double lr = 1e-3;
  std::uint64_t seed = 0;

  Json to_json() const;
};

struct SslLog {
  std::vector<double> epoch_loss;
};

// Random resized crop (scale 0.3-1), horizontal flip, brightness/contrast
// jitter (p = 0.8) and grayscale (p = 0.2). Returns a new (N,3,S,S) batch.
Tensor augment_batch(const Tensor& images, Rng& rng);

// NT-Xent over 2B projections where rows i and i+B are positives. Writes
// d(loss)/d(z) into `grad` when non-null.
double nt_xent(const Tensor& z, double temperature, Tensor* grad);

// SimCLR-style contrastive pre-training in place. Throws TrainingError with
// the epoch index on a non-finite loss.
SslLog pretrain_ssl(Encoder& encoder, const ImageDataset& dataset,
                    const SslConfig& config);

// "SGW1" weight file.
void save_encoder(const Encoder& encoder, const std::filesystem::path& path);
Encoder load_encoder(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_encoder(const Encoder& encoder);
Encoder decode_encoder(std::span<const std::uint8_t> bytes);

}  // namespace SG_REAL_NS
}  // namespace sg
