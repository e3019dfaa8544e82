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
#include <span>
#include <vector>

#include "stegguard/container.hpp"
#include "stegguard/nn.hpp"

namespace sg {
inline namespace SG_REAL_NS {

struct StegoSpec {
  int secret_len = 64;  // L
  int width = 64;       // hidden channels C of the embedder
  int embed_dim = 128;  // victim embedding width D
  int hidden = 256;     // extractor hidden width
  bool fca = true;

  void validate() const;
  Json to_json() const;
  static StegoSpec from_json(const Json& j);
};

// Frequency-domain channel attention. The input is pooled to a 7x7 grid per
// channel, each grid goes through the 7x7 DCT, the 49 coefficients are
// averaged over channels, and an affine 49 -> C map plus a sigmoid gives one
// gate per channel that scales the input.
class FcaEmb {
 public:
  struct Cache {
    Tensor input;
    Tensor gate;  // (N, C)
    Linear::Cache fc;
  };

  FcaEmb() = default;
  FcaEmb(const std::string& name, int channels);

  void init(Rng& rng);
  Tensor forward(const Tensor& x, Cache* cache) const;
  Tensor backward(const Tensor& dy, const Cache& cache);
  std::vector<Param*> params() { return fc.params(); }
  int channels() const { return fc.out_features(); }

  // (N, C, H, W) -> (N, 49) channel-mean of the pooled-grid DCT coefficients.
  static Tensor frequency(const Tensor& x);

  Linear fc;  // 49 -> C
};

// Secrets embedder: image (N,3,H,W) plus secrets (N,L) -> stego (N,3,H,W).
//
//   f_a = ConvBNReLU(3 -> C)(x)
//   f_b = Fca1(ConvBNReLU(C + L -> C)(f_a | k))
//   f_c = Fca2(ConvBNReLU(2C + L -> C)(f_b | f_a | k))
//   x'  = Conv(C + 3 -> 3)(f_c | x)
//
// k enters as L constant planes. The output is not clamped.
class Embedder {
 public:
  struct Stage {
    Conv2d::Cache conv;
    BatchNorm2d::Cache bn;
    Tensor pre;   // batch-norm output
    Tensor post;  // after ReLU, before the attention block
    FcaEmb::Cache fca;
  };
  struct Cache {
    Stage s1, s2, s3;
    Tensor fa, fb, fc;
    Conv2d::Cache out;
  };

  static Embedder build(const StegoSpec& spec, std::uint64_t seed);

  const StegoSpec& spec() const { return spec_; }
  Tensor forward(const Tensor& images, const Tensor& secrets, Mode mode, Cache* cache) const;
  // Accumulates parameter gradients from d(loss)/d(stego).
  void backward(const Tensor& dstego, const Cache& cache);
  void update_running(const Cache& cache);

  std::vector<Param*> params();
  std::vector<NamedTensor> state() const;
  void load_state(std::span<const NamedTensor> tensors);

  // Input channel counts of the three ConvBNReLU stages.
  std::array<int, 3> stage_inputs() const;

  Conv2d conv1, conv2, conv3, conv4;
  BatchNorm2d bn1, bn2, bn3;
  FcaEmb fca1, fca2;

 private:
  StegoSpec spec_;
};

// Secrets extractor: ReLU(FC 256 -> L)(ReLU(FC D -> 256)(y)).
class Extractor {
 public:
  struct Cache {
    Linear::Cache fc1;
    Tensor pre1;
    Linear::Cache fc2;
    Tensor pre2;
  };

  static Extractor build(const StegoSpec& spec, std::uint64_t seed);

  Tensor forward(const Tensor& embeddings, Cache* cache) const;
  // Returns d(loss)/d(embeddings).
  Tensor backward(const Tensor& dlogits, const Cache& cache);
  std::vector<Param*> params();
  std::vector<NamedTensor> state() const;
  void load_state(std::span<const NamedTensor> tensors);

  int embed_dim() const { return fc1.in_features(); }
  int secret_len() const { return fc2.out_features(); }

  Linear fc1, fc2;
};

// bit = 1 iff logit >= 0.5. Non-finite logits raise NumericError.
std::vector<Real> binarize(std::span<const Real> logits);
Tensor binarize(const Tensor& logits);

// Copy clamped to [0, 1], as submitted to a suspect.
Tensor clamp_unit(const Tensor& images);

}  // namespace SG_REAL_NS
}  // namespace sg
