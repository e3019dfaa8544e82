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

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "stegguard/tensor.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// Black-box embedding service: images in, embeddings out. Nothing about the
// model behind it (parameters, architecture, gradients) is reachable through
// this interface; the verifier and the extraction attack only see this type.
class EncoderOracle {
 public:
  EncoderOracle(int embed_dim, int image_size, std::string tag)
      : embed_dim_(embed_dim), image_size_(image_size), tag_(std::move(tag)) {}
  virtual ~EncoderOracle() = default;
  EncoderOracle(const EncoderOracle&) = delete;
  EncoderOracle& operator=(const EncoderOracle&) = delete;

  // (N, 3, S, S) -> (N, D); one query per image, answered in input order.
  Tensor embed(const Tensor& images);

  int embed_dim() const { return embed_dim_; }
  int image_size() const { return image_size_; }
  const std::string& tag() const { return tag_; }
  std::uint64_t query_count() const { return queries_.load(); }

 protected:
  // `first_query` is the global index of images[0]; wrappers use it to key
  // their per-query random streams.
  virtual Tensor do_embed(const Tensor& images, std::uint64_t first_query) = 0;

 private:
  int embed_dim_;
  int image_size_;
  std::string tag_;
  std::atomic<std::uint64_t> queries_{0};
};

// h' = h + eps * g with g ~ N(0, 1) per coordinate, drawn from a stream keyed
// by (seed, query index).
class NoisyOracle : public EncoderOracle {
 public:
  NoisyOracle(std::shared_ptr<EncoderOracle> inner, double eps, std::uint64_t seed);

 protected:
  Tensor do_embed(const Tensor& images, std::uint64_t first_query) override;

 private:
  std::shared_ptr<EncoderOracle> inner_;
  double eps_;
  std::uint64_t seed_;
};

// Per query, picks ceil(fraction * D) coordinates and permutes their values
// among themselves with a fresh non-identity permutation.
class ShuffledOracle : public EncoderOracle {
 public:
  ShuffledOracle(std::shared_ptr<EncoderOracle> inner, double fraction,
                 std::uint64_t seed);

 protected:
  Tensor do_embed(const Tensor& images, std::uint64_t first_query) override;

 private:
  std::shared_ptr<EncoderOracle> inner_;
  double fraction_;
  std::uint64_t seed_;
};

}  // namespace SG_REAL_NS
}  // namespace sg
