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
#include <span>
#include <string>
#include <vector>

#include "stegguard/rng.hpp"
#include "stegguard/tensor.hpp"

namespace sg {
inline namespace SG_REAL_NS {

inline constexpr int kImageChannels = 3;

// A 3 x size x size RGB image with values in [0, 1].
class ImageTensor {
 public:
  ImageTensor(int id, int size, std::vector<Real> pixels);

  int id() const { return id_; }
  int size() const { return size_; }
  std::span<const Real> pixels() const { return pixels_; }

 private:
  int id_;
  int size_;
  std::vector<Real> pixels_;
};

enum class Split { kUnassigned, kFingerprintTrain, kQuery, kSurrogate, kFinetuneOther };

std::string to_string(Split split);

struct ImageDataset {
  std::vector<ImageTensor> items;
  std::string source;
  Split split = Split::kUnassigned;
  int image_size = 0;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  // Stacks the listed items into an (n, 3, s, s) batch.
  Tensor batch(std::span<const std::size_t> indices) const;
  Tensor batch(std::size_t begin, std::size_t end) const;
  Tensor all() const { return batch(0, items.size()); }
  std::vector<int> ids() const;
  // First `n` items, keeping the source tag.
  ImageDataset head(std::size_t n) const;
};

enum class ChannelOrder { kPlanar, kInterleaved };

// Raw-binary record layout: optional label byte followed by size*size*3
// pixel bytes, either planar (RRR..GGG..BBB) or interleaved (RGBRGB..).
struct DatasetLayout {
  int image_size = 32;
  ChannelOrder channel_order = ChannelOrder::kPlanar;
  bool label_byte = false;

  std::size_t record_bytes() const {
    return (label_byte ? 1u : 0u) +
           static_cast<std::size_t>(image_size) * image_size * kImageChannels;
  }
};

ChannelOrder parse_channel_order(const std::string& text);
std::string to_string(ChannelOrder order);

ImageDataset load_image_dataset(const std::filesystem::path& path,
                                const DatasetLayout& layout);
// Writes records plus a "<path>.json" sidecar describing layout and source.
// Pixels are quantized to 8 bits.
void save_image_dataset(const ImageDataset& dataset,
                        const std::filesystem::path& path,
                        const DatasetLayout& layout);

// Procedural images: a smooth two-colour gradient, a few filled shapes and a
// low-frequency texture with pixel noise. Output pixels are multiples of
// 1/255 so a cached copy reloads bit-identically.
ImageDataset synth_dataset(std::uint64_t seed, int n, int size);

// Uniform sample without replacement; items keep their ids.
ImageDataset sample_query_set(const ImageDataset& dataset, std::size_t n,
                              std::uint64_t seed);

// Rejects query sets that are not drawn from, or not much smaller than, the
// fingerprint-training set (|D_q| <= |D_fp| / 4).
void check_query_subset(const ImageDataset& query,
                        const ImageDataset& fingerprint_train);

struct SecretVector {
  std::vector<Real> bits;  // each exactly 0 or 1
  std::string seed_tag;

  std::size_t size() const { return bits.size(); }
};

SecretVector gen_secret(int length, std::uint64_t seed);
SecretVector gen_secret(int length, Rng& rng);
// (count, length) tensor of i.i.d. bits, one secret per row.
Tensor gen_secret_batch(int count, int length, Rng& rng);

}  // namespace SG_REAL_NS
}  // namespace sg
