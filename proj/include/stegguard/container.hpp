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
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stegguard/tensor.hpp"

namespace sg {
inline namespace SG_REAL_NS {

using Json = nlohmann::json;

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
// Digest of a file's bytes; throws FormatError when unreadable.
std::string file_sha256(const std::filesystem::path& path);
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Weight container shared by encoder weight files ("SGW1") and fingerprint
// bundles ("SGF1"):
//
//   magic[4] | u32 LE header length | JSON header | float32 LE blob | u32 LE
//   CRC-32 of the blob
//
// The header carries caller metadata plus a "tensors" manifest listing name,
// shape and byte offset of every tensor in the blob.
inline constexpr int kContainerVersion = 1;

std::vector<std::uint8_t> encode_container(std::string_view magic,
                                           const Json& meta,
                                           std::span<const NamedTensor> tensors);

struct DecodedContainer {
  Json meta;  // header without the manifest
  std::vector<NamedTensor> tensors;
};

DecodedContainer decode_container(std::string_view magic,
                                  std::span<const std::uint8_t> bytes);

const Tensor& find_tensor(std::span<const NamedTensor> tensors,
                          std::string_view name);

}  // namespace SG_REAL_NS
}  // namespace sg
