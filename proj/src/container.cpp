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

#include "stegguard/container.hpp"

#include <openssl/sha.h>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(bytes.data(), bytes.size(), digest);
  std::ostringstream os;
  for (unsigned char b : digest) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
  }
  return os.str();
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string file_sha256(const std::filesystem::path& path) {
  return sha256_hex(read_file_bytes(path));
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large blobs.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

std::vector<std::uint8_t> encode_container(std::string_view magic,
                                           const Json& meta,
                                           std::span<const NamedTensor> tensors) {
  if (magic.size() != 4) throw ConfigError("container magic must be 4 bytes");
  Json header = meta;
  header["format_version"] = kContainerVersion;
  Json manifest = Json::array();
  std::vector<std::uint8_t> blob;
  for (const auto& t : tensors) {
    const auto& s = t.value.shape();
    manifest.push_back({{"name", t.name},
                        {"shape", {s[0], s[1], s[2], s[3]}},
                        {"offset", blob.size()}});
    for (Real v : t.value.vec()) {
      put_u32(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  header["tensors"] = manifest;
  header["blob_bytes"] = blob.size();
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blob.begin(), blob.end());
  put_u32(out, crc32(blob));
  return out;
}

DecodedContainer decode_container(std::string_view magic,
                                  std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw CorruptionError("container truncated");
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw FormatError("bad magic, expected " + std::string(magic));
  }
  const std::size_t header_len = get_u32(bytes.data() + 4);
  if (8 + header_len > bytes.size()) throw CorruptionError("header truncated");
  Json header;
  try {
    header = Json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const Json::exception& e) {
    throw CorruptionError(std::string("header unreadable: ") + e.what());
  }
  if (!header.contains("format_version") ||
      header["format_version"] != kContainerVersion) {
    throw VersionError("unsupported container version");
  }
  const std::size_t blob_bytes = header.at("blob_bytes").get<std::size_t>();
  const std::size_t blob_begin = 8 + header_len;
  if (blob_begin + blob_bytes + 4 != bytes.size()) {
    throw CorruptionError("container size does not match manifest");
  }
  const auto blob = bytes.subspan(blob_begin, blob_bytes);
  if (crc32(blob) != get_u32(bytes.data() + blob_begin + blob_bytes)) {
    throw CorruptionError("blob checksum mismatch");
  }

  DecodedContainer out;
  for (const auto& entry : header.at("tensors")) {
    const auto shape = entry.at("shape").get<std::vector<int>>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    if (shape.size() != 4) throw CorruptionError("bad tensor rank");
    Tensor t(shape[0], shape[1], shape[2], shape[3]);
    if (offset + 4 * t.size() > blob_bytes) {
      throw CorruptionError("tensor extends past blob");
    }
    const std::uint8_t* p = blob.data() + offset;
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<Real>(std::bit_cast<float>(get_u32(p + 4 * i)));
    }
    out.tensors.push_back({entry.at("name").get<std::string>(), std::move(t)});
  }
  header.erase("tensors");
  header.erase("blob_bytes");
  header.erase("format_version");
  out.meta = std::move(header);
  return out;
}

const Tensor& find_tensor(std::span<const NamedTensor> tensors,
                          std::string_view name) {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw CorruptionError("missing tensor " + std::string(name));
}

}  // namespace SG_REAL_NS
}  // namespace sg
