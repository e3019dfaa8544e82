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

#include "stegguard/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include "stegguard/container.hpp"

namespace sg {
inline namespace SG_REAL_NS {

ImageTensor::ImageTensor(int id, int size, std::vector<Real> pixels)
    : id_(id), size_(size), pixels_(std::move(pixels)) {
  if (pixels_.size() != static_cast<std::size_t>(kImageChannels) * size * size) {
    throw InputError("image pixel count does not match 3 x size x size");
  }
  for (Real v : pixels_) {
    if (!(v >= Real(0) && v <= Real(1))) {
      throw InputError("image pixel outside [0,1]");
    }
  }
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kUnassigned: return "unassigned";
    case Split::kFingerprintTrain: return "fingerprint-train";
    case Split::kQuery: return "query";
    case Split::kSurrogate: return "surrogate";
    case Split::kFinetuneOther: return "finetune-other";
  }
  return "unknown";
}

Tensor ImageDataset::batch(std::span<const std::size_t> indices) const {
  Tensor out(static_cast<int>(indices.size()), kImageChannels, image_size,
             image_size);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto px = items.at(indices[i]).pixels();
    std::copy(px.begin(), px.end(), out.sample(static_cast<int>(i)));
  }
  return out;
}

Tensor ImageDataset::batch(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return batch(idx);
}

std::vector<int> ImageDataset::ids() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.id());
  return out;
}

ImageDataset ImageDataset::head(std::size_t n) const {
  ImageDataset out{{}, source, split, image_size};
  n = std::min(n, items.size());
  out.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

ChannelOrder parse_channel_order(const std::string& text) {
  if (text == "chw" || text == "planar") return ChannelOrder::kPlanar;
  if (text == "hwc" || text == "interleaved") return ChannelOrder::kInterleaved;
  throw FormatError("unsupported channel order '" + text + "'");
}

std::string to_string(ChannelOrder order) {
  return order == ChannelOrder::kPlanar ? "chw" : "hwc";
}

ImageDataset load_image_dataset(const std::filesystem::path& path,
                                const DatasetLayout& layout) {
  if (layout.image_size < 1) throw FormatError("layout image size must be positive");
  if (!std::filesystem::exists(path)) {
    throw FormatError("dataset file not found: " + path.string());
  }
  const auto bytes = read_file_bytes(path);
  const std::size_t record = layout.record_bytes();
  if (bytes.size() < record || bytes.size() % record != 0) {
    throw FormatError("dataset size " + std::to_string(bytes.size()) +
                      " is not a whole number of " + std::to_string(record) +
                      "-byte records");
  }
  const int s = layout.image_size;
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  ImageDataset out;
  out.source = path.string();
  out.image_size = s;
  const std::size_t count = bytes.size() / record;
  out.items.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint8_t* p = bytes.data() + r * record + (layout.label_byte ? 1 : 0);
    std::vector<Real> px(plane * kImageChannels);
    for (int c = 0; c < kImageChannels; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        const std::uint8_t b = layout.channel_order == ChannelOrder::kPlanar
                                   ? p[c * plane + i]
                                   : p[i * kImageChannels + c];
        px[c * plane + i] = static_cast<Real>(b) / Real(255);
      }
    }
    out.items.emplace_back(static_cast<int>(r), s, std::move(px));
  }
  return out;
}

void save_image_dataset(const ImageDataset& dataset,
                        const std::filesystem::path& path,
                        const DatasetLayout& layout) {
  if (layout.image_size != dataset.image_size) {
    throw ConfigError("layout image size differs from dataset");
  }
  const std::size_t plane =
      static_cast<std::size_t>(dataset.image_size) * dataset.image_size;
  std::vector<std::uint8_t> bytes;
  bytes.reserve(dataset.size() * layout.record_bytes());
  for (const auto& item : dataset.items) {
    if (layout.label_byte) bytes.push_back(0);
    const auto px = item.pixels();
    for (std::size_t i = 0; i < plane * kImageChannels; ++i) {
      std::size_t src = i;
      if (layout.channel_order == ChannelOrder::kInterleaved) {
        src = (i % kImageChannels) * plane + i / kImageChannels;
      }
      bytes.push_back(static_cast<std::uint8_t>(
          std::lround(std::clamp<double>(px[src], 0.0, 1.0) * 255.0)));
    }
  }
  write_file_bytes(path, bytes);
  Json meta = {{"source", dataset.source},
               {"count", dataset.size()},
               {"image_size", dataset.image_size},
               {"channel_order", to_string(layout.channel_order)},
               {"label_byte", layout.label_byte},
               {"sha256", sha256_hex(bytes)}};
  const std::string text = meta.dump(2) + "\n";
  auto sidecar = path;
  sidecar += ".json";
  write_file_bytes(sidecar, std::span<const std::uint8_t>(
                                reinterpret_cast<const std::uint8_t*>(text.data()),
                                text.size()));
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb random_color(Rng& rng) {
  return {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
}

double channel(const Rgb& c, int k) { return k == 0 ? c.r : (k == 1 ? c.g : c.b); }

}  // namespace

ImageDataset synth_dataset(std::uint64_t seed, int n, int size) {
  if (n < 1) throw ConfigError("synth_dataset needs n >= 1");
  if (size < 8) throw ConfigError("synth_dataset needs size >= 8");
  ImageDataset out;
  out.source = "synth:" + std::to_string(seed);
  out.image_size = size;
  out.items.reserve(static_cast<std::size_t>(n));
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  std::vector<double> canvas(plane * kImageChannels);

  for (int idx = 0; idx < n; ++idx) {
    Rng rng(seed, "synth", static_cast<std::uint64_t>(idx));
    const Rgb c0 = random_color(rng);
    const Rgb c1 = random_color(rng);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dx = std::cos(angle), dy = std::sin(angle);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double u = ((x - size / 2.0) * dx + (y - size / 2.0) * dy) / size + 0.5;
        const double t = std::clamp(u, 0.0, 1.0);
        for (int k = 0; k < kImageChannels; ++k) {
          canvas[k * plane + y * size + x] =
              (1.0 - t) * channel(c0, k) + t * channel(c1, k);
        }
      }
    }

    const int shapes = 1 + static_cast<int>(rng.below(4));
    for (int s = 0; s < shapes; ++s) {
      const Rgb col = random_color(rng);
      const int kind = static_cast<int>(rng.below(3));
      const double cx = rng.uniform(0.15, 0.85) * size;
      const double cy = rng.uniform(0.15, 0.85) * size;
      const double r = rng.uniform(0.08, 0.3) * size;
      const double r2 = rng.uniform(0.08, 0.3) * size;
      const double alpha = rng.uniform(0.6, 1.0);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double px = x + 0.5 - cx, py = y + 0.5 - cy;
          bool inside = false;
          if (kind == 0) {
            inside = px * px + py * py <= r * r;
          } else if (kind == 1) {
            inside = std::abs(px) <= r && std::abs(py) <= r2;
          } else {
            // upward triangle with apex at (cx, cy - r)
            inside = py <= r && py >= -r && std::abs(px) <= (py + r) * 0.5;
          }
          if (!inside) continue;
          for (int k = 0; k < kImageChannels; ++k) {
            double& v = canvas[k * plane + y * size + x];
            v = (1.0 - alpha) * v + alpha * channel(col, k);
          }
        }
      }
    }

    const double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.0, 0.08);
    const double noise = rng.uniform(0.005, 0.04);
    std::vector<Real> px(plane * kImageChannels);
    for (int k = 0; k < kImageChannels; ++k) {
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double tex = amp * std::sin(2.0 * std::numbers::pi *
                                                (fx * x + fy * y) / size +
                                            phase);
          const double v = canvas[k * plane + y * size + x] + tex + noise * rng.normal();
          const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
          px[k * plane + y * size + x] = static_cast<Real>(q);
        }
      }
    }
    out.items.emplace_back(idx, size, std::move(px));
  }
  return out;
}

ImageDataset sample_query_set(const ImageDataset& dataset, std::size_t n,
                              std::uint64_t seed) {
  if (n > dataset.size()) {
    throw ConfigError("query size " + std::to_string(n) + " exceeds dataset size " +
                      std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, "query");
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
  }
  ImageDataset out{{}, dataset.source, Split::kQuery, dataset.image_size};
  out.items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.items.push_back(dataset.items[order[i]]);
  return out;
}

void check_query_subset(const ImageDataset& query,
                        const ImageDataset& fingerprint_train) {
  if (4 * query.size() > fingerprint_train.size()) {
    throw ConfigError("query set must be at most a quarter of the fingerprint set");
  }
  std::unordered_set<int> ids;
  for (const auto& it : fingerprint_train.items) ids.insert(it.id());
  for (const auto& it : query.items) {
    if (!ids.contains(it.id())) {
      throw ConfigError("query image " + std::to_string(it.id()) +
                        " is not in the fingerprint set");
    }
  }
}

SecretVector gen_secret(int length, Rng& rng) {
  if (length < 1) throw ConfigError("secret length must be >= 1");
  SecretVector s;
  s.bits.resize(static_cast<std::size_t>(length));
  for (auto& b : s.bits) b = static_cast<Real>(rng.next() >> 63);
  return s;
}

SecretVector gen_secret(int length, std::uint64_t seed) {
  Rng rng(seed, "secrets");
  SecretVector s = gen_secret(length, rng);
  s.seed_tag = "secrets:" + std::to_string(seed);
  return s;
}

Tensor gen_secret_batch(int count, int length, Rng& rng) {
  if (length < 1) throw ConfigError("secret length must be >= 1");
  Tensor out(count, length);
  for (auto& b : out.vec()) b = static_cast<Real>(rng.next() >> 63);
  return out;
}

}  // namespace SG_REAL_NS
}  // namespace sg
