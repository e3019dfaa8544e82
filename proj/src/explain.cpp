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


#include "stegguard/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

void require_same(const Tensor& x, const Tensor& y) {
  if (!x.same_shape(y) || x.empty()) {
    throw InputError("image shapes differ: " + x.shape_string() + " vs " + y.shape_string());
  }
}

// Bilinear resize of one plane, half-pixel centres.
std::vector<double> upsample(const std::vector<double>& src, int sh, int sw, int h, int w) {
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int i = 0; i < h; ++i) {
    const double fy = std::clamp((i + 0.5) * sh / h - 0.5, 0.0, sh - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double ay = fy - y0;
    for (int j = 0; j < w; ++j) {
      const double fx = std::clamp((j + 0.5) * sw / w - 0.5, 0.0, sw - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double ax = fx - x0;
      auto at = [&](int y, int x) { return src[static_cast<std::size_t>(y) * sw + x]; };
      out[static_cast<std::size_t>(i) * w + j] =
          (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x1)) +
          ay * ((1 - ax) * at(y1, x0) + ax * at(y1, x1));
    }
  }
  return out;
}

std::vector<std::size_t> top_indices(const std::vector<double>& v, std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Json HeatMap::sidecar() const {
  return {{"layer", layer},     {"objective", objective}, {"height", height},
          {"width", width},     {"raw_min", raw_min},     {"raw_max", raw_max}};
}

int parse_layer_tag(const Encoder& encoder, const std::string& tag) {
  if (tag.empty()) return encoder.num_blocks() - 1;
  const std::string prefix = "block";
  if (tag.rfind(prefix, 0) == 0 && tag.size() > prefix.size()) {
    const std::string digits = tag.substr(prefix.size());
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const int i = std::stoi(digits);
      if (i < encoder.num_blocks()) return i;
    }
  }
  throw ConfigError("unknown layer tag '" + tag + "'");
}

HeatMap gradcam_stego(const Encoder& encoder, const Tensor& clean, const Tensor& stego,
                      const std::string& layer) {
  require_same(clean, stego);
  if (clean.n() != 1) throw InputError("gradcam works on one image at a time");
  const int block = parse_layer_tag(encoder, layer);
  const Tensor y0 = encoder.embed(clean);
  Encoder::Cache cache;
  const Tensor y1 = encoder.forward(stego, Mode::kEval, &cache);
  Tensor dy = Tensor::like(y1);
  HeatMap map;
  map.layer = "block" + std::to_string(block);
  map.height = clean.h();
  map.width = clean.w();
  for (std::size_t i = 0; i < y1.size(); ++i) {
    const double diff = static_cast<double>(y1[i]) - y0[i];
    map.objective += diff * diff;
    dy[i] = static_cast<Real>(2 * diff);
  }
  const Tensor grad = encoder.block_gradient(dy, cache, block);
  const Tensor& act = cache.blocks[static_cast<std::size_t>(block)].activation;
  const std::size_t hw = act.plane_size();
  std::vector<double> cam(hw, 0.0);
  for (int c = 0; c < act.c(); ++c) {
    double weight = 0.0;
    for (std::size_t i = 0; i < hw; ++i) weight += grad.plane(0, c)[i];
    weight /= static_cast<double>(hw);
    for (std::size_t i = 0; i < hw; ++i) cam[i] += weight * act.plane(0, c)[i];
  }
  for (double& v : cam) v = std::max(v, 0.0);
  map.values = upsample(cam, act.h(), act.w(), map.height, map.width);
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  map.raw_min = *lo;
  map.raw_max = *hi;
  const double range = map.raw_max - map.raw_min;
  for (double& v : map.values) v = range > 0 ? (v - map.raw_min) / range : 0.0;
  return map;
}

void write_heatmap(const HeatMap& map, const std::filesystem::path& path) {
  std::string bytes = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                      "\n255\n";
  for (double v : map.values) {
    bytes.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  write_file_bytes(path, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  const std::string side = map.sidecar().dump(2) + "\n";
  write_file_bytes(path.string() + ".json", std::vector<std::uint8_t>(side.begin(), side.end()));
}

double top_fraction_iou(const HeatMap& a, const HeatMap& b, double fraction) {
  if (a.values.size() != b.values.size() || a.values.empty()) {
    throw InputError("heat maps differ in size");
  }
  if (!(fraction > 0 && fraction <= 1)) throw ConfigError("fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(a.values.size())));
  const auto ta = top_indices(a.values, k);
  const auto tb = top_indices(b.values, k);
  std::vector<std::size_t> both;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(2 * k - both.size());
}

double psnr(const Tensor& x, const Tensor& y) {
  require_same(x, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(x.size());
  if (mse < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor& x, const Tensor& y) {
  require_same(x, y);
  constexpr int kWin = 8;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  if (x.h() < kWin || x.w() < kWin) throw InputError("SSIM needs images of at least 8x8");
  double total = 0.0;
  int planes = 0;
  for (int b = 0; b < x.n(); ++b) {
    for (int c = 0; c < x.c(); ++c) {
      const Real* px = x.plane(b, c);
      const Real* py = y.plane(b, c);
      double plane_sum = 0.0;
      int windows = 0;
      for (int r0 = 0; r0 + kWin <= x.h(); r0 += kWin) {
        for (int c0 = 0; c0 + kWin <= x.w(); c0 += kWin) {
          double mx = 0, my = 0;
          for (int i = 0; i < kWin; ++i) {
            for (int j = 0; j < kWin; ++j) {
              mx += px[(r0 + i) * x.w() + c0 + j];
              my += py[(r0 + i) * x.w() + c0 + j];
            }
          }
          constexpr double n = kWin * kWin;
          mx /= n;
          my /= n;
          double vx = 0, vy = 0, cov = 0;
          for (int i = 0; i < kWin; ++i) {
            for (int j = 0; j < kWin; ++j) {
              const double dx = px[(r0 + i) * x.w() + c0 + j] - mx;
              const double dy = py[(r0 + i) * x.w() + c0 + j] - my;
              vx += dx * dx;
              vy += dy * dy;
              cov += dx * dy;
            }
          }
          vx /= n;
          vy /= n;
          cov /= n;
          plane_sum += ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                       ((mx * mx + my * my + kC1) * (vx + vy + kC2));
          ++windows;
        }
      }
      total += plane_sum / windows;
      ++planes;
    }
  }
  return total / planes;
}

}  // namespace SG_REAL_NS
}  // namespace sg
