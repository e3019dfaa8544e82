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

#include <filesystem>
#include <string>
#include <vector>

#include "stegguard/encoder.hpp"

namespace sg {
inline namespace SG_REAL_NS {

struct HeatMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // row-major, in [0, 1]
  std::string layer;
  double objective = 0.0;      // d = ||F(x) - F(x')||^2
  double raw_min = 0.0;
  double raw_max = 0.0;

  Json sidecar() const;
};

// "block<i>" for 0 <= i < num_blocks; empty selects the last block.
int parse_layer_tag(const Encoder& encoder, const std::string& tag);

// GradCAM with the embedding distance to the clean image as the objective.
// `clean` and `stego` are single images (1, 3, H, W).
HeatMap gradcam_stego(const Encoder& encoder, const Tensor& clean, const Tensor& stego,
                      const std::string& layer = "");

// 8-bit binary PGM plus "<path>.json" with the sidecar.
void write_heatmap(const HeatMap& map, const std::filesystem::path& path);

// IoU of the top `fraction` pixels of two maps (ties broken by index).
double top_fraction_iou(const HeatMap& a, const HeatMap& b, double fraction = 0.1);

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) for [0, 1] images, capped at 99 dB when MSE < 1e-10.
double psnr(const Tensor& x, const Tensor& y);
// Mean SSIM over 8x8 windows with stride 8, C1 = 0.01^2, C2 = 0.03^2,
// averaged over channels and samples.
double ssim(const Tensor& x, const Tensor& y);

}  // namespace SG_REAL_NS
}  // namespace sg
