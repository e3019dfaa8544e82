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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "stegguard/data.hpp"
#include "stegguard/explain.hpp"

namespace sg {
namespace {

Tensor constant_image(int size, Real v) { return Tensor(1, 3, size, size, v); }

Tensor checkerboard(int size) {
  Tensor t(1, 3, size, size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) t.at(0, c, y, x) = static_cast<Real>((x + y) % 2);
    }
  }
  return t;
}

// Single-window SSIM written out from the definition.
double ssim_window(double mx, double my, double vx, double vy, double cxy) {
  const double c1 = 1e-4, c2 = 9e-4;
  return (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

TEST(Quality, PsnrClosedForm) {
  const Tensor x = constant_image(8, Real(0.5));
  EXPECT_EQ(psnr(x, x), kPsnrCap);
  const Tensor y = constant_image(8, Real(0.6));
  // MSE = 0.01 -> 20 dB.
  EXPECT_NEAR(psnr(x, y), 20.0, 1e-4);
  EXPECT_DOUBLE_EQ(psnr(x, y), psnr(y, x));
  const Tensor z = constant_image(8, Real(0.0));
  const Tensor o = constant_image(8, Real(1.0));
  EXPECT_NEAR(psnr(z, o), 0.0, 1e-9);
}

TEST(Quality, SsimClosedForm) {
  const Tensor x = checkerboard(8);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-6);

  Tensor inv = x;
  for (auto& v : inv.vec()) v = 1 - v;
  const double neg = ssim_window(0.5, 0.5, 0.25, 0.25, -0.25);
  EXPECT_NEAR(ssim(x, inv), neg, 1e-6);
  EXPECT_LT(ssim(x, inv), 0.5);
  EXPECT_NEAR(ssim(inv, x), ssim(x, inv), 1e-12);

  Tensor half = x;
  for (auto& v : half.vec()) v = static_cast<Real>(0.5 * v + 0.25);
  EXPECT_NEAR(ssim(x, half), ssim_window(0.5, 0.5, 0.25, 0.0625, 0.125), 1e-6);
}

TEST(Quality, SsimAveragesWindows) {
  // Two windows across: the left one identical, the right one inverted.
  Tensor x(1, 3, 8, 16), y(1, 3, 8, 16);
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 8; ++r) {
      for (int q = 0; q < 16; ++q) {
        const Real v = static_cast<Real>((r + q) % 2);
        x.at(0, c, r, q) = v;
        y.at(0, c, r, q) = q < 8 ? v : 1 - v;
      }
    }
  }
  const double expected = (1.0 + ssim_window(0.5, 0.5, 0.25, 0.25, -0.25)) / 2;
  EXPECT_NEAR(ssim(x, y), expected, 1e-6);
}

TEST(Quality, RejectsBadShapes) {
  EXPECT_THROW(ssim(constant_image(4, 0), constant_image(4, 0)), InputError);
  EXPECT_THROW(psnr(constant_image(8, 0), constant_image(16, 0)), InputError);
}

class HeatMapTest : public ::testing::Test {
 protected:
  void SetUp() override {
    EncoderSpec spec;
    spec.width = 0.5;
    spec.embed_dim = 16;
    encoder_ = Encoder::build(spec, 3);
    const ImageDataset ds = synth_dataset(2, 1, 16);
    clean_ = ds.batch(0, 1);
    stego_ = clean_;
    Rng rng(4);
    for (auto& v : stego_.vec()) v = std::clamp<Real>(v + static_cast<Real>(0.05 * rng.normal()), 0, 1);
  }

  Encoder encoder_;
  Tensor clean_, stego_;
};

TEST_F(HeatMapTest, IdenticalInputsGiveZeroMap) {
  const HeatMap m = gradcam_stego(encoder_, clean_, clean_);
  EXPECT_EQ(m.objective, 0.0);
  for (double v : m.values) EXPECT_EQ(v, 0.0);
}

TEST_F(HeatMapTest, NormalizedFullResolution) {
  const HeatMap m = gradcam_stego(encoder_, clean_, stego_, "block1");
  EXPECT_EQ(m.height, 16);
  EXPECT_EQ(m.width, 16);
  ASSERT_EQ(m.values.size(), 256u);
  EXPECT_GT(m.objective, 0.0);
  double lo = 1, hi = 0;
  for (double v : m.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
  EXPECT_EQ(m.layer, "block1");
}

TEST_F(HeatMapTest, LayerTags) {
  EXPECT_EQ(parse_layer_tag(encoder_, ""), encoder_.num_blocks() - 1);
  EXPECT_EQ(parse_layer_tag(encoder_, "block0"), 0);
  EXPECT_THROW(parse_layer_tag(encoder_, "block9"), ConfigError);
  EXPECT_THROW(parse_layer_tag(encoder_, "conv1"), ConfigError);
  EXPECT_THROW(gradcam_stego(encoder_, clean_, stego_, "head"), ConfigError);
  const Tensor two = synth_dataset(2, 2, 16).batch(0, 2);
  EXPECT_THROW(gradcam_stego(encoder_, two, two), InputError);
}

TEST_F(HeatMapTest, WritesPgmAndSidecar) {
  const HeatMap m = gradcam_stego(encoder_, clean_, stego_);
  const auto dir = std::filesystem::temp_directory_path() / "sg_heatmap_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "map.pgm";
  write_heatmap(m, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n16 16\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 256);
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  EXPECT_TRUE(std::filesystem::exists(dir / "map.pgm.json"));
  std::filesystem::remove_all(dir);
}

TEST(TopFraction, Iou) {
  HeatMap a;
  a.height = 10;
  a.width = 10;
  a.values.assign(100, 0.0);
  HeatMap b = a;
  for (int i = 0; i < 10; ++i) {
    a.values[static_cast<std::size_t>(i)] = 1.0;
    b.values[static_cast<std::size_t>(99 - i)] = 1.0;
  }
  EXPECT_DOUBLE_EQ(top_fraction_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(top_fraction_iou(a, b), 0.0);
  // Overlap of 5 out of 10 -> 5 / 15.
  HeatMap c = a;
  for (int i = 0; i < 5; ++i) {
    c.values[static_cast<std::size_t>(i)] = 0.0;
    c.values[static_cast<std::size_t>(50 + i)] = 1.0;
  }
  EXPECT_NEAR(top_fraction_iou(a, c), 5.0 / 15.0, 1e-12);
}

}  // namespace
}  // namespace sg
