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

#include "stegguard/data.hpp"
#include "stegguard/dct.hpp"
#include "stegguard/stego.hpp"

namespace sg {
namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x(n, c, h, w);
  for (auto& v : x.vec()) v = static_cast<Real>(rng.uniform());
  return x;
}

TEST(Embedder, ChannelBookkeeping) {
  StegoSpec spec;
  const Embedder e = Embedder::build(spec, 1);
  const std::array<int, 3> expected = {3, 128, 192};
  EXPECT_EQ(e.stage_inputs(), expected);
  spec.secret_len = 16;
  spec.width = 32;
  const std::array<int, 3> small = {3, 48, 80};
  EXPECT_EQ(Embedder::build(spec, 1).stage_inputs(), small);
  EXPECT_EQ(Embedder::build(spec, 1).conv4.in_channels(), 32 + 3);
}

TEST(Embedder, StegoShapeAndSecretChecks) {
  StegoSpec spec;
  spec.secret_len = 8;
  spec.width = 8;
  const Embedder e = Embedder::build(spec, 2);
  const Tensor x = random_tensor(2, 3, 16, 16, 1);
  Rng rng(1);
  const Tensor k = gen_secret_batch(2, 8, rng);
  const Tensor xs = e.forward(x, k, Mode::kEval, nullptr);
  EXPECT_TRUE(xs.same_shape(x));
  EXPECT_TRUE(all_finite(xs));
  EXPECT_THROW(e.forward(x, gen_secret_batch(2, 9, rng), Mode::kEval, nullptr), ConfigError);
  EXPECT_THROW(e.forward(x, gen_secret_batch(3, 8, rng), Mode::kEval, nullptr), InputError);
}

TEST(Embedder, SecretChangesStego) {
  StegoSpec spec;
  spec.secret_len = 8;
  spec.width = 8;
  const Embedder e = Embedder::build(spec, 2);
  const Tensor x = random_tensor(1, 3, 16, 16, 1);
  Tensor k0(1, 8), k1(1, 8);
  k1.fill(1);
  EXPECT_NE(e.forward(x, k0, Mode::kEval, nullptr).vec(),
            e.forward(x, k1, Mode::kEval, nullptr).vec());
}

TEST(Embedder, StateRoundTrip) {
  StegoSpec spec;
  spec.secret_len = 4;
  spec.width = 4;
  const Embedder a = Embedder::build(spec, 1);
  Embedder b = Embedder::build(spec, 2);
  b.load_state(a.state());
  const Tensor x = random_tensor(1, 3, 8, 8, 3);
  Tensor k(1, 4);
  k.fill(1);
  EXPECT_EQ(a.forward(x, k, Mode::kEval, nullptr).vec(), b.forward(x, k, Mode::kEval, nullptr).vec());
}

TEST(Embedder, WithoutAttentionHasFewerParams) {
  StegoSpec spec;
  const std::size_t with = Embedder::build(spec, 1).params().size();
  spec.fca = false;
  EXPECT_EQ(Embedder::build(spec, 1).params().size() + 4, with);
}

TEST(FcaEmb, FrequencyIsDctOfChannelMeanGrid) {
  const Tensor x = random_tensor(2, 5, 14, 11, 4);
  const Tensor f = FcaEmb::frequency(x);
  const Tensor pooled = adaptive_pool7(x);
  for (int b = 0; b < 2; ++b) {
    std::vector<double> grid(49, 0.0);
    for (int c = 0; c < 5; ++c)
      for (int p = 0; p < 49; ++p) grid[p] += pooled.plane(b, c)[p] / 5.0;
    const auto ref = dct_grid_coeffs(grid, 7, 7);
    for (int i = 0; i < 49; ++i) EXPECT_NEAR(f.sample(b)[i], ref[i], 1e-4);
  }
}

TEST(FcaEmb, GateScalesChannels) {
  FcaEmb fca("t", 5);
  Rng rng(1);
  fca.init(rng);
  const Tensor x = random_tensor(1, 5, 8, 8, 5);
  FcaEmb::Cache cache;
  const Tensor y = fca.forward(x, &cache);
  for (int c = 0; c < 5; ++c) {
    const Real g = cache.gate.sample(0)[c];
    EXPECT_GT(g, 0);
    EXPECT_LT(g, 1);
    for (std::size_t i = 0; i < x.plane_size(); ++i) {
      EXPECT_NEAR(y.plane(0, c)[i], g * x.plane(0, c)[i], 1e-6);
    }
  }
  EXPECT_THROW(fca.forward(random_tensor(1, 4, 8, 8, 1), nullptr), ConfigError);
}

TEST(Extractor, ShapesAndWidthCheck) {
  StegoSpec spec;
  spec.secret_len = 16;
  spec.embed_dim = 32;
  const Extractor e = Extractor::build(spec, 1);
  const Tensor y = random_tensor(3, 32, 1, 1, 2);
  const Tensor k = e.forward(y, nullptr);
  EXPECT_EQ(k.n(), 3);
  EXPECT_EQ(k.c(), 16);
  for (Real v : k.vec()) EXPECT_GE(v, 0);  // ReLU output
  EXPECT_THROW(e.forward(random_tensor(1, 31, 1, 1, 2), nullptr), ConfigError);
}

TEST(Binarize, ThresholdAtHalf) {
  const std::vector<Real> logits = {0.49f, 0.5f, 1.2f, 0.0f};
  const std::vector<Real> expected = {0, 1, 1, 0};
  EXPECT_EQ(binarize(logits), expected);
  const std::vector<Real> bad = {0.1f, NAN};
  EXPECT_THROW(binarize(bad), NumericError);
}

TEST(ClampUnit, Clamps) {
  Tensor t(1, 3);
  t[0] = -0.5f;
  t[1] = 0.3f;
  t[2] = 1.7f;
  const Tensor c = clamp_unit(t);
  EXPECT_EQ(c[0], 0);
  EXPECT_FLOAT_EQ(c[1], 0.3f);
  EXPECT_EQ(c[2], 1);
}

}  // namespace
}  // namespace sg
