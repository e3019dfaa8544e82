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

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <tuple>

#include "stegguard/attacks.hpp"
#include "stegguard/data.hpp"

namespace sg {
namespace {

Encoder small_encoder(std::uint64_t seed, int d = 16) {
  EncoderSpec spec;
  spec.width = 0.5;
  spec.embed_dim = d;
  return Encoder::build(spec, seed);
}

std::shared_ptr<EncoderOracle> oracle_for(const Encoder& enc) {
  return make_oracle(std::make_shared<const Encoder>(enc), 16, "suspect");
}

Tensor images(int n, std::uint64_t seed) {
  const ImageDataset ds = synth_dataset(seed, n, 16);
  return ds.batch(0, n);
}

// Lexicographic (norm, index) sort of every filter, recomputed from scratch.
std::vector<int> brute_force_smallest(const Tensor& w, double rate) {
  std::vector<std::tuple<double, int>> rows;
  for (int o = 0; o < w.n(); ++o) {
    double s = 0;
    for (int c = 0; c < w.c(); ++c) {
      for (int y = 0; y < w.h(); ++y) {
        for (int x = 0; x < w.w(); ++x) s += std::fabs(w.at(o, c, y, x));
      }
    }
    rows.emplace_back(s, o);
  }
  std::sort(rows.begin(), rows.end());
  const int k = static_cast<int>(std::floor(rate * w.n()));
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(std::get<1>(rows[static_cast<std::size_t>(i)]));
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Prune, RateZeroIsIdentity) {
  const Encoder enc = small_encoder(1);
  const Encoder pruned = prune(enc, 0.0);
  EXPECT_EQ(pruned.parameter_digest(), enc.parameter_digest());
  EXPECT_EQ(pruned.provenance().role, "piracy");
}

TEST(Prune, SmallestFiltersMatchBruteForce) {
  const Encoder enc = small_encoder(2);
  for (double rate : {0.1, 0.25, 0.4, 0.75}) {
    const auto sets = pruned_filters(enc, rate);
    ASSERT_EQ(static_cast<int>(sets.size()), enc.num_blocks());
    for (int layer = 0; layer < enc.num_blocks(); ++layer) {
      EXPECT_EQ(sets[static_cast<std::size_t>(layer)],
                brute_force_smallest(enc.conv(layer).weight.value, rate))
          << "rate " << rate << " layer " << layer;
    }
  }
}

TEST(Prune, SetsAreNested) {
  const Encoder enc = small_encoder(3);
  const auto low = pruned_filters(enc, 0.1);
  const auto high = pruned_filters(enc, 0.4);
  for (std::size_t layer = 0; layer < low.size(); ++layer) {
    EXPECT_TRUE(std::includes(high[layer].begin(), high[layer].end(), low[layer].begin(),
                              low[layer].end()));
  }
}

TEST(Prune, ZeroesSelectedFilters) {
  const Encoder enc = small_encoder(4);
  const Encoder pruned = prune(enc, 0.3);
  const auto sets = pruned_filters(enc, 0.3);
  for (int layer = 0; layer < enc.num_blocks(); ++layer) {
    const Tensor& w = pruned.conv(layer).weight.value;
    const std::set<int> chosen(sets[static_cast<std::size_t>(layer)].begin(),
                               sets[static_cast<std::size_t>(layer)].end());
    for (int o = 0; o < w.n(); ++o) {
      double s = 0;
      for (std::size_t i = 0; i < w.sample_size(); ++i) s += std::fabs(w.sample(o)[i]);
      if (chosen.count(o)) {
        EXPECT_EQ(s, 0.0);
        EXPECT_EQ(pruned.bn(layer).gamma.value[static_cast<std::size_t>(o)], 0);
      } else {
        EXPECT_GT(s, 0.0);
      }
    }
  }
}

TEST(Prune, RejectsBadRate) {
  const Encoder enc = small_encoder(5);
  EXPECT_THROW(prune(enc, 1.0), ConfigError);
  EXPECT_THROW(prune(enc, -0.1), ConfigError);
}

TEST(Noise, ZeroScaleIsIdentity) {
  const Encoder enc = small_encoder(6);
  const Tensor x = images(4, 1);
  const Tensor clean = enc.embed(x);
  const Tensor noisy = noise_embeddings(oracle_for(enc), 0.0, 9)->embed(x);
  EXPECT_EQ(clean.vec(), noisy.vec());
}

TEST(Noise, VarianceMatchesScale) {
  const Encoder enc = small_encoder(7, 128);
  const Tensor x = images(80, 2);
  const Tensor clean = enc.embed(x);
  const double eps = 0.15;
  const Tensor noisy = noise_embeddings(oracle_for(enc), eps, 10)->embed(x);
  ASSERT_GE(clean.size(), 10000u);
  double mean = 0, sq = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = noisy[i] - clean[i];
    mean += d;
    sq += d * d;
  }
  mean /= static_cast<double>(clean.size());
  const double var = sq / static_cast<double>(clean.size()) - mean * mean;
  EXPECT_NEAR(var, eps * eps, 0.05 * eps * eps);
  EXPECT_THROW(noise_embeddings(oracle_for(enc), -1.0, 1), ConfigError);
}

TEST(Noise, StreamIsKeyedByQueryIndex) {
  const Encoder enc = small_encoder(8);
  const Tensor x = images(6, 3);
  const Tensor whole = noise_embeddings(oracle_for(enc), 0.1, 11)->embed(x);
  auto split = noise_embeddings(oracle_for(enc), 0.1, 11);
  const Tensor a = split->embed(x.slice(0, 2));
  const Tensor b = split->embed(x.slice(2, 6));
  const Tensor* parts[] = {&a, &b};
  // The encoder itself is not bit-identical across batch sizes.
  const auto joined = concat_batch(parts).vec();
  const auto expected = whole.vec();
  ASSERT_EQ(joined.size(), expected.size());
  for (std::size_t i = 0; i < joined.size(); ++i) EXPECT_NEAR(joined[i], expected[i], 1e-5);
  // A fresh wrapper restarts at query 0, so its noise on images 2..5 differs.
  const Tensor restarted = noise_embeddings(oracle_for(enc), 0.1, 11)->embed(x.slice(2, 6));
  double gap = 0;
  for (std::size_t i = 0; i < b.size(); ++i) gap = std::max(gap, std::abs(double(b[i] - restarted[i])));
  EXPECT_GT(gap, 1e-3);
}

TEST(Shuffle, PreservesMultisetAndMovesValues) {
  const Encoder enc = small_encoder(9, 128);
  const Tensor x = images(10, 4);
  const Tensor clean = enc.embed(x);
  const Tensor shuffled = shuffle_embeddings(oracle_for(enc), 0.05, 12)->embed(x);
  for (int b = 0; b < clean.n(); ++b) {
    std::vector<Real> u(clean.sample(b), clean.sample(b) + clean.sample_size());
    std::vector<Real> v(shuffled.sample(b), shuffled.sample(b) + shuffled.sample_size());
    int moved = 0;
    for (std::size_t i = 0; i < u.size(); ++i) moved += u[i] != v[i];
    // ceil(0.05 * 128) = 7 coordinates take part.
    EXPECT_GE(moved, 2);
    EXPECT_LE(moved, 7);
    std::sort(u.begin(), u.end());
    std::sort(v.begin(), v.end());
    EXPECT_EQ(u, v);
  }
}

TEST(Shuffle, ZeroFractionIsIdentity) {
  const Encoder enc = small_encoder(10);
  const Tensor x = images(4, 5);
  EXPECT_EQ(shuffle_embeddings(oracle_for(enc), 0.0, 1)->embed(x).vec(), enc.embed(x).vec());
  EXPECT_THROW(shuffle_embeddings(oracle_for(enc), 1.5, 1), ConfigError);
}

TEST(Extract, WidthMismatchIsRejected) {
  const Encoder victim = small_encoder(11, 16);
  auto oracle = oracle_for(victim);
  EncoderSpec spec;
  spec.width = 0.5;
  spec.embed_dim = 32;
  ExtractConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(extract_model(*oracle, spec, synth_dataset(1, 8, 16), cfg), ConfigError);
  EXPECT_EQ(oracle->query_count(), 0u);
}

TEST(Extract, ZeroEpochsGivesFreshSurrogate) {
  const Encoder victim = small_encoder(12, 16);
  auto oracle = oracle_for(victim);
  EncoderSpec spec;
  spec.width = 0.5;
  spec.embed_dim = 16;
  ExtractConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 5;
  const Encoder a = extract_model(*oracle, spec, synth_dataset(1, 8, 16), cfg);
  const Encoder b = extract_model(*oracle, spec, synth_dataset(1, 8, 16), cfg);
  EXPECT_EQ(a.parameter_digest(), b.parameter_digest());
  EXPECT_NE(a.parameter_digest(), victim.parameter_digest());
  EXPECT_EQ(a.provenance().role, "piracy");
}

TEST(Extract, RegressionReducesGap) {
  const Encoder victim = small_encoder(13, 16);
  auto oracle = oracle_for(victim);
  const ImageDataset data = synth_dataset(2, 64, 16);
  EncoderSpec spec;
  spec.width = 0.5;
  spec.embed_dim = 16;
  ExtractConfig cfg;
  cfg.batch_size = 16;
  cfg.seed = 6;
  auto gap = [&](const Encoder& e) {
    const Tensor x = data.batch(0, 32);
    const Tensor a = e.embed(x), b = victim.embed(x);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  cfg.epochs = 0;
  const double before = gap(extract_model(*oracle, spec, data, cfg));
  cfg.epochs = 5;
  const double after = gap(extract_model(*oracle, spec, data, cfg));
  EXPECT_LT(after, before);
}

TEST(Finetune, ZeroEpochsIsIdenticalAndPiracy) {
  const Encoder enc = small_encoder(14);
  FinetuneConfig cfg;
  cfg.epochs = 0;
  const Encoder out = finetune(enc, synth_dataset(1, 8, 16), cfg);
  EXPECT_EQ(out.parameter_digest(), enc.parameter_digest());
  EXPECT_EQ(out.provenance().role, "piracy");
}

TEST(Finetune, RtalReinitializesOutputLayerOnly) {
  const Encoder enc = small_encoder(15);
  FinetuneConfig cfg;
  cfg.mode = FinetuneMode::kRtal;
  cfg.epochs = 0;
  const Encoder out = finetune(enc, synth_dataset(1, 8, 16), cfg);
  const auto a = enc.state();
  const auto b = out.state();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool same = a[i].value.vec() == b[i].value.vec();
    EXPECT_EQ(same, a[i].name.rfind("fc.", 0) != 0) << a[i].name;
  }
}

TEST(Finetune, ModeNames) {
  for (auto m : {FinetuneMode::kSame, FinetuneMode::kOther, FinetuneMode::kFtal,
                 FinetuneMode::kRtal}) {
    EXPECT_EQ(parse_finetune_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_finetune_mode("ft-nope"), ConfigError);
}

TEST(Wrapper, DescriptorRoundTrip) {
  WrapperDescriptor d;
  d.kind = "shuffle";
  d.inner = "weights/victim.sgw";
  d.param = 0.05;
  d.seed = 77;
  const WrapperDescriptor e = WrapperDescriptor::from_json(d.to_json());
  EXPECT_EQ(e.kind, d.kind);
  EXPECT_EQ(e.inner, d.inner);
  EXPECT_EQ(e.param, d.param);
  EXPECT_EQ(e.seed, d.seed);
  d.kind = "blur";
  EXPECT_THROW(WrapperDescriptor::from_json(d.to_json()), ConfigError);
}

}  // namespace
}  // namespace sg
