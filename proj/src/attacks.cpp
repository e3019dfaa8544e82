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


#include "stegguard/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

constexpr int kQueryBatch = 64;

void mark_piracy(Encoder& e, const std::string& parent, Json attack) {
  attack["parent"] = parent;
  e.set_provenance("piracy", std::move(attack));
}

}  // namespace

// ------------------------------------------------------------ extraction

Json ExtractConfig::to_json() const {
  return {{"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"seed", seed}};
}

Encoder extract_model(EncoderOracle& victim, const EncoderSpec& surrogate_spec,
                      const ImageDataset& data, const ExtractConfig& config) {
  if (surrogate_spec.embed_dim != victim.embed_dim()) {
    throw ConfigError("surrogate width " + std::to_string(surrogate_spec.embed_dim) +
                      " differs from the victim's " + std::to_string(victim.embed_dim()));
  }
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.batch_size < 2) throw ConfigError("extraction batch size must be >= 2");
  if (data.empty()) throw ConfigError("surrogate dataset is empty");

  const std::uint64_t before = victim.query_count();
  const int d = victim.embed_dim();
  Tensor targets(static_cast<int>(data.size()), d);
  for (std::size_t start = 0; start < data.size(); start += kQueryBatch) {
    const std::size_t end = std::min(data.size(), start + kQueryBatch);
    const Tensor y = victim.embed(data.batch(start, end));
    std::copy(y.data(), y.data() + y.size(), targets.sample(static_cast<int>(start)));
  }
  const std::uint64_t queries = victim.query_count() - before;

  Encoder surrogate = Encoder::build(surrogate_spec, config.seed);
  Adam opt(surrogate.params(false), Adam::Options{.lr = config.lr});
  Rng rng(config.seed, "attack");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, data.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (std::size_t start = 0; start + 2 <= order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Encoder::Cache cache;
      const Tensor y = surrogate.forward(data.batch(idx), Mode::kTrain, &cache);
      Tensor dy = Tensor::like(y);
      const Real scale = Real(2) / static_cast<Real>(y.size());
      double loss = 0.0;
      for (int b = 0; b < y.n(); ++b) {
        const Real* t = targets.sample(static_cast<int>(idx[static_cast<std::size_t>(b)]));
        for (int j = 0; j < d; ++j) {
          const Real diff = y.sample(b)[j] - t[j];
          dy.sample(b)[j] = scale * diff;
          loss += static_cast<double>(diff) * diff;
        }
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("extraction loss diverged at epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      surrogate.backward(dy, cache);
      surrogate.update_running(cache);
      opt.step();
    }
  }
  mark_piracy(surrogate, victim.tag(),
              {{"attack", "extract"},
               {"dataset", data.source},
               {"images", data.size()},
               {"victim_queries", queries},
               {"config", config.to_json()}});
  return surrogate;
}

// ----------------------------------------------------------- fine-tuning

FinetuneMode parse_finetune_mode(const std::string& text) {
  if (text == "ft-same") return FinetuneMode::kSame;
  if (text == "ft-other") return FinetuneMode::kOther;
  if (text == "ftal") return FinetuneMode::kFtal;
  if (text == "rtal") return FinetuneMode::kRtal;
  throw ConfigError("unknown fine-tuning mode '" + text + "'");
}

std::string to_string(FinetuneMode mode) {
  switch (mode) {
    case FinetuneMode::kSame: return "ft-same";
    case FinetuneMode::kOther: return "ft-other";
    case FinetuneMode::kFtal: return "ftal";
    case FinetuneMode::kRtal: return "rtal";
  }
  return "?";
}

Json FinetuneConfig::to_json() const {
  return {{"mode", to_string(mode)}, {"epochs", epochs},           {"batch_size", batch_size},
          {"lr", lr},                {"temperature", temperature}, {"seed", seed}};
}

Encoder finetune(const Encoder& encoder, const ImageDataset& data, const FinetuneConfig& config) {
  Encoder out = encoder;
  if (config.mode == FinetuneMode::kRtal) out.reinit_output_layer(config.seed);
  SslConfig ssl;
  ssl.epochs = config.epochs;
  ssl.batch_size = config.batch_size;
  ssl.lr = config.lr;
  ssl.temperature = config.temperature;
  ssl.seed = config.seed;
  pretrain_ssl(out, data, ssl);
  mark_piracy(out, encoder.provenance().digest,
              {{"attack", "finetune"}, {"dataset", data.source}, {"config", config.to_json()}});
  return out;
}

// ---------------------------------------------------------------- pruning

std::vector<std::vector<int>> pruned_filters(const Encoder& encoder, double rate) {
  if (!(rate >= 0 && rate < 1)) throw ConfigError("pruning rate must be in [0, 1)");
  std::vector<std::vector<int>> out;
  for (int layer = 0; layer < encoder.num_blocks(); ++layer) {
    const Tensor& w = encoder.conv(layer).weight.value;
    const int filters = w.n();
    std::vector<double> norms(static_cast<std::size_t>(filters));
    for (int o = 0; o < filters; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < w.sample_size(); ++i) s += std::abs(w.sample(o)[i]);
      norms[static_cast<std::size_t>(o)] = s;
    }
    std::vector<int> idx(static_cast<std::size_t>(filters));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return norms[static_cast<std::size_t>(a)] < norms[static_cast<std::size_t>(b)];
    });
    const auto k = static_cast<std::size_t>(std::floor(rate * filters));
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    out.push_back(std::move(idx));
  }
  return out;
}

Encoder prune(const Encoder& encoder, double rate) {
  const auto sets = pruned_filters(encoder, rate);
  Encoder out = encoder;
  for (int layer = 0; layer < out.num_blocks(); ++layer) {
    Conv2d& conv = out.conv(layer);
    BatchNorm2d& bn = out.bn(layer);
    for (int o : sets[static_cast<std::size_t>(layer)]) {
      std::fill(conv.weight.value.sample(o),
                conv.weight.value.sample(o) + conv.weight.value.sample_size(), Real(0));
      conv.bias.value[static_cast<std::size_t>(o)] = 0;
      bn.gamma.value[static_cast<std::size_t>(o)] = 0;
      bn.beta.value[static_cast<std::size_t>(o)] = 0;
    }
  }
  mark_piracy(out, encoder.provenance().digest, {{"attack", "prune"}, {"rate", rate}});
  return out;
}

// ---------------------------------------------------------------- wrappers

std::shared_ptr<EncoderOracle> noise_embeddings(std::shared_ptr<EncoderOracle> inner,
                                                double eps, std::uint64_t seed) {
  return std::make_shared<NoisyOracle>(std::move(inner), eps, seed);
}

std::shared_ptr<EncoderOracle> shuffle_embeddings(std::shared_ptr<EncoderOracle> inner,
                                                  double fraction, std::uint64_t seed) {
  return std::make_shared<ShuffledOracle>(std::move(inner), fraction, seed);
}

Json WrapperDescriptor::to_json() const {
  return {{"kind", kind}, {"inner", inner}, {"param", param}, {"seed", seed}};
}

WrapperDescriptor WrapperDescriptor::from_json(const Json& j) {
  WrapperDescriptor d;
  d.kind = j.at("kind").get<std::string>();
  d.inner = j.at("inner").get<std::string>();
  d.param = j.at("param").get<double>();
  d.seed = j.value("seed", std::uint64_t{0});
  if (d.kind != "noise" && d.kind != "shuffle") {
    throw ConfigError("unknown oracle wrapper '" + d.kind + "'");
  }
  return d;
}

std::shared_ptr<EncoderOracle> open_wrapper(const WrapperDescriptor& desc,
                                            std::shared_ptr<EncoderOracle> inner) {
  if (desc.kind == "noise") return noise_embeddings(std::move(inner), desc.param, desc.seed);
  if (desc.kind == "shuffle") return shuffle_embeddings(std::move(inner), desc.param, desc.seed);
  throw ConfigError("unknown oracle wrapper '" + desc.kind + "'");
}

}  // namespace SG_REAL_NS
}  // namespace sg
