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

#include "stegguard/encoder.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

constexpr int kSpecVersion = 1;

std::string block_name(int i) { return "block" + std::to_string(i); }

}  // namespace

// ------------------------------------------------------------------ spec

std::vector<BlockLayout> block_layout(const EncoderSpec& spec) {
  std::vector<BlockLayout> base;
  if (spec.arch == "conv-small") {
    base = {{16, true}, {32, true}, {32, true}, {64, false}};
  } else if (spec.arch == "conv-wide") {
    base = {{24, true}, {24, false}, {48, true}, {48, false}, {96, true}, {96, false}};
  } else if (spec.arch == "conv-deep") {
    base = {{16, true}, {16, false}, {32, true}, {32, false},
            {32, false}, {64, true}, {64, false}, {64, false}};
  } else {
    throw ConfigError("unknown encoder architecture '" + spec.arch + "'");
  }
  for (auto& b : base) {
    b.channels = std::max(1, static_cast<int>(std::lround(b.channels * spec.width)));
  }
  return base;
}

void EncoderSpec::validate() const {
  block_layout(*this);
  if (embed_dim < 16) throw ConfigError("embedding width must be >= 16");
  if (!(width > 0)) throw ConfigError("width multiplier must be positive");
}

Json EncoderSpec::to_json() const {
  return {{"arch", arch},
          {"embed_dim", embed_dim},
          {"activation", to_string(activation)},
          {"width", width}};
}

EncoderSpec EncoderSpec::from_json(const Json& j) {
  EncoderSpec s;
  s.arch = j.value("arch", s.arch);
  s.embed_dim = j.value("embed_dim", s.embed_dim);
  s.activation = parse_activation(j.value("activation", std::string("relu")));
  s.width = j.value("width", s.width);
  s.validate();
  return s;
}

Json Provenance::to_json() const {
  return {{"role", role}, {"config", config}, {"digest", digest}};
}

std::string provenance_digest(const EncoderSpec& spec, const Json& config) {
  const Json canonical = {{"spec", spec.to_json()}, {"config", config}};
  return sha256_hex(canonical.dump());
}

// --------------------------------------------------------------- Encoder

Encoder Encoder::build(const EncoderSpec& spec, std::uint64_t seed) {
  spec.validate();
  Encoder e;
  e.spec_ = spec;
  Rng rng(seed, "init");
  int in = kImageChannels;
  int i = 0;
  for (const auto& b : block_layout(spec)) {
    e.convs_.emplace_back(block_name(i) + ".conv", in, b.channels, 3);
    e.convs_.back().init(rng);
    e.bns_.emplace_back(block_name(i) + ".bn", b.channels);
    e.pools_.push_back(b.pool);
    in = b.channels;
    ++i;
  }
  e.fc_ = Linear("fc", in, spec.embed_dim);
  e.fc_.init(rng);
  e.head1_ = Linear("head.fc1", spec.embed_dim, spec.embed_dim);
  e.head1_.init(rng);
  e.head2_ = Linear("head.fc2", spec.embed_dim, kProjectionDim);
  e.head2_.init(rng);
  e.set_provenance("independent", {{"init_seed", seed}, {"init", "fan-in-uniform"}});
  return e;
}

void Encoder::set_provenance(const std::string& role, Json config) {
  provenance_.role = role;
  provenance_.config = std::move(config);
  provenance_.digest = provenance_digest(spec_, provenance_.config);
}

Tensor Encoder::forward(const Tensor& images, Mode mode, Cache* cache) const {
  if (images.c() != kImageChannels) throw InputError("encoder expects 3-channel images");
  if (cache) cache->blocks.assign(convs_.size(), {});
  Tensor h = images;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    BlockCache* bc = cache ? &cache->blocks[i] : nullptr;
    Tensor a = convs_[i].forward(h, bc ? &bc->conv : nullptr);
    Tensor p = bns_[i].forward(a, mode, bc ? &bc->bn : nullptr);
    Tensor act = activate(p, spec_.activation);
    if (pools_[i]) {
      h = MaxPool2::forward(act, bc ? &bc->pool : nullptr);
    } else {
      h = act;
    }
    if (bc) {
      bc->pre_activation = std::move(p);
      bc->activation = std::move(act);
    }
  }
  if (cache) cache->last_shape = h.shape();
  return fc_.forward(GlobalAvgPool::forward(h), cache ? &cache->fc : nullptr);
}

void Encoder::update_running(const Cache& cache) {
  for (std::size_t i = 0; i < bns_.size(); ++i) bns_[i].update_running(cache.blocks[i].bn);
}

template <class Self>
Tensor Encoder::run_backward(Self& self, const Tensor& dy, const Cache& cache,
                             int stop_block) {
  constexpr bool kAccumulate = !std::is_const_v<Self>;
  Tensor g;
  if constexpr (kAccumulate) {
    g = self.fc_.backward(dy, cache.fc);
  } else {
    g = self.fc_.backward_input(dy, cache.fc);
  }
  const auto& s = cache.last_shape;
  g = GlobalAvgPool::backward(g.reshaped(s[0], s[1]), s[2], s[3]);
  for (int i = self.num_blocks() - 1; i >= 0; --i) {
    const BlockCache& bc = cache.blocks[static_cast<std::size_t>(i)];
    if (self.pools_[static_cast<std::size_t>(i)]) g = MaxPool2::backward(g, bc.pool);
    if (i == stop_block) return g;
    g = activate_backward(g, bc.pre_activation, self.spec_.activation);
    auto& bn = self.bns_[static_cast<std::size_t>(i)];
    auto& conv = self.convs_[static_cast<std::size_t>(i)];
    if constexpr (kAccumulate) {
      g = conv.backward(bn.backward(g, bc.bn), bc.conv);
    } else {
      g = conv.backward_input(bn.backward_input(g, bc.bn), bc.conv);
    }
  }
  return g;
}

Tensor Encoder::backward(const Tensor& dy, const Cache& cache) {
  return run_backward(*this, dy, cache, -1);
}

Tensor Encoder::backward_input(const Tensor& dy, const Cache& cache) const {
  return run_backward(*this, dy, cache, -1);
}

Tensor Encoder::block_gradient(const Tensor& dy, const Cache& cache, int block) const {
  if (block < 0 || block >= num_blocks()) {
    throw ConfigError("unknown encoder block " + std::to_string(block));
  }
  return run_backward(*this, dy, cache, block);
}

Tensor Encoder::forward_from_block(int block, const Tensor& activation) const {
  if (block < 0 || block >= num_blocks()) {
    throw ConfigError("unknown encoder block " + std::to_string(block));
  }
  Tensor h = pools_[static_cast<std::size_t>(block)] ? MaxPool2::forward(activation, nullptr)
                                                     : activation;
  for (std::size_t i = static_cast<std::size_t>(block) + 1; i < convs_.size(); ++i) {
    Tensor a = convs_[i].forward(h, nullptr);
    Tensor act = activate(bns_[i].forward(a, Mode::kEval, nullptr), spec_.activation);
    h = pools_[i] ? MaxPool2::forward(act, nullptr) : act;
  }
  return fc_.forward(GlobalAvgPool::forward(h), nullptr);
}

Tensor Encoder::project(const Tensor& embeddings, HeadCache* cache) const {
  Tensor pre = head1_.forward(embeddings, cache ? &cache->fc1 : nullptr);
  Tensor hidden = activate(pre, Activation::kRelu);
  if (cache) cache->hidden_pre = pre;
  return head2_.forward(hidden, cache ? &cache->fc2 : nullptr);
}

Tensor Encoder::project_backward(const Tensor& dz, const HeadCache& cache) {
  Tensor g = head2_.backward(dz, cache.fc2);
  g = activate_backward(g, cache.hidden_pre, Activation::kRelu);
  return head1_.backward(g, cache.fc1);
}

void Encoder::reinit_output_layer(std::uint64_t seed) {
  Rng rng(seed, "reinit");
  fc_.init(rng);
}

std::vector<Param*> Encoder::params(bool include_head) {
  std::vector<Param*> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    for (Param* p : convs_[i].params()) out.push_back(p);
    for (Param* p : bns_[i].params()) out.push_back(p);
  }
  for (Param* p : fc_.params()) out.push_back(p);
  if (include_head) {
    for (Param* p : head1_.params()) out.push_back(p);
    for (Param* p : head2_.params()) out.push_back(p);
  }
  return out;
}

std::vector<const Param*> Encoder::params(bool include_head) const {
  auto mut = const_cast<Encoder*>(this)->params(include_head);
  return {mut.begin(), mut.end()};
}

std::size_t Encoder::num_parameters(bool include_head) const {
  std::size_t n = 0;
  for (const Param* p : params(include_head)) n += p->value.size();
  return n;
}

std::vector<NamedTensor> Encoder::state() const {
  std::vector<NamedTensor> out;
  for (const Param* p : params(true)) out.push_back({p->name, p->value});
  for (const auto& bn : bns_) {
    out.push_back({bn.name + ".running_mean", bn.running_mean});
    out.push_back({bn.name + ".running_var", bn.running_var});
  }
  return out;
}

void Encoder::load_state(std::span<const NamedTensor> tensors) {
  for (Param* p : params(true)) {
    const Tensor& t = find_tensor(tensors, p->name);
    if (!t.same_shape(p->value)) throw CorruptionError("shape mismatch for " + p->name);
    p->value = t;
    p->grad = Tensor::like(t);
  }
  for (auto& bn : bns_) {
    bn.running_mean = find_tensor(tensors, bn.name + ".running_mean");
    bn.running_var = find_tensor(tensors, bn.name + ".running_var");
    if (bn.running_mean.size() != static_cast<std::size_t>(bn.channels()) ||
        bn.running_var.size() != static_cast<std::size_t>(bn.channels())) {
      throw CorruptionError("running statistics shape mismatch for " + bn.name);
    }
  }
}

std::string Encoder::parameter_digest() const {
  const auto st = state();
  return sha256_hex(encode_container("SGW1", Json::object(), st));
}

// ---------------------------------------------------------------- oracle

LocalEncoderOracle::LocalEncoderOracle(std::shared_ptr<const Encoder> encoder,
                                       int image_size, std::string tag)
    : EncoderOracle(encoder->embed_dim(), image_size, std::move(tag)),
      encoder_(std::move(encoder)) {}

Tensor LocalEncoderOracle::do_embed(const Tensor& images, std::uint64_t) {
  return encoder_->embed(images);
}

std::shared_ptr<EncoderOracle> make_oracle(std::shared_ptr<const Encoder> encoder,
                                           int image_size, std::string tag) {
  return std::make_shared<LocalEncoderOracle>(std::move(encoder), image_size,
                                              std::move(tag));
}

// ---------------------------------------------------------- pre-training

Json SslConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"temperature", temperature},
          {"lr", lr},
          {"seed", seed}};
}

Tensor augment_batch(const Tensor& images, Rng& rng) {
  const int n = images.n(), s = images.h();
  Tensor out = Tensor::like(images);
  const std::size_t plane = images.plane_size();
  for (int b = 0; b < n; ++b) {
    const double scale = rng.uniform(0.3, 1.0);
    const double log_ratio = rng.uniform(std::log(3.0 / 4.0), std::log(4.0 / 3.0));
    const double ratio = std::exp(log_ratio);
    const double cw = std::min<double>(s, std::sqrt(scale * ratio) * s);
    const double ch = std::min<double>(s, std::sqrt(scale / ratio) * s);
    const double x0 = rng.uniform(0.0, s - cw);
    const double y0 = rng.uniform(0.0, s - ch);
    const bool flip = rng.bernoulli(0.5);
    const bool jitter = rng.bernoulli(0.8);
    const double brightness = rng.uniform(0.6, 1.4);
    const double contrast = rng.uniform(0.6, 1.4);
    const bool gray = rng.bernoulli(0.2);

    for (int c = 0; c < kImageChannels; ++c) {
      const Real* src = images.plane(b, c);
      Real* dst = out.plane(b, c);
      for (int i = 0; i < s; ++i) {
        const double sy = std::clamp(y0 + (i + 0.5) * ch / s - 0.5, 0.0, s - 1.0);
        const int iy = std::min(static_cast<int>(sy), s - 2 < 0 ? 0 : s - 2);
        const double fy = sy - iy;
        for (int j = 0; j < s; ++j) {
          const int jj = flip ? s - 1 - j : j;
          const double sx = std::clamp(x0 + (jj + 0.5) * cw / s - 0.5, 0.0, s - 1.0);
          const int ix = std::min(static_cast<int>(sx), s - 2 < 0 ? 0 : s - 2);
          const double fx = sx - ix;
          const double v00 = src[iy * s + ix], v01 = src[iy * s + ix + 1];
          const double v10 = src[(iy + 1) * s + ix], v11 = src[(iy + 1) * s + ix + 1];
          dst[i * s + j] = static_cast<Real>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                             fy * ((1 - fx) * v10 + fx * v11));
        }
      }
    }
    Real* r = out.plane(b, 0);
    Real* g = out.plane(b, 1);
    Real* bl = out.plane(b, 2);
    if (jitter) {
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        r[i] *= static_cast<Real>(brightness);
        g[i] *= static_cast<Real>(brightness);
        bl[i] *= static_cast<Real>(brightness);
        mean += 0.299 * r[i] + 0.587 * g[i] + 0.114 * bl[i];
      }
      mean /= static_cast<double>(plane);
      for (Real* p : {r, g, bl}) {
        for (std::size_t i = 0; i < plane; ++i) {
          p[i] = static_cast<Real>((p[i] - mean) * contrast + mean);
        }
      }
    }
    if (gray) {
      for (std::size_t i = 0; i < plane; ++i) {
        const Real y = static_cast<Real>(0.299 * r[i] + 0.587 * g[i] + 0.114 * bl[i]);
        r[i] = g[i] = bl[i] = y;
      }
    }
    for (Real* p : {r, g, bl}) {
      for (std::size_t i = 0; i < plane; ++i) p[i] = std::clamp(p[i], Real(0), Real(1));
    }
  }
  return out;
}

double nt_xent(const Tensor& z, double temperature, Tensor* grad) {
  using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int n2 = z.n();
  const int dim = static_cast<int>(z.sample_size());
  if (n2 < 2 || n2 % 2 != 0) throw InputError("nt_xent needs an even batch of >= 2 rows");
  const int half = n2 / 2;
  MatD u(n2, dim);
  std::vector<double> norms(static_cast<std::size_t>(n2));
  for (int i = 0; i < n2; ++i) {
    double ss = 0.0;
    for (int j = 0; j < dim; ++j) ss += static_cast<double>(z.sample(i)[j]) * z.sample(i)[j];
    norms[static_cast<std::size_t>(i)] = std::max(std::sqrt(ss), 1e-12);
    for (int j = 0; j < dim; ++j) u(i, j) = z.sample(i)[j] / norms[static_cast<std::size_t>(i)];
  }
  const MatD sim = (u * u.transpose()) / temperature;
  MatD gs = MatD::Zero(n2, n2);
  double loss = 0.0;
  for (int i = 0; i < n2; ++i) {
    const int pos = i < half ? i + half : i - half;
    double mx = -1e300;
    for (int k = 0; k < n2; ++k) {
      if (k != i) mx = std::max(mx, sim(i, k));
    }
    double denom = 0.0;
    for (int k = 0; k < n2; ++k) {
      if (k != i) denom += std::exp(sim(i, k) - mx);
    }
    loss += -sim(i, pos) + mx + std::log(denom);
    for (int k = 0; k < n2; ++k) {
      if (k == i) continue;
      gs(i, k) = std::exp(sim(i, k) - mx) / denom;
    }
    gs(i, pos) -= 1.0;
  }
  loss /= n2;
  if (grad) {
    gs /= static_cast<double>(n2);
    const MatD du = ((gs + gs.transpose()) * u) / temperature;
    *grad = Tensor::like(z);
    for (int i = 0; i < n2; ++i) {
      const double dot = u.row(i).dot(du.row(i));
      for (int j = 0; j < dim; ++j) {
        grad->sample(i)[j] = static_cast<Real>(
            (du(i, j) - u(i, j) * dot) / norms[static_cast<std::size_t>(i)]);
      }
    }
  }
  return loss;
}

SslLog pretrain_ssl(Encoder& encoder, const ImageDataset& dataset,
                    const SslConfig& config) {
  SslLog log;
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.epochs == 0) return log;
  if (dataset.size() < 2) throw ConfigError("contrastive training needs >= 2 images");
  if (config.batch_size < 2) throw ConfigError("contrastive batch size must be >= 2");

  Rng rng(config.seed, "ssl");
  Adam opt(encoder.params(true), Adam::Options{.lr = config.lr});
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, dataset.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
    double total = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start + 2 <= order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor x = dataset.batch(idx);
      const Tensor v1 = augment_batch(x, rng);
      const Tensor v2 = augment_batch(x, rng);
      const Tensor* parts[] = {&v1, &v2};
      const Tensor both = concat_batch(parts);
      Encoder::Cache cache;
      Encoder::HeadCache head_cache;
      const Tensor y = encoder.forward(both, Mode::kTrain, &cache);
      const Tensor z = encoder.project(y, &head_cache);
      Tensor dz;
      const double loss = nt_xent(z, config.temperature, &dz);
      if (!std::isfinite(loss)) {
        throw TrainingError("contrastive loss diverged at epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      encoder.backward(encoder.project_backward(dz, head_cache), cache);
      encoder.update_running(cache);
      opt.step();
      total += loss;
      ++steps;
    }
    log.epoch_loss.push_back(steps > 0 ? total / steps : 0.0);
  }

  Json cfg = encoder.provenance().config;
  Json stage = {{"dataset", dataset.source}, {"images", dataset.size()}, {"ssl", config.to_json()}};
  if (cfg.contains("pretrain")) {
    cfg["pretrain"].push_back(stage);
  } else {
    cfg["pretrain"] = Json::array({stage});
  }
  encoder.set_provenance(encoder.provenance().role, std::move(cfg));
  return log;
}

// ------------------------------------------------------------------- I/O

std::vector<std::uint8_t> encode_encoder(const Encoder& encoder) {
  const Json meta = {{"kind", "encoder"},
                     {"spec_version", kSpecVersion},
                     {"spec", encoder.spec().to_json()},
                     {"provenance", encoder.provenance().to_json()}};
  return encode_container("SGW1", meta, encoder.state());
}

Encoder decode_encoder(std::span<const std::uint8_t> bytes) {
  auto decoded = decode_container("SGW1", bytes);
  const Json& meta = decoded.meta;
  if (meta.value("kind", "") != "encoder") throw FormatError("not an encoder weight file");
  if (meta.value("spec_version", -1) != kSpecVersion) {
    throw VersionError("unsupported encoder spec version");
  }
  Encoder e = Encoder::build(EncoderSpec::from_json(meta.at("spec")), 0);
  e.load_state(decoded.tensors);
  const Json& prov = meta.at("provenance");
  e.set_provenance(prov.at("role").get<std::string>(), prov.at("config"));
  if (e.provenance().digest != prov.at("digest").get<std::string>()) {
    throw CorruptionError("provenance digest does not match its contents");
  }
  return e;
}

void save_encoder(const Encoder& encoder, const std::filesystem::path& path) {
  write_file_bytes(path, encode_encoder(encoder));
}

Encoder load_encoder(const std::filesystem::path& path) {
  return decode_encoder(read_file_bytes(path));
}

}  // namespace SG_REAL_NS
}  // namespace sg
