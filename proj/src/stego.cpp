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


#include "stegguard/stego.hpp"

#include <algorithm>
#include <cmath>

#include "stegguard/data.hpp"
#include "stegguard/dct.hpp"

namespace sg {
inline namespace SG_REAL_NS {
namespace {

Tensor relu(const Tensor& x) { return activate(x, Activation::kRelu); }

Tensor relu_backward(const Tensor& dy, const Tensor& pre) {
  return activate_backward(dy, pre, Activation::kRelu);
}

void load_params(std::span<Param* const> params, std::span<const NamedTensor> tensors) {
  for (Param* p : params) {
    const Tensor& t = find_tensor(tensors, p->name);
    if (!t.same_shape(p->value)) throw CorruptionError("shape mismatch for " + p->name);
    p->value = t;
    p->grad = Tensor::like(t);
  }
}

std::vector<NamedTensor> param_state(std::span<Param* const> params) {
  std::vector<NamedTensor> out;
  for (const Param* p : params) out.push_back({p->name, p->value});
  return out;
}

}  // namespace

// ------------------------------------------------------------------ spec

void StegoSpec::validate() const {
  if (secret_len < 1) throw ConfigError("secret length must be >= 1");
  if (width < 1) throw ConfigError("embedder width must be >= 1");
  if (embed_dim < 1) throw ConfigError("embedding width must be >= 1");
  if (hidden < 1) throw ConfigError("extractor hidden width must be >= 1");
}

Json StegoSpec::to_json() const {
  return {{"secret_len", secret_len},
          {"width", width},
          {"embed_dim", embed_dim},
          {"hidden", hidden},
          {"fca", fca}};
}

StegoSpec StegoSpec::from_json(const Json& j) {
  StegoSpec s;
  s.secret_len = j.value("secret_len", s.secret_len);
  s.width = j.value("width", s.width);
  s.embed_dim = j.value("embed_dim", s.embed_dim);
  s.hidden = j.value("hidden", s.hidden);
  s.fca = j.value("fca", s.fca);
  s.validate();
  return s;
}

// ---------------------------------------------------------------- FcaEmb

FcaEmb::FcaEmb(const std::string& name, int channels)
    : fc(name + ".fc", kDctCoeffs, channels) {}

void FcaEmb::init(Rng& rng) { fc.init(rng); }

Tensor FcaEmb::frequency(const Tensor& x) {
  const Tensor pooled = adaptive_pool7(x);
  const auto& basis = dct_basis_table();
  Tensor freq(x.n(), kDctCoeffs);
  std::array<double, kDctCoeffs> mean{};
  for (int b = 0; b < x.n(); ++b) {
    mean.fill(0.0);
    for (int c = 0; c < x.c(); ++c) {
      const Real* g = pooled.plane(b, c);
      for (int p = 0; p < kDctCoeffs; ++p) mean[static_cast<std::size_t>(p)] += g[p];
    }
    for (double& m : mean) m /= x.c();
    for (int i = 0; i < kDctCoeffs; ++i) {
      double acc = 0.0;
      for (int p = 0; p < kDctCoeffs; ++p) {
        acc += basis[static_cast<std::size_t>(i * kDctCoeffs + p)] * mean[static_cast<std::size_t>(p)];
      }
      freq.sample(b)[i] = static_cast<Real>(acc);
    }
  }
  return freq;
}

Tensor FcaEmb::forward(const Tensor& x, Cache* cache) const {
  if (x.c() != channels()) {
    throw ConfigError("attention block " + fc.weight.name + " expects " +
                      std::to_string(channels()) + " channels, got " + std::to_string(x.c()));
  }
  Tensor z = fc.forward(frequency(x), cache ? &cache->fc : nullptr);
  for (Real& v : z.vec()) v = Real(1) / (Real(1) + std::exp(-v));
  Tensor y = Tensor::like(x);
  const std::size_t hw = x.plane_size();
  for (int b = 0; b < x.n(); ++b) {
    for (int c = 0; c < x.c(); ++c) {
      const Real g = z.sample(b)[c];
      const Real* src = x.plane(b, c);
      Real* dst = y.plane(b, c);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = g * src[i];
    }
  }
  if (cache) {
    cache->input = x;
    cache->gate = std::move(z);
  }
  return y;
}

Tensor FcaEmb::backward(const Tensor& dy, const Cache& cache) {
  const Tensor& x = cache.input;
  const int n = x.n(), c = x.c();
  const std::size_t hw = x.plane_size();
  Tensor dx = Tensor::like(x);
  Tensor dz(n, c);
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const Real g = cache.gate.sample(b)[ch];
      const Real* gy = dy.plane(b, ch);
      const Real* src = x.plane(b, ch);
      Real* dst = dx.plane(b, ch);
      double dg = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        dg += static_cast<double>(gy[i]) * src[i];
        dst[i] = g * gy[i];
      }
      dz.sample(b)[ch] = static_cast<Real>(dg * g * (1 - g));
    }
  }
  const Tensor dfreq = fc.backward(dz, cache.fc);
  // freq = B * mean_c(pool(x)), so d(pool)[c] = B^T dfreq / C for every c.
  const auto& basis = dct_basis_table();
  Tensor dpooled(n, c, kDctGrid, kDctGrid);
  for (int b = 0; b < n; ++b) {
    std::array<double, kDctCoeffs> dm{};
    for (int i = 0; i < kDctCoeffs; ++i) {
      const double gi = dfreq.sample(b)[i];
      for (int p = 0; p < kDctCoeffs; ++p) {
        dm[static_cast<std::size_t>(p)] += basis[static_cast<std::size_t>(i * kDctCoeffs + p)] * gi;
      }
    }
    for (int ch = 0; ch < c; ++ch) {
      Real* dst = dpooled.plane(b, ch);
      for (int p = 0; p < kDctCoeffs; ++p) {
        dst[p] = static_cast<Real>(dm[static_cast<std::size_t>(p)] / c);
      }
    }
  }
  dx += adaptive_pool7_backward(dpooled, x.h(), x.w());
  return dx;
}

// -------------------------------------------------------------- Embedder

Embedder Embedder::build(const StegoSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int c = spec.width, l = spec.secret_len;
  Embedder e;
  e.spec_ = spec;
  e.conv1 = Conv2d("embedder.conv1", kImageChannels, c);
  e.conv2 = Conv2d("embedder.conv2", c + l, c);
  e.conv3 = Conv2d("embedder.conv3", c + c + l, c);
  e.conv4 = Conv2d("embedder.conv4", c + kImageChannels, kImageChannels);
  e.bn1 = BatchNorm2d("embedder.bn1", c);
  e.bn2 = BatchNorm2d("embedder.bn2", c);
  e.bn3 = BatchNorm2d("embedder.bn3", c);
  e.fca1 = FcaEmb("embedder.fca1", c);
  e.fca2 = FcaEmb("embedder.fca2", c);

  const auto in = e.stage_inputs();
  if (in[0] != kImageChannels || in[1] != c + l || in[2] != 2 * c + l ||
      e.conv4.in_channels() != c + kImageChannels) {
    throw ConfigError("embedder channel bookkeeping is inconsistent");
  }

  Rng rng(seed, "init");
  for (Conv2d* conv : {&e.conv1, &e.conv2, &e.conv3, &e.conv4}) conv->init(rng);
  e.fca1.init(rng);
  e.fca2.init(rng);
  return e;
}

std::array<int, 3> Embedder::stage_inputs() const {
  return {conv1.in_channels(), conv2.in_channels(), conv3.in_channels()};
}

Tensor Embedder::forward(const Tensor& images, const Tensor& secrets, Mode mode,
                         Cache* cache) const {
  if (images.c() != kImageChannels) throw InputError("embedder expects 3-channel images");
  if (static_cast<int>(secrets.sample_size()) != spec_.secret_len) {
    throw ConfigError("embedder is configured for L=" + std::to_string(spec_.secret_len) +
                      ", got secrets of length " + std::to_string(secrets.sample_size()));
  }
  if (secrets.n() != images.n()) throw InputError("one secret per image is required");
  Cache local;
  Cache& k = cache ? *cache : local;
  const Tensor planes = secrets.reshaped(secrets.n(), spec_.secret_len);

  auto stage = [&](const Conv2d& conv, const BatchNorm2d& bn, const FcaEmb* fca,
                   const Tensor& in, Stage& s) {
    s.pre = bn.forward(conv.forward(in, &s.conv, &planes), mode, &s.bn);
    s.post = relu(s.pre);
    return fca ? fca->forward(s.post, &s.fca) : s.post;
  };

  k.s1.pre = bn1.forward(conv1.forward(images, &k.s1.conv), mode, &k.s1.bn);
  k.fa = relu(k.s1.pre);
  k.fb = stage(conv2, bn2, spec_.fca ? &fca1 : nullptr, k.fa, k.s2);
  const Tensor* p3[] = {&k.fb, &k.fa};
  k.fc = stage(conv3, bn3, spec_.fca ? &fca2 : nullptr, concat_channels(p3), k.s3);
  const Tensor* p4[] = {&k.fc, &images};
  return conv4.forward(concat_channels(p4), &k.out);
}

void Embedder::backward(const Tensor& dstego, const Cache& cache) {
  const int c = spec_.width;
  const Tensor d4 = conv4.backward(dstego, cache.out);
  Tensor g = slice_channels(d4, 0, c);

  auto stage_back = [&](Conv2d& conv, BatchNorm2d& bn, FcaEmb* fca, Tensor dy,
                        const Stage& s) {
    if (fca) dy = fca->backward(dy, s.fca);
    dy = relu_backward(dy, s.pre);
    return conv.backward(bn.backward(dy, s.bn), s.conv);
  };

  const Tensor d3 = stage_back(conv3, bn3, spec_.fca ? &fca2 : nullptr, g, cache.s3);
  Tensor dfa = slice_channels(d3, c, 2 * c);
  dfa += stage_back(conv2, bn2, spec_.fca ? &fca1 : nullptr, slice_channels(d3, 0, c),
                    cache.s2);
  dfa = relu_backward(dfa, cache.s1.pre);
  conv1.backward(bn1.backward(dfa, cache.s1.bn), cache.s1.conv);
}

void Embedder::update_running(const Cache& cache) {
  bn1.update_running(cache.s1.bn);
  bn2.update_running(cache.s2.bn);
  bn3.update_running(cache.s3.bn);
}

std::vector<Param*> Embedder::params() {
  std::vector<Param*> out;
  for (Conv2d* conv : {&conv1, &conv2, &conv3, &conv4}) {
    for (Param* p : conv->params()) out.push_back(p);
  }
  for (BatchNorm2d* bn : {&bn1, &bn2, &bn3}) {
    for (Param* p : bn->params()) out.push_back(p);
  }
  if (spec_.fca) {
    for (FcaEmb* f : {&fca1, &fca2}) {
      for (Param* p : f->params()) out.push_back(p);
    }
  }
  return out;
}

std::vector<NamedTensor> Embedder::state() const {
  auto out = param_state(const_cast<Embedder*>(this)->params());
  for (const BatchNorm2d* bn : {&bn1, &bn2, &bn3}) {
    out.push_back({bn->name + ".running_mean", bn->running_mean});
    out.push_back({bn->name + ".running_var", bn->running_var});
  }
  return out;
}

void Embedder::load_state(std::span<const NamedTensor> tensors) {
  load_params(params(), tensors);
  for (BatchNorm2d* bn : {&bn1, &bn2, &bn3}) {
    bn->running_mean = find_tensor(tensors, bn->name + ".running_mean");
    bn->running_var = find_tensor(tensors, bn->name + ".running_var");
    if (bn->running_mean.size() != static_cast<std::size_t>(bn->channels()) ||
        bn->running_var.size() != static_cast<std::size_t>(bn->channels())) {
      throw CorruptionError("running statistics shape mismatch for " + bn->name);
    }
  }
}

// ------------------------------------------------------------- Extractor

Extractor Extractor::build(const StegoSpec& spec, std::uint64_t seed) {
  spec.validate();
  Extractor e;
  e.fc1 = Linear("extractor.fc1", spec.embed_dim, spec.hidden);
  e.fc2 = Linear("extractor.fc2", spec.hidden, spec.secret_len);
  Rng rng(seed, "init-extractor");
  e.fc1.init(rng);
  e.fc2.init(rng);
  return e;
}

Tensor Extractor::forward(const Tensor& embeddings, Cache* cache) const {
  if (static_cast<int>(embeddings.sample_size()) != embed_dim()) {
    throw ConfigError("extractor expects embeddings of width " + std::to_string(embed_dim()) +
                      ", got " + std::to_string(embeddings.sample_size()));
  }
  const Tensor flat = embeddings.reshaped(embeddings.n(), embed_dim());
  Tensor pre1 = fc1.forward(flat, cache ? &cache->fc1 : nullptr);
  Tensor pre2 = fc2.forward(relu(pre1), cache ? &cache->fc2 : nullptr);
  Tensor out = relu(pre2);
  if (cache) {
    cache->pre1 = std::move(pre1);
    cache->pre2 = std::move(pre2);
  }
  return out;
}

Tensor Extractor::backward(const Tensor& dlogits, const Cache& cache) {
  Tensor g = fc2.backward(relu_backward(dlogits, cache.pre2), cache.fc2);
  return fc1.backward(relu_backward(g, cache.pre1), cache.fc1);
}

std::vector<Param*> Extractor::params() {
  std::vector<Param*> out = fc1.params();
  for (Param* p : fc2.params()) out.push_back(p);
  return out;
}

std::vector<NamedTensor> Extractor::state() const {
  return param_state(const_cast<Extractor*>(this)->params());
}

void Extractor::load_state(std::span<const NamedTensor> tensors) {
  load_params(params(), tensors);
}

// ------------------------------------------------------------------ bits

std::vector<Real> binarize(std::span<const Real> logits) {
  std::vector<Real> bits(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite secret logit");
    bits[i] = logits[i] >= Real(0.5) ? Real(1) : Real(0);
  }
  return bits;
}

Tensor binarize(const Tensor& logits) {
  Tensor out = Tensor::like(logits);
  out.vec() = binarize(logits.span());
  return out;
}

Tensor clamp_unit(const Tensor& images) {
  Tensor out = images;
  for (Real& v : out.vec()) v = std::clamp(v, Real(0), Real(1));
  return out;
}

}  // namespace SG_REAL_NS
}  // namespace sg
