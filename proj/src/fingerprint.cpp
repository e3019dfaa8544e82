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


#include "stegguard/fingerprint.hpp"

#include <cmath>
#include <numeric>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

constexpr int kBundleVersion = 1;

std::string to_string(Direction d) { return d == Direction::kForward ? "forward" : "reverse"; }

Direction parse_direction(const std::string& text) {
  if (text == "forward") return Direction::kForward;
  if (text == "reverse") return Direction::kReverse;
  throw ConfigError("unknown training direction '" + text + "'");
}

Json curve_json(const std::vector<EpochRecord>& curve) {
  Json out = Json::array();
  for (const auto& r : curve) {
    out.push_back({{"epoch", r.epoch},
                   {"loss_secret", r.loss_secret},
                   {"loss_image", r.loss_image},
                   {"total", r.total},
                   {"ebr", r.ebr}});
  }
  return out;
}

}  // namespace

double loss_secret(std::span<const Real> bits, std::span<const Real> logits) {
  if (bits.size() != logits.size() || bits.empty()) {
    throw InputError("secret and logits must have the same nonzero length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double d = static_cast<double>(bits[i]) - logits[i];
    acc += d * d;
  }
  return acc / static_cast<double>(bits.size());
}

double loss_image(const Tensor& x, const Tensor& stego) {
  if (!x.same_shape(stego) || x.empty()) {
    throw InputError("image shapes differ: " + x.shape_string() + " vs " + stego.shape_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - stego[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

double total_loss(double l_image, double l_secret, double alpha) {
  if (!(alpha > 0)) throw ConfigError("loss weight alpha must be positive");
  return l_image + alpha * l_secret;
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  if (secret_len < 1) throw ConfigError("secret length must be >= 1");
  if (epochs < 1) throw ConfigError("fingerprint epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("fingerprint batch size must be >= 2");
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  if (!(stop_ebr > 0 && stop_ebr < 0.5)) throw ConfigError("stop_ebr must be in (0, 0.5)");
  if (width < 1) throw ConfigError("embedder width must be >= 1");
  if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
}

Json TrainConfig::to_json() const {
  return {{"alpha", alpha},
          {"secret_len", secret_len},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"stop_ebr", stop_ebr},
          {"width", width},
          {"warmup_epochs", warmup_epochs},
          {"fca", fca},
          {"direction", to_string(direction)},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
  TrainConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.secret_len = j.value("secret_len", c.secret_len);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.stop_ebr = j.value("stop_ebr", c.stop_ebr);
  c.width = j.value("width", c.width);
  c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
  c.fca = j.value("fca", c.fca);
  c.direction = parse_direction(j.value("direction", std::string("forward")));
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

// ---------------------------------------------------------------- bundle

FingerprintBundle::FingerprintBundle(Embedder embedder, Extractor extractor,
                                     TrainConfig config, std::string victim_digest,
                                     int image_size)
    : embedder_(std::move(embedder)),
      extractor_(std::move(extractor)),
      config_(std::move(config)),
      victim_digest_(std::move(victim_digest)),
      image_size_(image_size) {}

Tensor FingerprintBundle::stego(const Tensor& images, const Tensor& secrets) const {
  return clamp_unit(embedder_.forward(images, secrets, Mode::kEval, nullptr));
}

Tensor FingerprintBundle::extract(const Tensor& embeddings) const {
  return extractor_.forward(embeddings, nullptr);
}

std::string FingerprintBundle::digest() const { return sha256_hex(encode_bundle(*this)); }

// -------------------------------------------------------------- training

FingerprintBundle train_fingerprint(const Encoder& victim, const ImageDataset& data,
                                    const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (data.empty()) throw ConfigError("fingerprint training set is empty");
  const std::string victim_before = victim.parameter_digest();

  StegoSpec spec;
  spec.secret_len = config.secret_len;
  spec.width = config.width;
  spec.embed_dim = victim.embed_dim();
  spec.fca = config.fca;
  FingerprintBundle bundle(Embedder::build(spec, config.seed), Extractor::build(spec, config.seed),
                           config, victim.provenance().digest, data.image_size);
  Embedder& embedder = bundle.embedder();
  Extractor& extractor = bundle.extractor();

  std::vector<Param*> params = embedder.params();
  for (Param* p : extractor.params()) params.push_back(p);
  Adam opt(params, Adam::Options{.lr = config.lr});

  Rng order_rng(config.seed, "fingerprint-order");
  Rng secret_rng(config.seed, "secrets");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, data.size());
  const int len = config.secret_len;
  const bool reverse = config.direction == Direction::kReverse;
  const std::size_t steps_per_epoch = (order.size() + batch - 1) / batch;
  const double warmup_steps = static_cast<double>(config.warmup_epochs) * steps_per_epoch;
  double step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[order_rng.below(i + 1)]);
    }
    double sum_ls = 0, sum_li = 0, sum_total = 0;
    std::size_t errors = 0, bits = 0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      // Batch statistics need at least two samples.
      if (end - start < 2 && batches > 0) break;
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor x = data.batch(idx);
      const int n = x.n();
      const Tensor k = gen_secret_batch(n, len, secret_rng);
      Tensor target = k;
      if (reverse) {
        for (Real& v : target.vec()) v = Real(1) - v;
      }

      Embedder::Cache ec;
      const Tensor xs = embedder.forward(x, k, Mode::kTrain, &ec);
      Encoder::Cache vc;
      const Tensor y = victim.forward(xs, Mode::kEval, &vc);
      Extractor::Cache xc;
      const Tensor logits = extractor.forward(y, &xc);

      double ls = 0.0;
      for (int b = 0; b < n; ++b) {
        ls += loss_secret({target.sample(b), static_cast<std::size_t>(len)},
                          {logits.sample(b), static_cast<std::size_t>(len)});
      }
      ls /= n;
      const double li = loss_image(x, xs);
      const double total = total_loss(li, ls, config.alpha);
      if (!std::isfinite(total)) {
        throw TrainingError("fingerprint loss is not finite at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches));
      }
      if (options.steps) options.steps->push_back({ls, li, total});

      Tensor dlogits = Tensor::like(logits);
      const Real gs = static_cast<Real>(2.0 * config.alpha / (static_cast<double>(n) * len));
      for (std::size_t i = 0; i < logits.size(); ++i) dlogits[i] = gs * (logits[i] - target[i]);
      Tensor dxs = Tensor::like(xs);
      const double image_weight = step < warmup_steps ? step / warmup_steps : 1.0;
      const Real gi = static_cast<Real>(2.0 * image_weight / static_cast<double>(xs.size()));
      for (std::size_t i = 0; i < xs.size(); ++i) dxs[i] = gi * (xs[i] - x[i]);

      opt.zero_grad();
      dxs += victim.backward_input(extractor.backward(dlogits, xc), vc);
      embedder.backward(dxs, ec);
      embedder.update_running(ec);
      opt.step();
      step += 1;

      const Tensor predicted = binarize(logits);
      for (std::size_t i = 0; i < predicted.size(); ++i) errors += predicted[i] != target[i];
      bits += predicted.size();
      sum_ls += ls;
      sum_li += li;
      sum_total += total;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.loss_secret = sum_ls / batches;
    rec.loss_image = sum_li / batches;
    rec.total = sum_total / batches;
    rec.ebr = static_cast<double>(errors) / static_cast<double>(bits);
    bundle.curve().push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (rec.ebr < config.stop_ebr) break;
  }

  if (victim.parameter_digest() != victim_before) {
    throw TrainingError("victim encoder parameters changed during fingerprint training");
  }
  return bundle;
}

// ------------------------------------------------------------------- I/O

std::vector<std::uint8_t> encode_bundle(const FingerprintBundle& bundle) {
  const Json meta = {{"kind", "fingerprint"},
                     {"bundle_version", kBundleVersion},
                     {"spec", bundle.spec().to_json()},
                     {"config", bundle.config().to_json()},
                     {"victim_digest", bundle.victim_digest()},
                     {"image_size", bundle.image_size()},
                     {"curve", curve_json(bundle.curve())}};
  std::vector<NamedTensor> tensors = bundle.embedder().state();
  for (auto& t : bundle.extractor().state()) tensors.push_back(std::move(t));
  return encode_container("SGF1", meta, tensors);
}

FingerprintBundle decode_bundle(std::span<const std::uint8_t> bytes) {
  const auto decoded = decode_container("SGF1", bytes);
  const Json& meta = decoded.meta;
  if (meta.value("kind", "") != "fingerprint") throw FormatError("not a fingerprint bundle");
  if (meta.value("bundle_version", -1) != kBundleVersion) {
    throw VersionError("unsupported fingerprint bundle version");
  }
  const StegoSpec spec = StegoSpec::from_json(meta.at("spec"));
  Embedder embedder = Embedder::build(spec, 0);
  embedder.load_state(decoded.tensors);
  Extractor extractor = Extractor::build(spec, 0);
  extractor.load_state(decoded.tensors);
  FingerprintBundle bundle(std::move(embedder), std::move(extractor),
                           TrainConfig::from_json(meta.at("config")),
                           meta.at("victim_digest").get<std::string>(),
                           meta.at("image_size").get<int>());
  for (const auto& r : meta.at("curve")) {
    bundle.curve().push_back({r.at("epoch").get<int>(), r.at("loss_secret").get<double>(),
                              r.at("loss_image").get<double>(), r.at("total").get<double>(),
                              r.at("ebr").get<double>()});
  }
  return bundle;
}

void save_bundle(const FingerprintBundle& bundle, const std::filesystem::path& path) {
  write_file_bytes(path, encode_bundle(bundle));
}

FingerprintBundle load_bundle(const std::filesystem::path& path) {
  return decode_bundle(read_file_bytes(path));
}

}  // namespace SG_REAL_NS
}  // namespace sg
