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


#include "stegguard/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sg {
inline namespace SG_REAL_NS {
namespace fs = std::filesystem;
namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

std::string utc_stamp(const char* format) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, format, &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint64_t derived_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  return Rng(master, label, index).next();
}

SslConfig ssl_from_json(const Json& j, SslConfig c) {
  check_keys(j, {"epochs", "batch_size", "temperature", "lr"}, "ssl");
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.temperature = j.value("temperature", c.temperature);
  c.lr = j.value("lr", c.lr);
  return c;
}

ExtractConfig extract_from_json(const Json& j, ExtractConfig c) {
  check_keys(j, {"epochs", "batch_size", "lr"}, "extract");
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  return c;
}

FinetuneConfig finetune_from_json(const Json& j, FinetuneConfig c) {
  check_keys(j, {"mode", "epochs", "batch_size", "lr", "temperature"}, "finetune");
  if (j.contains("mode")) c.mode = parse_finetune_mode(j.at("mode").get<std::string>());
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.temperature = j.value("temperature", c.temperature);
  return c;
}

struct Suspect {
  std::shared_ptr<EncoderOracle> oracle;
  std::string digest;  // provenance digest of the underlying encoder
};

Suspect load_suspect(const fs::path& path, int image_size) {
  if (path.extension() == ".json") {
    const auto bytes = read_file_bytes(path);
    Json j;
    try {
      j = Json::parse(bytes.begin(), bytes.end());
    } catch (const Json::exception& e) {
      throw FormatError("wrapper descriptor " + path.string() + ": " + e.what());
    }
    const WrapperDescriptor desc = WrapperDescriptor::from_json(j);
    fs::path inner = desc.inner;
    if (inner.is_relative()) inner = path.parent_path() / inner;
    auto enc = std::make_shared<const Encoder>(load_encoder(inner));
    const std::string digest = enc->provenance().digest;
    auto base = make_oracle(std::move(enc), image_size, inner.stem().string());
    return {open_wrapper(desc, std::move(base)), digest};
  }
  auto enc = std::make_shared<const Encoder>(load_encoder(path));
  const std::string digest = enc->provenance().digest;
  return {make_oracle(std::move(enc), image_size, path.stem().string()), digest};
}

struct Quality {
  double psnr = 0;
  double ssim = 0;
};

// Per-image PSNR and SSIM of stego queries, averaged.
Quality stego_quality(const FingerprintBundle& bundle, const ImageDataset& images,
                      std::uint64_t seed) {
  Rng rng(seed, "quality-secrets");
  Quality q;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor x = images.batch(i, i + 1);
    const Tensor k = gen_secret_batch(1, bundle.secret_len(), rng);
    const Tensor xs = bundle.stego(x, k);
    q.psnr += psnr(x, xs);
    q.ssim += ssim(x, xs);
  }
  q.psnr /= static_cast<double>(images.size());
  q.ssim /= static_cast<double>(images.size());
  return q;
}

ImageDataset query_set(const RunConfig& cfg, const ImageDataset& train, std::size_t n) {
  if (cfg.verify.disjoint) {
    ImageDataset q = sample_query_set(cfg.other_dataset.load(), n, cfg.seed);
    return q;
  }
  ImageDataset q = sample_query_set(train, n, cfg.seed);
  check_query_subset(q, train);
  return q;
}

void print_line(const std::string& s) { std::cout << s << std::endl; }

void log_epoch(const EpochRecord& r) {
  std::fprintf(stderr, "epoch %d  L_S %.5f  L_I %.6f  ebr %.4f\n", r.epoch, r.loss_secret,
               r.loss_image, r.ebr);
}

struct PanelRuns {
  std::vector<QueryRun> runs;
};

PanelRuns run_panel(const FingerprintBundle& bundle, std::span<const Suspect> panel,
                    const ImageDataset& queries, std::uint64_t seed) {
  PanelRuns out;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    out.runs.push_back(run_queries(bundle, *panel[i].oracle, queries,
                                   derived_seed(seed, "panel", i)));
  }
  return out;
}

std::vector<Suspect> load_all(std::span<const fs::path> paths, int image_size) {
  std::vector<Suspect> out;
  for (const auto& p : paths) out.push_back(load_suspect(p, image_size));
  return out;
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(8);
  os << v;
  return os.str();
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IncompatibleOracleError*>(&e)) return kExitIncompatible;
  if (dynamic_cast<const TrainingError*>(&e) || dynamic_cast<const CalibrationError*>(&e) ||
      dynamic_cast<const NumericError*>(&e)) {
    return kExitTraining;
  }
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InputError*>(&e) ||
      dynamic_cast<const FormatError*>(&e) || dynamic_cast<const Json::exception*>(&e)) {
    return kExitConfig;
  }
  return kExitUnexpected;
}

// ---------------------------------------------------------------- config

void DatasetConfig::validate() const {
  if (kind == "synth") {
    if (n < 1) throw ConfigError("dataset.n must be >= 1");
    if (layout.image_size < 8) throw ConfigError("dataset.image_size must be >= 8");
  } else if (kind == "raw") {
    if (path.empty()) throw ConfigError("dataset.path is required for raw datasets");
    if (n < 0) throw ConfigError("dataset.n must be >= 0");
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
}

Json DatasetConfig::to_json() const {
  Json j = {{"kind", kind},
            {"image_size", layout.image_size},
            {"n", n}};
  if (kind == "synth") {
    j["seed"] = seed;
  } else {
    j["path"] = path.string();
    j["channel_order"] = to_string(layout.channel_order);
    j["label_byte"] = layout.label_byte;
  }
  return j;
}

DatasetConfig DatasetConfig::from_json(const Json& j) {
  check_keys(j, {"kind", "path", "image_size", "channel_order", "label_byte", "seed", "n"},
             "dataset");
  DatasetConfig d;
  d.kind = j.value("kind", d.kind);
  d.path = j.value("path", std::string());
  d.layout.image_size = j.value("image_size", d.layout.image_size);
  if (j.contains("channel_order")) {
    d.layout.channel_order = parse_channel_order(j.at("channel_order").get<std::string>());
  }
  d.layout.label_byte = j.value("label_byte", d.layout.label_byte);
  d.seed = j.value("seed", d.seed);
  d.n = j.value("n", d.kind == "raw" ? 0 : d.n);
  d.validate();
  return d;
}

ImageDataset DatasetConfig::load() const {
  validate();
  if (kind == "synth") return synth_dataset(seed, n, layout.image_size);
  if (!fs::exists(path)) throw ConfigError("dataset file not found: " + path.string());
  ImageDataset data = load_image_dataset(path, layout);
  if (n > 0 && static_cast<std::size_t>(n) < data.size()) data = data.head(n);
  return data;
}

std::string DatasetConfig::tag() const {
  if (kind == "synth") {
    return "synth:" + std::to_string(seed) + ":" + std::to_string(n) + ":" +
           std::to_string(layout.image_size);
  }
  return "raw:" + path.filename().string();
}

void QueryConfig::validate() const {
  if (queries < 1) throw ConfigError("verify.queries must be >= 1");
  if (!(significance > 0 && significance < 1)) {
    throw ConfigError("verify.significance must be in (0, 1)");
  }
  if (threshold && !(*threshold > 0 && *threshold < 1)) {
    throw ConfigError("verify.threshold must be in (0, 1)");
  }
  if (holdout < 1) throw ConfigError("verify.holdout must be >= 1");
}

Json QueryConfig::to_json() const {
  Json j = {{"queries", queries},
            {"significance", significance},
            {"disjoint", disjoint},
            {"holdout", holdout}};
  j["threshold"] = threshold ? Json(*threshold) : Json(nullptr);
  return j;
}

QueryConfig QueryConfig::from_json(const Json& j) {
  check_keys(j, {"queries", "threshold", "significance", "disjoint", "holdout"}, "verify");
  QueryConfig q;
  q.queries = j.value("queries", q.queries);
  if (j.contains("threshold") && !j.at("threshold").is_null()) {
    q.threshold = j.at("threshold").get<double>();
  }
  q.significance = j.value("significance", q.significance);
  q.disjoint = j.value("disjoint", q.disjoint);
  q.holdout = j.value("holdout", q.holdout);
  q.validate();
  return q;
}

RunConfig::RunConfig() {
  other_dataset.seed = 8;
  fingerprint.batch_size = 64;
}

void RunConfig::validate() const {
  dataset.validate();
  other_dataset.validate();
  encoder.validate();
  fingerprint.validate();
  verify.validate();
  if (fingerprint.secret_len < 1) throw ConfigError("fingerprint.secret_len must be >= 1");
  if (ssl.epochs < 0 || ssl.batch_size < 2) throw ConfigError("ssl needs epochs >= 0, batch >= 2");
  if (extract.epochs < 0 || extract.batch_size < 1) throw ConfigError("bad extract section");
  if (finetune.epochs < 0 || finetune.batch_size < 2) throw ConfigError("bad finetune section");
  if (!(prune_rate >= 0 && prune_rate < 1)) throw ConfigError("prune_rate must be in [0, 1)");
  if (!(noise_eps >= 0)) throw ConfigError("noise_eps must be >= 0");
  if (!(shuffle_fraction >= 0 && shuffle_fraction <= 1)) {
    throw ConfigError("shuffle_fraction must be in [0, 1]");
  }
}

Json RunConfig::to_json() const {
  Json fp = fingerprint.to_json();
  fp.erase("seed");
  Json ssl_j = ssl.to_json();
  ssl_j.erase("seed");
  Json ex = extract.to_json();
  ex.erase("seed");
  Json ft = finetune.to_json();
  ft.erase("seed");
  return {{"seed", seed},
          {"dataset", dataset.to_json()},
          {"other_dataset", other_dataset.to_json()},
          {"encoder", encoder.to_json()},
          {"ssl", ssl_j},
          {"fingerprint", fp},
          {"verify", verify.to_json()},
          {"extract", ex},
          {"finetune", ft},
          {"prune_rate", prune_rate},
          {"noise_eps", noise_eps},
          {"shuffle_fraction", shuffle_fraction},
          {"out_dir", out_dir.string()}};
}

RunConfig RunConfig::from_json(const Json& j) {
  check_keys(j,
             {"seed", "dataset", "other_dataset", "encoder", "ssl", "fingerprint", "verify",
              "extract", "finetune", "prune_rate", "noise_eps", "shuffle_fraction", "out_dir"},
             "config");
  RunConfig c;
  if (j.contains("dataset")) c.dataset = DatasetConfig::from_json(j.at("dataset"));
  if (j.contains("other_dataset")) {
    c.other_dataset = DatasetConfig::from_json(j.at("other_dataset"));
  }
  if (j.contains("encoder")) {
    check_keys(j.at("encoder"), {"arch", "embed_dim", "activation", "width"}, "encoder");
    c.encoder = EncoderSpec::from_json(j.at("encoder"));
  }
  if (j.contains("ssl")) c.ssl = ssl_from_json(j.at("ssl"), c.ssl);
  if (j.contains("fingerprint")) {
    check_keys(j.at("fingerprint"),
               {"alpha", "secret_len", "epochs", "batch_size", "lr", "stop_ebr", "width",
                "warmup_epochs", "fca", "direction"},
               "fingerprint");
    c.fingerprint = TrainConfig::from_json(j.at("fingerprint"));
  }
  if (j.contains("verify")) c.verify = QueryConfig::from_json(j.at("verify"));
  if (j.contains("extract")) c.extract = extract_from_json(j.at("extract"), c.extract);
  if (j.contains("finetune")) c.finetune = finetune_from_json(j.at("finetune"), c.finetune);
  c.prune_rate = j.value("prune_rate", c.prune_rate);
  c.noise_eps = j.value("noise_eps", c.noise_eps);
  c.shuffle_fraction = j.value("shuffle_fraction", c.shuffle_fraction);
  c.out_dir = j.value("out_dir", c.out_dir.string());
  c.apply_seed(j.value("seed", std::uint64_t{0}));
  c.validate();
  return c;
}

void RunConfig::apply_seed(std::uint64_t master) {
  seed = master;
  ssl.seed = master;
  fingerprint.seed = master;
  extract.seed = master;
  finetune.seed = master;
}

RunConfig load_run_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  Json j = Json::object();
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    const auto bytes = read_file_bytes(path);
    try {
      j = Json::parse(bytes.begin(), bytes.end());
    } catch (const Json::exception& e) {
      throw ConfigError("config " + path.string() + ": " + e.what());
    }
  }
  RunConfig cfg = RunConfig::from_json(j);
  if (const char* env = std::getenv("SG_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError(std::string("SG_SEED is not an integer: ") + env);
    cfg.apply_seed(v);
  }
  if (seed_override) cfg.apply_seed(*seed_override);
  return cfg;
}

// ---------------------------------------------------------- run directory

RunDirectory::RunDirectory(const fs::path& base, const Json& identity,
                           const std::optional<fs::path>& fixed) {
  if (fixed) {
    root_ = *fixed;
  } else {
    root_ = base / (utc_stamp("%Y%m%dT%H%M%SZ") + "-" + sha256_hex(identity.dump()).substr(0, 12));
  }
  for (const char* sub : {"weights", "bundles", "reports", "csv"}) {
    fs::create_directories(root_ / sub);
  }
}

void RunDirectory::add_input(const fs::path& path) {
  inputs_[path.filename().string()] = file_sha256(path);
}

void RunDirectory::add_output(const fs::path& path, const std::optional<std::string>& digest) {
  const std::string rel = fs::relative(path, root_).generic_string();
  outputs_[rel] = digest ? *digest : file_sha256(path);
}

void RunDirectory::write_manifest(const std::string& command, const Json& args,
                                  const RunConfig& config) {
  Json cfg = config.to_json();
  cfg.erase("out_dir");
  const Json manifest = {{"tool", "stegguard"},
                         {"manifest_version", 1},
                         {"command", command},
                         {"args", args},
                         {"seed", config.seed},
                         {"config", cfg},
                         {"inputs", inputs_},
                         {"outputs", outputs_},
                         {"created_at", utc_stamp("%Y-%m-%dT%H:%M:%SZ")}};
  write_text(root_ / "manifest.json", manifest.dump(2) + "\n");
}

std::string manifest_digest(const fs::path& manifest_path) {
  const auto bytes = read_file_bytes(manifest_path);
  Json j = Json::parse(bytes.begin(), bytes.end());
  j.erase("created_at");
  return sha256_hex(j.dump());
}

void write_curve_csv(const fs::path& path, std::span<const EpochRecord> curve) {
  std::string out = "epoch,loss_secret,loss_image,total,ebr_proxy,ebr\n";
  for (const auto& r : curve) {
    out += std::to_string(r.epoch) + "," + csv_number(r.loss_secret) + "," +
           csv_number(r.loss_image) + "," + csv_number(r.total) + "," +
           csv_number(r.loss_secret) + "," + csv_number(r.ebr) + "\n";
  }
  write_text(path, out);
}

std::shared_ptr<EncoderOracle> open_suspect(const fs::path& path, int image_size) {
  return load_suspect(path, image_size).oracle;
}

// --------------------------------------------------------------- commands

int cmd_pretrain(const CommandOptions& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  if (options.role != "victim" && options.role != "independent") {
    throw ConfigError("role must be victim or independent");
  }
  const ImageDataset data = cfg.dataset.load();
  Encoder encoder = Encoder::build(cfg.encoder, cfg.seed);
  const Json args = {{"role", options.role}};
  RunDirectory run(cfg.out_dir, {{"command", "pretrain"}, {"args", args}, {"config", cfg.to_json()}},
                   options.out);
  const SslLog log = pretrain_ssl(encoder, data, cfg.ssl);
  encoder.set_provenance(options.role, encoder.provenance().config);

  const fs::path weights = run.weights() / "encoder.sgw";
  save_encoder(encoder, weights);
  run.add_output(weights);
  std::string csv = "epoch,loss\n";
  for (std::size_t i = 0; i < log.epoch_loss.size(); ++i) {
    csv += std::to_string(i + 1) + "," + csv_number(log.epoch_loss[i]) + "\n";
  }
  write_text(run.csv() / "ssl_curve.csv", csv);
  run.add_output(run.csv() / "ssl_curve.csv");
  run.write_manifest("pretrain", args, cfg);
  print_line(weights.string());
  return kExitOk;
}

int cmd_fingerprint(const CommandOptions& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  if (options.victim.empty()) throw ConfigError("fingerprint needs --victim");
  const Encoder victim = load_encoder(options.victim);
  const ImageDataset data = cfg.dataset.load();
  const ImageDataset queries =
      query_set(cfg, data, std::min<std::size_t>(cfg.verify.queries, data.size() / 4));
  const Json args = {{"victim", options.victim.filename().string()}};
  RunDirectory run(cfg.out_dir,
                   {{"command", "fingerprint"}, {"args", args}, {"config", cfg.to_json()}},
                   options.out);
  run.add_input(options.victim);

  TrainOptions train_opts;
  train_opts.on_epoch = log_epoch;
  const FingerprintBundle bundle = train_fingerprint(victim, data, cfg.fingerprint, train_opts);
  const fs::path bundle_path = run.bundles() / "fingerprint.sgf";
  save_bundle(bundle, bundle_path);
  run.add_output(bundle_path);
  write_curve_csv(run.csv() / "fingerprint_curve.csv", bundle.curve());
  run.add_output(run.csv() / "fingerprint_curve.csv");

  auto oracle = make_oracle(std::make_shared<const Encoder>(victim), data.image_size, "victim");
  const QueryRun check = run_queries(bundle, *oracle, queries, derived_seed(cfg.seed, "self-check"));
  const Quality q = stego_quality(bundle, queries, cfg.seed);
  const Json summary = {{"bundle_digest", bundle.digest()},
                        {"victim_digest", bundle.victim_digest()},
                        {"epochs_trained", bundle.curve().size()},
                        {"train_ebr", bundle.curve().empty() ? 0.5 : bundle.curve().back().ebr},
                        {"victim_query_ebr", check.ebr()},
                        {"queries", queries.size()},
                        {"psnr", q.psnr},
                        {"ssim", q.ssim}};
  write_text(run.reports() / "fingerprint.json", summary.dump(2) + "\n");
  run.add_output(run.reports() / "fingerprint.json");
  run.write_manifest("fingerprint", args, cfg);
  print_line(bundle_path.string());
  return kExitOk;
}

int cmd_attack(const CommandOptions& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  const std::string& kind = options.attack;
  const bool wrapper = kind == "noise" || kind == "shuffle";
  const bool finetuning = kind == "ft-same" || kind == "ft-other" || kind == "ftal" || kind == "rtal";
  if (!wrapper && !finetuning && kind != "extract" && kind != "prune") {
    throw ConfigError("unknown attack '" + kind + "'");
  }
  if (options.victim.empty()) throw ConfigError("attack needs --victim");
  const auto victim = std::make_shared<const Encoder>(load_encoder(options.victim));
  Json args = {{"attack", kind}, {"victim", options.victim.filename().string()}};
  if (options.param) args["param"] = *options.param;
  if (options.epochs) args["epochs"] = *options.epochs;

  if (wrapper) {
    const double param = options.param.value_or(kind == "noise" ? cfg.noise_eps : cfg.shuffle_fraction);
    WrapperDescriptor desc{kind, fs::absolute(options.victim).string(), param,
                           derived_seed(cfg.seed, "attack-" + kind)};
    open_wrapper(desc, make_oracle(victim, cfg.dataset.layout.image_size, "victim"));
    RunDirectory run(cfg.out_dir, {{"command", "attack"}, {"args", args}, {"config", cfg.to_json()}},
                     options.out);
    run.add_input(options.victim);
    const fs::path out = run.weights() / (kind + ".wrapper.json");
    // Relative to the descriptor, so reruns in other directories match byte for byte.
    WrapperDescriptor portable = desc;
    portable.inner = fs::relative(fs::absolute(options.victim), fs::absolute(run.weights())).string();
    write_text(out, portable.to_json().dump(2) + "\n");
    run.add_output(out);
    run.write_manifest("attack", args, cfg);
    print_line(out.string());
    return kExitOk;
  }

  Encoder result = *victim;
  if (kind == "prune") {
    const double rate = options.param.value_or(cfg.prune_rate);
    if (!(rate >= 0 && rate < 1)) throw ConfigError("prune rate must be in [0, 1)");
    RunDirectory run(cfg.out_dir, {{"command", "attack"}, {"args", args}, {"config", cfg.to_json()}},
                     options.out);
    run.add_input(options.victim);
    result = prune(*victim, rate);
    const fs::path out = run.weights() / "prune.sgw";
    save_encoder(result, out);
    run.add_output(out);
    run.write_manifest("attack", args, cfg);
    print_line(out.string());
    return kExitOk;
  }

  if (kind == "extract") {
    const ImageDataset surrogate = cfg.other_dataset.load();
    ExtractConfig ec = cfg.extract;
    if (options.epochs) ec.epochs = *options.epochs;
    EncoderSpec spec = cfg.encoder;
    spec.embed_dim = victim->embed_dim();
    RunDirectory run(cfg.out_dir, {{"command", "attack"}, {"args", args}, {"config", cfg.to_json()}},
                     options.out);
    run.add_input(options.victim);
    auto oracle = make_oracle(victim, surrogate.image_size, "victim");
    result = extract_model(*oracle, spec, surrogate, ec);
    const fs::path out = run.weights() / "extract.sgw";
    save_encoder(result, out);
    run.add_output(out);
    run.write_manifest("attack", args, cfg);
    print_line(out.string());
    return kExitOk;
  }

  FinetuneConfig fc = cfg.finetune;
  fc.mode = parse_finetune_mode(kind);
  if (options.epochs) fc.epochs = *options.epochs;
  const ImageDataset data = fc.mode == FinetuneMode::kOther ? cfg.other_dataset.load()
                                                            : cfg.dataset.load();
  RunDirectory run(cfg.out_dir, {{"command", "attack"}, {"args", args}, {"config", cfg.to_json()}},
                   options.out);
  run.add_input(options.victim);
  result = finetune(*victim, data, fc);
  const fs::path out = run.weights() / (kind + ".sgw");
  save_encoder(result, out);
  run.add_output(out);
  run.write_manifest("attack", args, cfg);
  print_line(out.string());
  return kExitOk;
}

int cmd_verify(const CommandOptions& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  if (options.bundle.empty()) throw ConfigError("verify needs --bundle");
  if (options.suspects.empty()) throw ConfigError("verify needs at least one --suspect");
  const FingerprintBundle bundle = load_bundle(options.bundle);
  const ImageDataset data = cfg.dataset.load();
  const std::size_t n = static_cast<std::size_t>(cfg.verify.queries);
  if (!cfg.verify.disjoint && 4 * n > data.size()) {
    throw ConfigError("query set must be at most a quarter of the fingerprint set");
  }
  const ImageDataset queries = query_set(cfg, data, n);
  const std::vector<Suspect> suspects = load_all(options.suspects, bundle.image_size());
  const std::vector<Suspect> panel = load_all(options.panel, bundle.image_size());
  IndependentPanel ip;
  for (const auto& m : panel) {
    ip.members.push_back(m.oracle);
    ip.digests.push_back(m.digest);
  }
  if (!panel.empty()) ip.validate(bundle.victim_digest(), 1);

  Json args = {{"bundle", options.bundle.filename().string()}};
  for (const auto& s : options.suspects) args["suspects"].push_back(s.filename().string());
  for (const auto& p : options.panel) args["panel"].push_back(p.filename().string());
  if (!options.victim.empty()) args["victim"] = options.victim.filename().string();
  RunDirectory run(cfg.out_dir, {{"command", "verify"}, {"args", args}, {"config", cfg.to_json()}},
                   options.out);
  run.add_input(options.bundle);
  for (const auto& s : options.suspects) run.add_input(s);
  for (const auto& p : options.panel) run.add_input(p);

  double threshold = 0;
  if (cfg.verify.threshold) {
    threshold = *cfg.verify.threshold;
  } else {
    if (options.victim.empty() || panel.empty()) {
      throw ConfigError("calibration needs --victim and --panel (or set verify.threshold)");
    }
    run.add_input(options.victim);
    auto victim = make_oracle(std::make_shared<const Encoder>(load_encoder(options.victim)),
                              bundle.image_size(), "victim");
    const ImageDataset holdout = sample_query_set(
        data, std::min<std::size_t>(cfg.verify.holdout, data.size()),
        derived_seed(cfg.seed, "holdout"));
    const Calibration cal = calibrate_threshold(bundle, *victim, ip, holdout,
                                                derived_seed(cfg.seed, "calibrate"));
    threshold = cal.threshold;
    const Json cj = {{"victim_ebr", cal.victim_ebr}, {"panel_ebr", cal.panel_ebr},
                     {"threshold", cal.threshold}, {"holdout", holdout.size()}};
    write_text(run.reports() / "calibration.json", cj.dump(2) + "\n");
    run.add_output(run.reports() / "calibration.json");
  }

  const PanelRuns pr = run_panel(bundle, panel, queries, derived_seed(cfg.seed, "panel-runs"));
  bool any_piracy = false;
  for (std::size_t i = 0; i < suspects.size(); ++i) {
    VerifyOptions vo;
    vo.threshold = threshold;
    vo.significance = cfg.verify.significance;
    vo.seed = derived_seed(cfg.seed, "suspect", i);
    vo.panel_runs = pr.runs;
    const VerificationReport report = verify(bundle, *suspects[i].oracle, queries, vo);
    any_piracy = any_piracy || report.verdict == Verdict::kPiracy;
    char name[24];
    std::snprintf(name, sizeof name, "%02zu-", i);
    const fs::path out = run.reports() / (name + options.suspects[i].stem().string() + ".json");
    write_text(out, report.to_json(true).dump(2) + "\n");
    run.add_output(out, sha256_hex(report.to_json(false).dump()));
    std::string line = options.suspects[i].string() + ": ebr " + csv_number(report.ebr) +
                       " T " + csv_number(threshold) + " -> " + to_string(report.verdict);
    if (report.p_value) line += " (p " + csv_number(*report.p_value) + ")";
    print_line(line);
  }
  run.write_manifest("verify", args, cfg);
  if (options.exit_verdict) return any_piracy ? kExitPiracy : kExitIndependent;
  return kExitOk;
}

int cmd_explain(const CommandOptions& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  if (options.bundle.empty()) throw ConfigError("explain needs --bundle");
  if (options.encoders.empty()) throw ConfigError("explain needs at least one --encoder");
  const FingerprintBundle bundle = load_bundle(options.bundle);
  const ImageDataset data = cfg.dataset.load();
  if (options.image_index < 0 || static_cast<std::size_t>(options.image_index) >= data.size()) {
    throw ConfigError("image index out of range");
  }
  std::vector<Encoder> encoders;
  for (const auto& p : options.encoders) encoders.push_back(load_encoder(p));
  for (const auto& e : encoders) parse_layer_tag(e, options.layer);

  Json args = {{"bundle", options.bundle.filename().string()},
               {"image_index", options.image_index},
               {"layer", options.layer}};
  for (const auto& p : options.encoders) args["encoders"].push_back(p.filename().string());
  RunDirectory run(cfg.out_dir, {{"command", "explain"}, {"args", args}, {"config", cfg.to_json()}},
                   options.out);
  run.add_input(options.bundle);
  for (const auto& p : options.encoders) run.add_input(p);

  const auto idx = static_cast<std::size_t>(options.image_index);
  const Tensor x = data.batch(idx, idx + 1);
  Rng rng(cfg.seed, "explain-secret");
  const Tensor xs = bundle.stego(x, gen_secret_batch(1, bundle.secret_len(), rng));
  Json summary = {{"image_id", data.items[idx].id()},
                  {"psnr", psnr(x, xs)},
                  {"ssim", ssim(x, xs)},
                  {"maps", Json::array()}};
  std::vector<HeatMap> maps;
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    maps.push_back(gradcam_stego(encoders[i], x, xs, options.layer));
    char name[24];
    std::snprintf(name, sizeof name, "%02zu-", i);
    const fs::path out = run.reports() / (name + options.encoders[i].stem().string() + ".pgm");
    write_heatmap(maps.back(), out);
    run.add_output(out);
    run.add_output(out.string() + ".json");
    Json entry = maps.back().sidecar();
    entry["encoder"] = options.encoders[i].filename().string();
    entry["iou_top10_vs_first"] = top_fraction_iou(maps.front(), maps.back(), 0.1);
    summary["maps"].push_back(entry);
  }
  write_text(run.reports() / "explain.json", summary.dump(2) + "\n");
  run.add_output(run.reports() / "explain.json");
  run.write_manifest("explain", args, cfg);
  print_line((run.reports() / "explain.json").string());
  return kExitOk;
}

int cmd_ablate(const CommandOptions& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  const std::string& axis = options.axis;
  if (std::find(kAblationAxes.begin(), kAblationAxes.end(), axis) == kAblationAxes.end()) {
    throw ConfigError("unknown ablation axis '" + axis + "'");
  }
  if (options.victim.empty()) throw ConfigError("ablate needs --victim");
  const auto victim = std::make_shared<const Encoder>(load_encoder(options.victim));
  const ImageDataset data = cfg.dataset.load();
  const std::vector<Suspect> panel = load_all(options.panel, data.image_size);
  IndependentPanel ip;
  for (const auto& m : panel) {
    ip.members.push_back(m.oracle);
    ip.digests.push_back(m.digest);
  }
  if (!panel.empty()) ip.validate(victim->provenance().digest, 1);
  if (axis == "query-count" && options.bundle.empty()) {
    throw ConfigError("the query-count axis needs --bundle");
  }

  Json args = {{"axis", axis}, {"victim", options.victim.filename().string()}};
  for (const auto& p : options.panel) args["panel"].push_back(p.filename().string());
  if (!options.bundle.empty()) args["bundle"] = options.bundle.filename().string();
  RunDirectory run(cfg.out_dir, {{"command", "ablate"}, {"args", args}, {"config", cfg.to_json()}},
                   options.out);
  run.add_input(options.victim);
  for (const auto& p : options.panel) run.add_input(p);
  if (!options.bundle.empty()) run.add_input(options.bundle);

  auto victim_oracle = make_oracle(victim, data.image_size, "victim");
  std::string csv = "axis,setting,ebr,psnr,ssim,p_value,delta_mu\n";
  Json rows = Json::array();
  auto record = [&](const std::string& setting, const FingerprintBundle& bundle,
                    const ImageDataset& queries, std::uint64_t seed) {
    const PanelRuns pr = run_panel(bundle, panel, queries, derived_seed(seed, "panel-runs"));
    const QueryRun vr = run_queries(bundle, *victim_oracle, queries, derived_seed(seed, "victim"));
    const Quality q = stego_quality(bundle, queries, seed);
    Json row = {{"setting", setting}, {"ebr", vr.ebr()}, {"psnr", q.psnr}, {"ssim", q.ssim},
                {"p_value", nullptr}, {"delta_mu", nullptr}};
    std::string p_text, d_text;
    if (!pr.runs.empty()) {
      const TTestResult t = ttest_piracy(vr, pr.runs);
      row["p_value"] = t.p_value;
      row["delta_mu"] = t.delta_mu;
      p_text = csv_number(t.p_value);
      d_text = csv_number(t.delta_mu);
    }
    csv += axis + "," + setting + "," + csv_number(vr.ebr()) + "," + csv_number(q.psnr) + "," +
           csv_number(q.ssim) + "," + p_text + "," + d_text + "\n";
    rows.push_back(row);
    std::fprintf(stderr, "%s %s: ebr %.4f psnr %.2f ssim %.3f\n", axis.c_str(), setting.c_str(),
                 vr.ebr(), q.psnr, q.ssim);
  };
  auto train = [&](const ImageDataset& d, TrainConfig tc) {
    TrainOptions to;
    to.on_epoch = log_epoch;
    return train_fingerprint(*victim, d, tc, to);
  };
  const std::size_t n = std::min<std::size_t>(cfg.verify.queries, data.size() / 4);

  if (axis == "secret-length") {
    const ImageDataset queries = query_set(cfg, data, n);
    for (int len : kSecretLengthSweep) {
      TrainConfig tc = cfg.fingerprint;
      tc.secret_len = len;
      record(std::to_string(len), train(data, tc), queries, cfg.seed);
    }
  } else if (axis == "train-size") {
    for (double frac : {0.25, 0.5, 1.0}) {
      const ImageDataset sub =
          data.head(std::max<std::size_t>(4, static_cast<std::size_t>(frac * data.size())));
      const ImageDataset queries = query_set(cfg, sub, std::min(n, sub.size() / 4));
      record(std::to_string(sub.size()), train(sub, cfg.fingerprint), queries, cfg.seed);
    }
  } else if (axis == "dataset") {
    for (const DatasetConfig* dc : {&cfg.dataset, &cfg.other_dataset}) {
      const ImageDataset d = dc->load();
      const ImageDataset queries = sample_query_set(d, std::min(n, d.size() / 4), cfg.seed);
      record(dc->tag(), train(d, cfg.fingerprint), queries, cfg.seed);
    }
  } else if (axis == "query-count") {
    const FingerprintBundle bundle = load_bundle(options.bundle);
    for (int q : {100, 250, 500, 1000}) {
      if (4 * static_cast<std::size_t>(q) > data.size()) continue;
      record(std::to_string(q), bundle, query_set(cfg, data, static_cast<std::size_t>(q)),
             cfg.seed);
    }
  } else {
    const ImageDataset queries = query_set(cfg, data, n);
    for (bool fca : {true, false}) {
      TrainConfig tc = cfg.fingerprint;
      tc.fca = fca;
      record(fca ? "with-fcaemb" : "without-fcaemb", train(data, tc), queries, cfg.seed);
    }
  }
  const fs::path csv_path = run.csv() / ("ablate-" + axis + ".csv");
  write_text(csv_path, csv);
  run.add_output(csv_path);
  const fs::path json_path = run.reports() / ("ablate-" + axis + ".json");
  write_text(json_path, Json({{"axis", axis}, {"rows", rows}}).dump(2) + "\n");
  run.add_output(json_path);
  run.write_manifest("ablate", args, cfg);
  print_line(csv_path.string());
  return kExitOk;
}

}  // namespace SG_REAL_NS
}  // namespace sg
