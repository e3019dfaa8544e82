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


#include "stegguard/verifier.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

constexpr int kQueryBatch = 64;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double compute_ebr(const Tensor& embedded, const Tensor& extracted) {
  if (!embedded.same_shape(extracted) || embedded.empty()) {
    throw InputError("secret batches differ in shape: " + embedded.shape_string() + " vs " +
                     extracted.shape_string());
  }
  std::size_t diff = 0;
  for (std::size_t i = 0; i < embedded.size(); ++i) diff += embedded[i] != extracted[i];
  return static_cast<double>(diff) / static_cast<double>(embedded.size());
}

double agreement_statistic(int matched, int secret_len) {
  return std::log((matched + 1.0) / (secret_len - matched + 1.0));
}

double QueryRun::ebr() const {
  if (records.empty()) throw InputError("empty query run");
  std::size_t wrong = 0;
  for (const auto& r : records) wrong += static_cast<std::size_t>(secret_len - r.matched);
  return static_cast<double>(wrong) / (static_cast<double>(records.size()) * secret_len);
}

std::vector<double> QueryRun::statistics() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const int agree = direction == Direction::kForward ? r.matched : secret_len - r.matched;
    out.push_back(agreement_statistic(agree, secret_len));
  }
  return out;
}

QueryRun run_queries(const FingerprintBundle& bundle, EncoderOracle& suspect,
                     const ImageDataset& queries, std::uint64_t seed) {
  if (suspect.embed_dim() != bundle.embed_dim()) {
    throw IncompatibleOracleError("suspect " + suspect.tag() + " returns embeddings of width " +
                                  std::to_string(suspect.embed_dim()) +
                                  ", the fingerprint expects " +
                                  std::to_string(bundle.embed_dim()));
  }
  if (queries.empty()) throw InputError("query set is empty");
  const int len = bundle.secret_len();
  QueryRun run;
  run.suspect_tag = suspect.tag();
  run.bundle_digest = bundle.digest();
  run.secret_len = len;
  run.direction = bundle.config().direction;
  Rng rng(seed, "verify-secrets");
  for (std::size_t start = 0; start < queries.size(); start += kQueryBatch) {
    const std::size_t end = std::min(queries.size(), start + kQueryBatch);
    const Tensor x = queries.batch(start, end);
    const Tensor k = gen_secret_batch(x.n(), len, rng);
    const Tensor logits = bundle.extract(suspect.embed(bundle.stego(x, k)));
    const Tensor bits = binarize(logits);
    for (int b = 0; b < x.n(); ++b) {
      QueryRecord rec;
      rec.image_id = queries.items[start + static_cast<std::size_t>(b)].id();
      rec.secret.assign(k.sample(b), k.sample(b) + len);
      rec.logits.assign(logits.sample(b), logits.sample(b) + len);
      rec.bits.assign(bits.sample(b), bits.sample(b) + len);
      for (int i = 0; i < len; ++i) rec.matched += rec.bits[i] == rec.secret[i];
      run.records.push_back(std::move(rec));
    }
  }
  return run;
}

TTestResult welch_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("t-test needs at least 2 samples per side");
  TTestResult r;
  const double ma = mean(a), mb = mean(b);
  r.delta_mu = ma - mb;
  const double sa = sample_variance(a, ma) / static_cast<double>(a.size());
  const double sb = sample_variance(b, mb) / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (!(se2 > 0)) {
    r.p_value = ma > mb ? 0.0 : 1.0;
    r.t = ma > mb ? std::numeric_limits<double>::infinity()
                  : (ma < mb ? -std::numeric_limits<double>::infinity() : 0.0);
    return r;
  }
  r.t = r.delta_mu / std::sqrt(se2);
  r.dof = se2 * se2 /
          (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

TTestResult ttest_piracy(const QueryRun& suspect, std::span<const QueryRun> panel) {
  if (panel.empty()) throw ConfigError("t-test needs at least one independent run");
  std::vector<double> pooled;
  for (const auto& run : panel) {
    const auto s = run.statistics();
    pooled.insert(pooled.end(), s.begin(), s.end());
  }
  const auto omega = suspect.statistics();
  return welch_greater(omega, pooled);
}

std::string to_string(Verdict v) { return v == Verdict::kPiracy ? "piracy" : "independent"; }

Json VerificationReport::to_json(bool include_timestamp) const {
  Json j = {{"bundle_digest", bundle_digest},
            {"suspect_tag", suspect_tag},
            {"N", n},
            {"L", secret_len},
            {"ebr", ebr},
            {"T", threshold},
            {"verdict", to_string(verdict)},
            {"p_value", p_value ? Json(*p_value) : Json(nullptr)},
            {"delta_mu", delta_mu ? Json(*delta_mu) : Json(nullptr)},
            {"significance", significance},
            {"seed", seed},
            {"query_ids", query_ids},
            {"notes", notes}};
  if (include_timestamp) j["created_at"] = created_at;
  return j;
}

Verdict decide(double ebr, double threshold, Direction direction) {
  const bool piracy =
      direction == Direction::kForward ? ebr < threshold : ebr > 1.0 - threshold;
  return piracy ? Verdict::kPiracy : Verdict::kIndependent;
}

VerificationReport verify(const FingerprintBundle& bundle, EncoderOracle& suspect,
                          const ImageDataset& queries, const VerifyOptions& options,
                          QueryRun* run_out) {
  if (!(options.significance > 0 && options.significance < 1)) {
    throw ConfigError("significance must be in (0, 1)");
  }
  QueryRun run = run_queries(bundle, suspect, queries, options.seed);
  VerificationReport rep;
  rep.bundle_digest = run.bundle_digest;
  rep.suspect_tag = run.suspect_tag;
  rep.n = static_cast<int>(run.size());
  rep.secret_len = run.secret_len;
  rep.ebr = run.ebr();
  rep.threshold = options.threshold;
  rep.verdict = decide(rep.ebr, options.threshold, bundle.config().direction);
  rep.significance = options.significance;
  rep.seed = options.seed;
  for (const auto& r : run.records) rep.query_ids.push_back(r.image_id);
  if (!options.panel_runs.empty()) {
    const auto t = ttest_piracy(run, options.panel_runs);
    rep.p_value = t.p_value;
    rep.delta_mu = t.delta_mu;
    rep.notes.push_back(t.p_value < options.significance ? "t-test supports piracy"
                                                         : "t-test does not support piracy");
  }
  if (rep.n < 1000) {
    rep.notes.push_back("reduced query budget: " + std::to_string(rep.n) + " queries");
  }
  rep.created_at = utc_now();
  if (run_out) *run_out = std::move(run);
  return rep;
}

void IndependentPanel::validate(const std::string& victim_digest,
                                std::size_t min_members) const {
  if (members.size() < min_members) {
    throw ConfigError("independent panel needs at least " + std::to_string(min_members) +
                      " members");
  }
  if (digests.size() != members.size()) {
    throw ConfigError("every panel member needs a provenance digest");
  }
  for (const auto& d : digests) {
    if (d == victim_digest) throw ConfigError("panel member shares the victim's provenance");
  }
}

double threshold_from_rates(double victim_ebr, std::span<const double> panel_ebr) {
  if (panel_ebr.empty()) throw CalibrationError("no panel rates to calibrate against");
  const double floor = *std::min_element(panel_ebr.begin(), panel_ebr.end());
  if (victim_ebr >= floor) {
    throw CalibrationError("victim ebr " + std::to_string(victim_ebr) +
                           " is not below the panel minimum " + std::to_string(floor) +
                           "; the fingerprint cannot separate them");
  }
  return std::clamp(0.5 * (victim_ebr + floor), 0.05, 0.45);
}

Calibration calibrate_threshold(const FingerprintBundle& bundle, EncoderOracle& victim,
                                const IndependentPanel& panel, const ImageDataset& holdout,
                                std::uint64_t seed) {
  panel.validate(bundle.victim_digest());
  const bool reverse = bundle.config().direction == Direction::kReverse;
  auto rate = [&](EncoderOracle& o) {
    const double e = run_queries(bundle, o, holdout, seed).ebr();
    return reverse ? 1.0 - e : e;
  };
  Calibration c;
  c.victim_ebr = rate(victim);
  for (const auto& m : panel.members) c.panel_ebr.push_back(rate(*m));
  c.threshold = threshold_from_rates(c.victim_ebr, c.panel_ebr);
  return c;
}

}  // namespace SG_REAL_NS
}  // namespace sg
