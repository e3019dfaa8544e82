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

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stegguard/fingerprint.hpp"
#include "stegguard/oracle.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// Fraction of differing positions between two (N, L) bit batches.
double compute_ebr(const Tensor& embedded, const Tensor& extracted);

struct QueryRecord {
  int image_id = 0;
  std::vector<Real> secret;
  std::vector<Real> logits;
  std::vector<Real> bits;
  int matched = 0;  // c_j, bits equal to the secret
};

struct QueryRun {
  std::string suspect_tag;
  std::string bundle_digest;
  int secret_len = 0;
  Direction direction = Direction::kForward;
  std::vector<QueryRecord> records;

  std::size_t size() const { return records.size(); }
  double ebr() const;
  // s_j = log((c_j + 1) / (L - c_j + 1)) per query, where c_j counts
  // agreement with the training target (the complement for reverse bundles).
  std::vector<double> statistics() const;
};

double agreement_statistic(int matched, int secret_len);

// One fresh secret per query image (stream keyed by `seed`), one suspect
// query per image. A suspect whose width differs from the extractor raises
// IncompatibleOracleError before any query is issued.
QueryRun run_queries(const FingerprintBundle& bundle, EncoderOracle& suspect,
                     const ImageDataset& queries, std::uint64_t seed);

struct TTestResult {
  double p_value = 1.0;
  double delta_mu = 0.0;
  double t = 0.0;
  double dof = 0.0;
};

// One-sided Welch test of mean(a) > mean(b). When both samples have zero
// variance, p is 0 if mean(a) > mean(b) and 1 otherwise.
TTestResult welch_greater(std::span<const double> a, std::span<const double> b);

// Tests whether the suspect agrees with the secrets more than the pooled
// independent panel does.
TTestResult ttest_piracy(const QueryRun& suspect, std::span<const QueryRun> panel);

enum class Verdict { kPiracy, kIndependent };
std::string to_string(Verdict v);

struct VerificationReport {
  std::string bundle_digest;
  std::string suspect_tag;
  int n = 0;
  int secret_len = 0;
  double ebr = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::kIndependent;
  std::optional<double> p_value;
  std::optional<double> delta_mu;
  double significance = 0.05;
  std::uint64_t seed = 0;
  std::vector<int> query_ids;
  std::vector<std::string> notes;
  std::string created_at;

  // Without `created_at` the JSON is a pure function of the inputs.
  Json to_json(bool include_timestamp = true) const;
};

// Piracy iff ebr < T (forward bundles) or ebr > 1 - T (reverse bundles).
Verdict decide(double ebr, double threshold, Direction direction);

struct VerifyOptions {
  double threshold = 0.3;
  double significance = 0.05;
  std::uint64_t seed = 0;
  // Runs of independent encoders on fresh secrets; enables the t-test.
  std::span<const QueryRun> panel_runs;
};

VerificationReport verify(const FingerprintBundle& bundle, EncoderOracle& suspect,
                          const ImageDataset& queries, const VerifyOptions& options,
                          QueryRun* run_out = nullptr);

// Independent encoders used as the null population. No member may share the
// victim's provenance digest.
struct IndependentPanel {
  std::vector<std::shared_ptr<EncoderOracle>> members;
  std::vector<std::string> digests;

  void validate(const std::string& victim_digest, std::size_t min_members = 1) const;
};

struct Calibration {
  double victim_ebr = 0.0;
  std::vector<double> panel_ebr;
  double threshold = 0.0;
};

// T = midpoint of the victim ebr and the smallest panel ebr, clipped to
// [0.05, 0.45]. Throws CalibrationError when the victim is not below every
// panel member.
double threshold_from_rates(double victim_ebr, std::span<const double> panel_ebr);
Calibration calibrate_threshold(const FingerprintBundle& bundle, EncoderOracle& victim,
                                const IndependentPanel& panel, const ImageDataset& holdout,
                                std::uint64_t seed);

}  // namespace SG_REAL_NS
}  // namespace sg
