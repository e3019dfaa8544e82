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

#include "stegguard/oracle.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "stegguard/rng.hpp"

namespace sg {
inline namespace SG_REAL_NS {

Tensor EncoderOracle::embed(const Tensor& images) {
  if (images.c() != 3 || images.h() != image_size_ || images.w() != image_size_) {
    throw InputError("oracle " + tag_ + " expects (N,3," + std::to_string(image_size_) +
                     "," + std::to_string(image_size_) + ") images, got " +
                     images.shape_string());
  }
  const std::uint64_t first =
      queries_.fetch_add(static_cast<std::uint64_t>(images.n()));
  return do_embed(images, first);
}

NoisyOracle::NoisyOracle(std::shared_ptr<EncoderOracle> inner, double eps,
                         std::uint64_t seed)
    : EncoderOracle(inner->embed_dim(), inner->image_size(),
                    inner->tag() + "+noise(" + std::to_string(eps) + ")"),
      inner_(std::move(inner)),
      eps_(eps),
      seed_(seed) {
  if (eps < 0) throw ConfigError("noise scale must be >= 0");
}

Tensor NoisyOracle::do_embed(const Tensor& images, std::uint64_t first_query) {
  Tensor h = inner_->embed(images);
  if (eps_ == 0) return h;
  for (int b = 0; b < h.n(); ++b) {
    Rng rng(seed_, "noise", first_query + static_cast<std::uint64_t>(b));
    Real* row = h.sample(b);
    for (std::size_t j = 0; j < h.sample_size(); ++j) {
      row[j] += static_cast<Real>(eps_ * rng.normal());
    }
  }
  return h;
}

ShuffledOracle::ShuffledOracle(std::shared_ptr<EncoderOracle> inner, double fraction,
                               std::uint64_t seed)
    : EncoderOracle(inner->embed_dim(), inner->image_size(),
                    inner->tag() + "+shuffle(" + std::to_string(fraction) + ")"),
      inner_(std::move(inner)),
      fraction_(fraction),
      seed_(seed) {
  if (fraction < 0 || fraction > 1) throw ConfigError("shuffle fraction must be in [0,1]");
}

Tensor ShuffledOracle::do_embed(const Tensor& images, std::uint64_t first_query) {
  Tensor h = inner_->embed(images);
  const std::size_t d = h.sample_size();
  const auto m = static_cast<std::size_t>(std::ceil(fraction_ * static_cast<double>(d) - 1e-9));
  if (m < 2) return h;
  std::vector<std::size_t> coords(d);
  std::vector<std::size_t> perm(m);
  std::vector<Real> values(m);
  for (int b = 0; b < h.n(); ++b) {
    Rng rng(seed_, "shuffle", first_query + static_cast<std::uint64_t>(b));
    std::iota(coords.begin(), coords.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(coords[i], coords[i + rng.below(d - i)]);
    }
    bool identity = true;
    while (identity) {
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
      for (std::size_t i = 0; i < m && identity; ++i) identity = perm[i] == i;
    }
    Real* row = h.sample(b);
    for (std::size_t i = 0; i < m; ++i) values[i] = row[coords[perm[i]]];
    for (std::size_t i = 0; i < m; ++i) row[coords[i]] = values[i];
  }
  return h;
}

}  // namespace SG_REAL_NS
}  // namespace sg
