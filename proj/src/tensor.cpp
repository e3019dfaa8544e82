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

#include "stegguard/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sg {
inline namespace SG_REAL_NS {

Tensor::Tensor(int n, int c, int h, int w, Real fill)
    : shape_{n, c, h, w},
      data_(static_cast<std::size_t>(n) * c * h * w, fill) {
  if (n < 0 || c < 0 || h < 0 || w < 0) {
    throw InputError("negative tensor dimension");
  }
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << "(" << shape_[0] << "," << shape_[1] << "," << shape_[2] << ","
     << shape_[3] << ")";
  return os.str();
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) {
    throw InputError("tensor add shape mismatch " + shape_string() + " vs " +
                     other.shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(Real s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Tensor Tensor::slice(int begin, int end) const {
  if (begin < 0 || end > n() || begin > end) {
    throw InputError("tensor slice out of range");
  }
  Tensor out(end - begin, c(), h(), w());
  std::copy(sample(begin), sample(begin) + out.size(), out.data());
  return out;
}

Tensor Tensor::reshaped(int n, int c, int h, int w) const {
  Tensor out;
  out.shape_ = {n, c, h, w};
  if (static_cast<std::size_t>(n) * c * h * w != data_.size()) {
    throw InputError("reshape element count mismatch");
  }
  out.data_ = data_;
  return out;
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  const Tensor& first = *parts.front();
  int channels = 0;
  for (const Tensor* p : parts) {
    if (p->n() != first.n() || p->h() != first.h() || p->w() != first.w()) {
      throw InputError("concat_channels: mismatched N/H/W");
    }
    channels += p->c();
  }
  Tensor out(first.n(), channels, first.h(), first.w());
  for (int b = 0; b < first.n(); ++b) {
    Real* dst = out.sample(b);
    for (const Tensor* p : parts) {
      std::copy(p->sample(b), p->sample(b) + p->sample_size(), dst);
      dst += p->sample_size();
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int begin, int end) {
  if (begin < 0 || end > t.c() || begin >= end) throw InputError("bad channel slice");
  Tensor out(t.n(), end - begin, t.h(), t.w());
  for (int b = 0; b < t.n(); ++b) {
    std::copy(t.plane(b, begin), t.plane(b, begin) + out.sample_size(), out.sample(b));
  }
  return out;
}

Tensor concat_batch(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  const Tensor& first = *parts.front();
  int n = 0;
  for (const Tensor* p : parts) {
    if (p->c() != first.c() || p->h() != first.h() || p->w() != first.w()) {
      throw InputError("concat_batch: mismatched C/H/W");
    }
    n += p->n();
  }
  Tensor out(n, first.c(), first.h(), first.w());
  Real* dst = out.data();
  for (const Tensor* p : parts) dst = std::copy(p->data(), p->data() + p->size(), dst);
  return out;
}

Real sum_squares(const Tensor& t) {
  double acc = 0.0;
  for (Real v : t.vec()) acc += static_cast<double>(v) * v;
  return static_cast<Real>(acc);
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.vec().begin(), t.vec().end(),
                     [](Real v) { return std::isfinite(v); });
}

}  // namespace SG_REAL_NS
}  // namespace sg
