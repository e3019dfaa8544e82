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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stegguard/common.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// Dense NCHW tensor. Matrices are stored as (rows, cols, 1, 1) and vectors
// as (1, n, 1, 1).
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h = 1, int w = 1, Real fill = Real(0));

  static Tensor like(const Tensor& other, Real fill = Real(0)) {
    return Tensor(other.n(), other.c(), other.h(), other.w(), fill);
  }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  // Elements in one sample (C*H*W) and in one plane (H*W).
  std::size_t sample_size() const {
    return static_cast<std::size_t>(c()) * h() * w();
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(h()) * w(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> span() { return data_; }
  std::span<const Real> span() const { return data_; }
  std::vector<Real>& vec() { return data_; }
  const std::vector<Real>& vec() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  Real at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  Real* sample(int n) { return data_.data() + n * sample_size(); }
  const Real* sample(int n) const { return data_.data() + n * sample_size(); }
  Real* plane(int n, int c) { return sample(n) + c * plane_size(); }
  const Real* plane(int n, int c) const { return sample(n) + c * plane_size(); }

  void fill(Real v);
  void zero() { fill(Real(0)); }
  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(Real s);

  // Copy of samples [begin, end).
  Tensor slice(int begin, int end) const;
  // Same data viewed with a different shape of equal element count.
  Tensor reshaped(int n, int c, int h = 1, int w = 1) const;

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) *
               shape_[3] +
           w;
  }

  std::array<int, 4> shape_{0, 0, 0, 0};
  std::vector<Real> data_;
};

// Concatenates along the channel axis. All inputs share N, H, W.
Tensor concat_channels(std::span<const Tensor* const> parts);
// Channels [begin, end) of every sample.
Tensor slice_channels(const Tensor& t, int begin, int end);
// Stacks along the batch axis; all parts must share C/H/W.
Tensor concat_batch(std::span<const Tensor* const> parts);

Real sum_squares(const Tensor& t);
bool all_finite(const Tensor& t);

}  // namespace SG_REAL_NS
}  // namespace sg
