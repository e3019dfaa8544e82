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
#include <span>

#include "stegguard/tensor.hpp"

namespace sg {
inline namespace SG_REAL_NS {

inline constexpr int kDctGrid = 7;
inline constexpr int kDctCoeffs = kDctGrid * kDctGrid;

// Unnormalized 2-D DCT-II basis on the 7x7 grid:
//   B[u,v](h,w) = cos(pi*u*(h+1/2)/7) * cos(pi*v*(w+1/2)/7).
double dct_basis(int u, int v, int h, int w);

// Row i = (u, v) with u = i / 7, v = i % 7; column h * 7 + w.
const std::array<double, kDctCoeffs * kDctCoeffs>& dct_basis_table();

// Coefficient i = sum_{h,w} grid[h,w] * B[i/7, i%7](h,w). `grid` is row-major
// with the given extents; anything but 7x7 is an InputError.
std::array<double, kDctCoeffs> dct_grid_coeffs(std::span<const double> grid, int rows,
                                               int cols);

// Window [floor(i*in/out), ceil((i+1)*in/out)) along each axis.
struct PoolWindow {
  int begin;
  int end;
};
PoolWindow adaptive_window(int i, int in, int out);

// (N, C, H, W) -> (N, C, 7, 7) by adaptive average pooling.
Tensor adaptive_pool7(const Tensor& x);
Tensor adaptive_pool7_backward(const Tensor& dy, int h, int w);

}  // namespace SG_REAL_NS
}  // namespace sg
