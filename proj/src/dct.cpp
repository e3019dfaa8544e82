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


#include "stegguard/dct.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sg {
inline namespace SG_REAL_NS {

double dct_basis(int u, int v, int h, int w) {
  constexpr double kPi = std::numbers::pi;
  return std::cos(kPi * u * (h + 0.5) / kDctGrid) * std::cos(kPi * v * (w + 0.5) / kDctGrid);
}

const std::array<double, kDctCoeffs * kDctCoeffs>& dct_basis_table() {
  static const auto table = [] {
    std::array<double, kDctCoeffs * kDctCoeffs> t{};
    for (int i = 0; i < kDctCoeffs; ++i) {
      for (int p = 0; p < kDctCoeffs; ++p) {
        t[static_cast<std::size_t>(i * kDctCoeffs + p)] =
            dct_basis(i / kDctGrid, i % kDctGrid, p / kDctGrid, p % kDctGrid);
      }
    }
    return t;
  }();
  return table;
}

std::array<double, kDctCoeffs> dct_grid_coeffs(std::span<const double> grid, int rows,
                                               int cols) {
  if (rows != kDctGrid || cols != kDctGrid ||
      grid.size() != static_cast<std::size_t>(kDctCoeffs)) {
    throw InputError("DCT grid must be 7x7, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  const auto& basis = dct_basis_table();
  std::array<double, kDctCoeffs> out{};
  for (int i = 0; i < kDctCoeffs; ++i) {
    double acc = 0.0;
    for (int p = 0; p < kDctCoeffs; ++p) {
      acc += grid[static_cast<std::size_t>(p)] * basis[static_cast<std::size_t>(i * kDctCoeffs + p)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

PoolWindow adaptive_window(int i, int in, int out) {
  const int begin = (i * in) / out;
  const int end = ((i + 1) * in + out - 1) / out;
  return {begin, end};
}

Tensor adaptive_pool7(const Tensor& x) {
  Tensor y(x.n(), x.c(), kDctGrid, kDctGrid);
  for (int b = 0; b < x.n(); ++b) {
    for (int c = 0; c < x.c(); ++c) {
      const Real* src = x.plane(b, c);
      Real* dst = y.plane(b, c);
      for (int i = 0; i < kDctGrid; ++i) {
        const auto wh = adaptive_window(i, x.h(), kDctGrid);
        for (int j = 0; j < kDctGrid; ++j) {
          const auto ww = adaptive_window(j, x.w(), kDctGrid);
          double acc = 0.0;
          for (int h = wh.begin; h < wh.end; ++h) {
            for (int w = ww.begin; w < ww.end; ++w) acc += src[h * x.w() + w];
          }
          dst[i * kDctGrid + j] =
              static_cast<Real>(acc / ((wh.end - wh.begin) * (ww.end - ww.begin)));
        }
      }
    }
  }
  return y;
}

Tensor adaptive_pool7_backward(const Tensor& dy, int h, int w) {
  Tensor dx(dy.n(), dy.c(), h, w);
  for (int b = 0; b < dy.n(); ++b) {
    for (int c = 0; c < dy.c(); ++c) {
      const Real* g = dy.plane(b, c);
      Real* dst = dx.plane(b, c);
      for (int i = 0; i < kDctGrid; ++i) {
        const auto wh = adaptive_window(i, h, kDctGrid);
        for (int j = 0; j < kDctGrid; ++j) {
          const auto ww = adaptive_window(j, w, kDctGrid);
          const Real share =
              g[i * kDctGrid + j] / static_cast<Real>((wh.end - wh.begin) * (ww.end - ww.begin));
          for (int y = wh.begin; y < wh.end; ++y) {
            for (int x = ww.begin; x < ww.end; ++x) dst[y * w + x] += share;
          }
        }
      }
    }
  }
  return dx;
}

}  // namespace SG_REAL_NS
}  // namespace sg
