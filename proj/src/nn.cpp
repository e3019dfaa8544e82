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

#include "stegguard/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace sg {
inline namespace SG_REAL_NS {
namespace {

using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

// Unfolds channels [0, channels) of one sample into a (channels*k*k, H*W)
// column matrix.
void im2col(const Real* x, int channels, int h, int w, int k, Real* col) {
  const int pad = k / 2;
  const int hw = h * w;
  for (int c = 0; c < channels; ++c) {
    const Real* plane = x + static_cast<std::size_t>(c) * hw;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        Real* row = col + (static_cast<std::size_t>(c) * k * k + kh * k + kw) * hw;
        const int dx = kw - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          Real* dst = row + y * w;
          const int iy = y + kh - pad;
          if (iy < 0 || iy >= h || x1 <= x0) {
            std::memset(dst, 0, sizeof(Real) * w);
            continue;
          }
          for (int xo = 0; xo < x0; ++xo) dst[xo] = 0;
          std::memcpy(dst + x0, plane + iy * w + x0 + dx, sizeof(Real) * (x1 - x0));
          for (int xo = x1; xo < w; ++xo) dst[xo] = 0;
        }
      }
    }
  }
}

void col2im(const Real* col, int channels, int h, int w, int k, Real* dx) {
  const int pad = k / 2;
  const int hw = h * w;
  for (int c = 0; c < channels; ++c) {
    Real* plane = dx + static_cast<std::size_t>(c) * hw;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const Real* row = col + (static_cast<std::size_t>(c) * k * k + kh * k + kw) * hw;
        const int ddx = kw - pad;
        const int x0 = std::max(0, -ddx);
        const int x1 = std::min(w, w - ddx);
        for (int y = 0; y < h; ++y) {
          const int iy = y + kh - pad;
          if (iy < 0 || iy >= h) continue;
          const Real* src = row + y * w;
          Real* dst = plane + iy * w + ddx;
          for (int xo = x0; xo < x1; ++xo) dst[xo] += src[xo];
        }
      }
    }
  }
}

// Valid output rectangle [y0,y1) x [x0,x1) for kernel tap (kh, kw).
struct TapRect {
  int y0, y1, x0, x1;
};

TapRect tap_rect(int kh, int kw, int k, int h, int w) {
  const int pad = k / 2;
  const int dy = kh - pad, dx = kw - pad;
  return {std::max(0, -dy), std::min(h, h - dy), std::max(0, -dx), std::min(w, w - dx)};
}

}  // namespace

void init_fan_in_uniform(Tensor& t, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.vec()) v = static_cast<Real>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel)
    : weight(name + ".weight", Tensor(out_channels, in_channels, kernel, kernel)),
      bias(name + ".bias", Tensor(1, out_channels)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("bad conv geometry for " + name);
  }
}

void Conv2d::init(Rng& rng) {
  const int fan_in = in_ * k_ * k_;
  init_fan_in_uniform(weight.value, fan_in, rng);
  init_fan_in_uniform(bias.value, fan_in, rng);
}

Tensor Conv2d::forward(const Tensor& x, Cache* cache, const Tensor* planes) const {
  const int dense = x.c();
  const int nplanes = planes ? planes->c() : 0;
  if (dense + nplanes != in_) {
    throw ConfigError("conv " + weight.name + " expects " + std::to_string(in_) +
                      " input channels, got " + std::to_string(dense) + "+" +
                      std::to_string(nplanes));
  }
  if (planes && planes->n() != x.n()) throw InputError("plane batch mismatch");
  const int n = x.n(), h = x.h(), w = x.w(), hw = h * w, kk = k_ * k_;
  Tensor y(n, out_, h, w);
  std::vector<Real> col(static_cast<std::size_t>(dense) * kk * hw);
  CMapR wmat(weight.value.data(), out_, in_ * kk);
  std::vector<Real> tap_sum(static_cast<std::size_t>(out_) * kk);

  for (int b = 0; b < n; ++b) {
    im2col(x.sample(b), dense, h, w, k_, col.data());
    MapR out(y.sample(b), out_, hw);
    out.noalias() = wmat.leftCols(dense * kk) * CMapR(col.data(), dense * kk, hw);
    for (int o = 0; o < out_; ++o) {
      const Real bo = bias.value[o];
      Real* row = y.plane(b, o);
      for (int i = 0; i < hw; ++i) row[i] += bo;
    }
    if (nplanes == 0) continue;
    // tap_sum[o, t] = sum_p W[o, dense+p, t] * planes[b, p]
    const Real* pv = planes->sample(b);
    for (int o = 0; o < out_; ++o) {
      for (int t = 0; t < kk; ++t) {
        Real acc = 0;
        for (int p = 0; p < nplanes; ++p) {
          acc += weight.value[(static_cast<std::size_t>(o) * in_ + dense + p) * kk + t] * pv[p];
        }
        tap_sum[o * kk + t] = acc;
      }
    }
    for (int t = 0; t < kk; ++t) {
      const TapRect r = tap_rect(t / k_, t % k_, k_, h, w);
      for (int o = 0; o < out_; ++o) {
        const Real v = tap_sum[o * kk + t];
        Real* plane = y.plane(b, o);
        for (int yy = r.y0; yy < r.y1; ++yy) {
          for (int xx = r.x0; xx < r.x1; ++xx) plane[yy * w + xx] += v;
        }
      }
    }
  }
  if (cache) {
    cache->input = x;
    cache->planes = planes ? *planes : Tensor();
  }
  return y;
}

Tensor Conv2d::backward_impl(const Tensor& dy, const Cache& cache, Tensor* dw,
                             Tensor* db) const {
  const Tensor& x = cache.input;
  const int dense = x.c();
  const int nplanes = cache.planes.empty() ? 0 : cache.planes.c();
  const int n = x.n(), h = x.h(), w = x.w(), hw = h * w, kk = k_ * k_;
  Tensor dx = Tensor::like(x);
  std::vector<Real> col(static_cast<std::size_t>(dense) * kk * hw);
  std::vector<Real> dcol(col.size());
  CMapR wmat(weight.value.data(), out_, in_ * kk);
  MatR dw_dense;
  if (dw) dw_dense = MatR::Zero(out_, dense * kk);

  for (int b = 0; b < n; ++b) {
    CMapR g(dy.sample(b), out_, hw);
    if (dw) {
      im2col(x.sample(b), dense, h, w, k_, col.data());
      dw_dense.noalias() += g * CMapR(col.data(), dense * kk, hw).transpose();
    }
    if (db) {
      for (int o = 0; o < out_; ++o) {
        Real acc = 0;
        const Real* row = dy.plane(b, o);
        for (int i = 0; i < hw; ++i) acc += row[i];
        (*db)[o] += acc;
      }
    }
    MapR(dcol.data(), dense * kk, hw).noalias() =
        wmat.leftCols(dense * kk).transpose() * g;
    col2im(dcol.data(), dense, h, w, k_, dx.sample(b));

    if (dw && nplanes > 0) {
      const Real* pv = cache.planes.sample(b);
      for (int t = 0; t < kk; ++t) {
        const TapRect r = tap_rect(t / k_, t % k_, k_, h, w);
        for (int o = 0; o < out_; ++o) {
          const Real* plane = dy.plane(b, o);
          Real acc = 0;
          for (int yy = r.y0; yy < r.y1; ++yy) {
            for (int xx = r.x0; xx < r.x1; ++xx) acc += plane[yy * w + xx];
          }
          for (int p = 0; p < nplanes; ++p) {
            (*dw)[(static_cast<std::size_t>(o) * in_ + dense + p) * kk + t] += acc * pv[p];
          }
        }
      }
    }
  }
  if (dw) {
    for (int o = 0; o < out_; ++o) {
      for (int j = 0; j < dense * kk; ++j) {
        (*dw)[static_cast<std::size_t>(o) * in_ * kk + j] += dw_dense(o, j);
      }
    }
  }
  return dx;
}

Tensor Conv2d::backward(const Tensor& dy, const Cache& cache) {
  return backward_impl(dy, cache, &weight.grad, &bias.grad);
}

Tensor Conv2d::backward_input(const Tensor& dy, const Cache& cache) const {
  return backward_impl(dy, cache, nullptr, nullptr);
}

// ----------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(const std::string& n, int channels)
    : gamma(n + ".gamma", Tensor(1, channels, 1, 1, Real(1))),
      beta(n + ".beta", Tensor(1, channels)),
      name(n),
      running_mean(1, channels),
      running_var(1, channels, 1, 1, Real(1)) {}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode, Cache* cache) const {
  const int n = x.n(), c = x.c();
  const std::size_t hw = x.plane_size();
  if (c != channels()) throw ConfigError("batch norm " + name + " channel mismatch");
  Tensor y = Tensor::like(x);
  std::vector<Real> mean(c), inv_std(c), var_unbiased(c);
  if (mode == Mode::kTrain) {
    const double count = static_cast<double>(n) * hw;
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        const Real* p = x.plane(b, ch);
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double m = s / count;
      double ss = 0.0;
      for (int b = 0; b < n; ++b) {
        const Real* p = x.plane(b, ch);
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - m;
          ss += d * d;
        }
      }
      const double var = ss / count;
      mean[ch] = static_cast<Real>(m);
      inv_std[ch] = static_cast<Real>(1.0 / std::sqrt(var + kEps));
      var_unbiased[ch] = static_cast<Real>(count > 1 ? ss / (count - 1) : var);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean[ch];
      inv_std[ch] = static_cast<Real>(1.0 / std::sqrt(double(running_var[ch]) + kEps));
    }
  }
  Tensor xhat;
  if (cache) xhat = Tensor::like(x);
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const Real* p = x.plane(b, ch);
      Real* q = y.plane(b, ch);
      Real* xh = cache ? xhat.plane(b, ch) : nullptr;
      const Real m = mean[ch], is = inv_std[ch];
      const Real g = gamma.value[ch], be = beta.value[ch];
      for (std::size_t i = 0; i < hw; ++i) {
        const Real v = (p[i] - m) * is;
        if (xh) xh[i] = v;
        q[i] = g * v + be;
      }
    }
  }
  if (cache) {
    cache->mode = mode;
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_mean = std::move(mean);
    cache->batch_var = std::move(var_unbiased);
  }
  return y;
}

void BatchNorm2d::update_running(const Cache& cache) {
  if (cache.mode != Mode::kTrain) return;
  for (int ch = 0; ch < channels(); ++ch) {
    running_mean[ch] = (1 - kMomentum) * running_mean[ch] + kMomentum * cache.batch_mean[ch];
    running_var[ch] = (1 - kMomentum) * running_var[ch] + kMomentum * cache.batch_var[ch];
  }
}

Tensor BatchNorm2d::backward_impl(const Tensor& dy, const Cache& cache, Tensor* dgamma,
                                  Tensor* dbeta) const {
  const int n = dy.n(), c = dy.c();
  const std::size_t hw = dy.plane_size();
  const double count = static_cast<double>(n) * hw;
  Tensor dx = Tensor::like(dy);
  for (int ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < n; ++b) {
      const Real* g = dy.plane(b, ch);
      const Real* xh = cache.xhat.plane(b, ch);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += g[i];
        sum_dy_xhat += static_cast<double>(g[i]) * xh[i];
      }
    }
    if (dgamma) (*dgamma)[ch] += static_cast<Real>(sum_dy_xhat);
    if (dbeta) (*dbeta)[ch] += static_cast<Real>(sum_dy);
    const Real scale = gamma.value[ch] * cache.inv_std[ch];
    if (cache.mode == Mode::kEval) {
      for (int b = 0; b < n; ++b) {
        const Real* g = dy.plane(b, ch);
        Real* d = dx.plane(b, ch);
        for (std::size_t i = 0; i < hw; ++i) d[i] = g[i] * scale;
      }
    } else {
      const Real mean_dy = static_cast<Real>(sum_dy / count);
      const Real mean_dy_xhat = static_cast<Real>(sum_dy_xhat / count);
      for (int b = 0; b < n; ++b) {
        const Real* g = dy.plane(b, ch);
        const Real* xh = cache.xhat.plane(b, ch);
        Real* d = dx.plane(b, ch);
        for (std::size_t i = 0; i < hw; ++i) {
          d[i] = scale * (g[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
      }
    }
  }
  return dx;
}

Tensor BatchNorm2d::backward(const Tensor& dy, const Cache& cache) {
  return backward_impl(dy, cache, &gamma.grad, &beta.grad);
}

Tensor BatchNorm2d::backward_input(const Tensor& dy, const Cache& cache) const {
  return backward_impl(dy, cache, nullptr, nullptr);
}

// ------------------------------------------------------------ activation

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "gelu"; }

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "gelu") return Activation::kGelu;
  throw ConfigError("unknown activation '" + text + "'");
}

Tensor activate(const Tensor& x, Activation a) {
  Tensor y = Tensor::like(x);
  if (a == Activation::kRelu) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : Real(0);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Real v = x[i];
      y[i] = Real(0.5) * v * (Real(1) + std::erf(v * Real(std::numbers::sqrt2 / 2)));
    }
  }
  return y;
}

Tensor activate_backward(const Tensor& dy, const Tensor& x, Activation a) {
  Tensor dx = Tensor::like(x);
  if (a == Activation::kRelu) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0 ? dy[i] : Real(0);
  } else {
    const Real inv_sqrt2pi = Real(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Real v = x[i];
      const Real cdf = Real(0.5) * (Real(1) + std::erf(v * Real(std::numbers::sqrt2 / 2)));
      const Real pdf = inv_sqrt2pi * std::exp(Real(-0.5) * v * v);
      dx[i] = dy[i] * (cdf + v * pdf);
    }
  }
  return dx;
}

// --------------------------------------------------------------- pooling

Tensor MaxPool2::forward(const Tensor& x, Cache* cache) {
  const int n = x.n(), c = x.c(), h = x.h() / 2, w = x.w() / 2;
  if (h < 1 || w < 1) throw InputError("max pool input smaller than 2x2");
  Tensor y(n, c, h, w);
  if (cache) {
    cache->in_shape = x.shape();
    cache->argmax.assign(y.size(), 0);
  }
  std::size_t o = 0;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const Real* p = x.plane(b, ch);
      for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx, ++o) {
          const int base = 2 * yy * x.w() + 2 * xx;
          int best = base;
          for (int idx : {base + 1, base + x.w(), base + x.w() + 1}) {
            if (p[idx] > p[best]) best = idx;
          }
          y[o] = p[best];
          if (cache) cache->argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& dy, const Cache& cache) {
  const auto& s = cache.in_shape;
  Tensor dx(s[0], s[1], s[2], s[3]);
  const std::size_t out_plane = dy.plane_size();
  for (std::size_t o = 0; o < dy.size(); ++o) {
    const std::size_t plane_idx = o / out_plane;
    dx[plane_idx * dx.plane_size() + cache.argmax[o]] += dy[o];
  }
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  Tensor y(x.n(), x.c());
  const std::size_t hw = x.plane_size();
  for (int b = 0; b < x.n(); ++b) {
    for (int ch = 0; ch < x.c(); ++ch) {
      const Real* p = x.plane(b, ch);
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
      y.at(b, ch, 0, 0) = static_cast<Real>(s / hw);
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy, int h, int w) {
  Tensor dx(dy.n(), dy.c(), h, w);
  const Real inv = Real(1) / static_cast<Real>(h * w);
  for (int b = 0; b < dy.n(); ++b) {
    for (int ch = 0; ch < dy.c(); ++ch) {
      const Real g = dy.at(b, ch, 0, 0) * inv;
      Real* p = dx.plane(b, ch);
      std::fill(p, p + static_cast<std::size_t>(h) * w, g);
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(const std::string& name, int in_features, int out_features)
    : weight(name + ".weight", Tensor(out_features, in_features)),
      bias(name + ".bias", Tensor(1, out_features)),
      in_(in_features),
      out_(out_features) {
  if (in_features < 1 || out_features < 1) throw ConfigError("bad linear shape " + name);
}

void Linear::init(Rng& rng) {
  init_fan_in_uniform(weight.value, in_, rng);
  init_fan_in_uniform(bias.value, in_, rng);
}

Tensor Linear::forward(const Tensor& x, Cache* cache) const {
  if (static_cast<int>(x.sample_size()) != in_) {
    throw ConfigError("linear " + weight.name + " expects width " + std::to_string(in_) +
                      ", got " + std::to_string(x.sample_size()));
  }
  Tensor y(x.n(), out_);
  CMapR xm(x.data(), x.n(), in_);
  CMapR wm(weight.value.data(), out_, in_);
  MapR ym(y.data(), x.n(), out_);
  ym.noalias() = xm * wm.transpose();
  for (int b = 0; b < x.n(); ++b) {
    for (int o = 0; o < out_; ++o) ym(b, o) += bias.value[o];
  }
  if (cache) cache->input = x;
  return y;
}

Tensor Linear::backward_impl(const Tensor& dy, const Cache& cache, Tensor* dw,
                             Tensor* db) const {
  const Tensor& x = cache.input;
  CMapR g(dy.data(), dy.n(), out_);
  if (dw) {
    MapR(dw->data(), out_, in_).noalias() += g.transpose() * CMapR(x.data(), x.n(), in_);
  }
  if (db) {
    for (int b = 0; b < dy.n(); ++b) {
      for (int o = 0; o < out_; ++o) (*db)[o] += g(b, o);
    }
  }
  Tensor dx = Tensor::like(x);
  MapR(dx.data(), x.n(), in_).noalias() = g * CMapR(weight.value.data(), out_, in_);
  return dx;
}

Tensor Linear::backward(const Tensor& dy, const Cache& cache) {
  return backward_impl(dy, cache, &weight.grad, &bias.grad);
}

Tensor Linear::backward_input(const Tensor& dy, const Cache& cache) const {
  return backward_impl(dy, cache, nullptr, nullptr);
}

// ------------------------------------------------------------------ Adam

Adam::Adam(std::vector<Param*> params, Options options)
    : params_(std::move(params)), opt_(options) {
  for (const Param* p : params_) {
    m_.push_back(Tensor::like(p->value));
    v_.push_back(Tensor::like(p->value));
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const double step = opt_.lr * std::sqrt(c2) / c1;
  const Real b1 = static_cast<Real>(opt_.beta1), b2 = static_cast<Real>(opt_.beta2);
  const Real eps_hat = static_cast<Real>(opt_.eps * std::sqrt(c2));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& val = params_[i]->value;
    const Tensor& g = params_[i]->grad;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < val.size(); ++j) {
      m[j] = b1 * m[j] + (1 - b1) * g[j];
      v[j] = b2 * v[j] + (1 - b2) * g[j] * g[j];
      val[j] -= static_cast<Real>(step) * m[j] / (std::sqrt(v[j]) + eps_hat);
    }
  }
}

}  // namespace SG_REAL_NS
}  // namespace sg
