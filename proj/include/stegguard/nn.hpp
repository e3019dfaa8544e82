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

// Minimal layer set for the encoders and the stego network.
//
// Layers are value types. forward() is const and writes whatever backward
// needs into a caller-owned cache, so frozen networks can be evaluated and
// differentiated concurrently. backward() accumulates parameter gradients
// into the layer's own Param::grad; backward_input() only propagates to the
// input and leaves the layer untouched.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stegguard/rng.hpp"
#include "stegguard/tensor.hpp"

namespace sg {
inline namespace SG_REAL_NS {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::like(value)) {}
  void zero_grad() { grad.zero(); }
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_fan_in_uniform(Tensor& t, int fan_in, Rng& rng);

// Square kernel, stride 1, zero padding kernel/2 (shape preserving for odd
// kernels).
//
// Optionally takes `planes`, an (N, P) tensor of per-sample scalars that act
// as P extra input channels holding a constant value over the whole plane.
// The weight tensor then has dense + P input channels with the constant
// channels last. Their contribution is evaluated in closed form per border
// region, which is exact under zero padding and avoids materialising P full
// planes.
class Conv2d {
 public:
  struct Cache {
    Tensor input;
    Tensor planes;
  };

  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels,
         int kernel = 3);

  void init(Rng& rng);
  Tensor forward(const Tensor& x, Cache* cache, const Tensor* planes = nullptr) const;
  Tensor backward(const Tensor& dy, const Cache& cache);
  Tensor backward_input(const Tensor& dy, const Cache& cache) const;
  std::vector<Param*> params() { return {&weight, &bias}; }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }

  Param weight;  // (out, in, k, k)
  Param bias;    // (1, out)

 private:
  Tensor backward_impl(const Tensor& dy, const Cache& cache, Tensor* dw,
                       Tensor* db) const;

  int in_ = 0;
  int out_ = 0;
  int k_ = 3;
};

class BatchNorm2d {
 public:
  struct Cache {
    Mode mode = Mode::kEval;
    Tensor xhat;
    std::vector<Real> inv_std;
    std::vector<Real> batch_mean;
    std::vector<Real> batch_var;  // unbiased, for the running estimate
  };

  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels);

  Tensor forward(const Tensor& x, Mode mode, Cache* cache) const;
  // Folds the batch statistics of a training forward into the running
  // estimates.
  void update_running(const Cache& cache);
  Tensor backward(const Tensor& dy, const Cache& cache);
  Tensor backward_input(const Tensor& dy, const Cache& cache) const;
  std::vector<Param*> params() { return {&gamma, &beta}; }

  int channels() const { return gamma.value.c(); }

  static constexpr Real kEps = Real(1e-5);
  static constexpr Real kMomentum = Real(0.1);

  Param gamma;
  Param beta;
  std::string name;
  Tensor running_mean;
  Tensor running_var;

 private:
  Tensor backward_impl(const Tensor& dy, const Cache& cache, Tensor* dgamma,
                       Tensor* dbeta) const;
};

enum class Activation { kRelu, kGelu };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

// Elementwise activation; the cache is the pre-activation input.
Tensor activate(const Tensor& x, Activation a);
Tensor activate_backward(const Tensor& dy, const Tensor& x, Activation a);

// 2x2 max pooling, stride 2 (odd trailing rows/columns are dropped).
struct MaxPool2 {
  struct Cache {
    std::array<int, 4> in_shape{};
    std::vector<std::uint32_t> argmax;
  };
  static Tensor forward(const Tensor& x, Cache* cache);
  static Tensor backward(const Tensor& dy, const Cache& cache);
};

// (N, C, H, W) -> (N, C, 1, 1)
struct GlobalAvgPool {
  static Tensor forward(const Tensor& x);
  static Tensor backward(const Tensor& dy, int h, int w);
};

// y = x W^T + b on (N, in) inputs.
class Linear {
 public:
  struct Cache {
    Tensor input;
  };

  Linear() = default;
  Linear(const std::string& name, int in_features, int out_features);

  void init(Rng& rng);
  Tensor forward(const Tensor& x, Cache* cache) const;
  Tensor backward(const Tensor& dy, const Cache& cache);
  Tensor backward_input(const Tensor& dy, const Cache& cache) const;
  std::vector<Param*> params() { return {&weight, &bias}; }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Param weight;  // (out, in)
  Param bias;    // (1, out)

 private:
  Tensor backward_impl(const Tensor& dy, const Cache& cache, Tensor* dw,
                       Tensor* db) const;

  int in_ = 0;
  int out_ = 0;
};

// Adam with bias correction; state is matched to parameters by position.
class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(std::vector<Param*> params) : Adam(std::move(params), Options{}) {}
  Adam(std::vector<Param*> params, Options options);

  void zero_grad();
  void step();
  long steps() const { return t_; }

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  Options opt_;
  long t_ = 0;
};

}  // namespace SG_REAL_NS
}  // namespace sg
