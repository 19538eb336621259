#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribseg/rng.hpp"
#include "scribseg/tensor.hpp"

namespace scribseg::model {

// Named view of one parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

// 2D convolution, stride 1, same padding (pad = k/2). Weight [out,in,k,k].
// Forward is const and thread-safe; backward accumulates into grad_*.
struct Conv2d {
  int in_ch = 0, out_ch = 0, ksize = 3;
  Tensor weight, bias;
  Tensor grad_weight, grad_bias;

  void setup(int in_channels, int out_channels, int k);
  void init(Rng& rng);  // fan-in scaled uniform weights, zero bias
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);
  void register_params(const std::string& prefix, std::vector<ParamRef>& out);
};

// Transposed convolution, kernel 2x2, stride 2 (exact 2x upsampling; output
// pixels receive exactly one contribution). Weight [in,out,2,2].
struct ConvTranspose2x2 {
  int in_ch = 0, out_ch = 0;
  Tensor weight, bias;
  Tensor grad_weight, grad_bias;

  void setup(int in_channels, int out_channels);
  void init(Rng& rng);
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);
  void register_params(const std::string& prefix, std::vector<ParamRef>& out);
};

// Per-sample, per-channel normalization with learned affine. Batch-independent
// so eval-mode outputs do not depend on batch composition.
struct InstanceNorm {
  int channels = 0;
  double eps = 1e-5;
  Tensor gamma, beta;
  Tensor grad_gamma, grad_beta;

  struct Cache {
    Tensor xhat;
    std::vector<double> invstd;  // per (b, c)
  };

  void setup(int num_channels);
  Tensor forward(const Tensor& x, Cache* cache) const;
  Tensor backward(const Cache& cache, const Tensor& dy);
  void register_params(const std::string& prefix, std::vector<ParamRef>& out);
};

Tensor relu(const Tensor& x);
// Uses the forward output: d/dx = dy where y > 0, else 0.
Tensor relu_backward(const Tensor& y, const Tensor& dy);

struct MaxPool2x2 {
  struct Cache {
    std::vector<std::int32_t> argmax;  // input-plane index per output element
    std::vector<std::int64_t> in_shape;
  };
  static Tensor forward(const Tensor& x, Cache* cache);
  static Tensor backward(const Cache& cache, const Tensor& dy);
};

// Inverted dropout. Inactive (eval or rate 0) passes through without
// consuming any rng draws, so rate=0 training is bitwise equal to eval.
struct Dropout {
  struct Cache {
    Tensor mask;
    bool active = false;
  };
  static Tensor forward(const Tensor& x, double rate, bool active, Rng* rng,
                        Cache* cache);
  static Tensor backward(const Cache& cache, const Tensor& dy);
};

// Softmax over the channel dimension, per pixel.
Tensor softmax_channels(const Tensor& z);
Tensor softmax_backward(const Tensor& y, const Tensor& dy);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& d, int ca, Tensor& da, Tensor& db);

}  // namespace scribseg::model
