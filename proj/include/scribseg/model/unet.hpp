#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribseg/model/config.hpp"
#include "scribseg/model/layers.hpp"
#include "scribseg/rng.hpp"
#include "scribseg/tensor.hpp"

namespace scribseg::model {

// conv3x3 -> instance norm -> relu, twice.
struct ConvBlock {
  Conv2d conv1, conv2;
  InstanceNorm norm1, norm2;

  struct Cache {
    Tensor x;   // conv1 input
    Tensor r1;  // first relu output (conv2 input)
    Tensor r2;  // block output
    InstanceNorm::Cache n1, n2;
  };

  void setup(int in_ch, int out_ch);
  void init(Rng& rng);
  Tensor forward(const Tensor& x, Cache* cache) const;
  Tensor backward(Cache& cache, const Tensor& dy);
  void register_params(const std::string& prefix, std::vector<ParamRef>& out);
};

// One decoder: transposed-conv upsampling, skip concat (upsampled features
// first), optional dropout on the concatenated features before each conv
// block, 1x1 head producing logits.
struct Decoder {
  std::vector<ConvTranspose2x2> ups;  // ups[i]: level i+1 -> level i
  std::vector<ConvBlock> blocks;      // blocks[i] at level i
  Conv2d head;
  bool use_dropout = false;
  double dropout_rate = 0.0;

  struct Cache {
    struct Step {
      Tensor up_in;
      Dropout::Cache drop;
      ConvBlock::Cache block;
    };
    std::vector<Step> steps;  // indexed by level, [0, levels-2]
    Tensor head_in;
  };

  void setup(const ModelConfig& cfg, bool dropout);
  void init(Rng& rng);
  Tensor forward(const std::vector<Tensor>& skips, bool train, Rng* rng,
                 Cache* cache) const;
  // Accumulates parameter grads; returns grads w.r.t. each encoder skip.
  std::vector<Tensor> backward(Cache& cache, const Tensor& dz);
  void register_params(const std::string& prefix, std::vector<ParamRef>& out);
};

class DualBranchUNet {
 public:
  struct Cache {
    std::vector<ConvBlock::Cache> enc_blocks;
    std::vector<MaxPool2x2::Cache> pools;
    Decoder::Cache dec_main, dec_aux;
    Tensor y1, y2;  // softmax outputs, kept for logit-gradient composition
  };

  struct Output {
    Tensor y1, y2;  // per-pixel class probabilities
  };

  explicit DualBranchUNet(const ModelConfig& cfg);

  void init_params(std::uint64_t seed);

  // rng is consumed only by aux-decoder dropout (train mode, rate > 0).
  Output forward(const Tensor& batch, bool train, Rng* rng, Cache* cache) const;

  // dy1/dy2 are gradients w.r.t. the softmax outputs; composes the softmax
  // jacobian internally and accumulates into parameter grads.
  void backward(Cache& cache, const Tensor& dy1, const Tensor& dy2);

  void zero_grad();
  std::vector<ParamRef> params();
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  std::vector<ConvBlock> enc_;
  Decoder dec_main_, dec_aux_;
};

}  // namespace scribseg::model
