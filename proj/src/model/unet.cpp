#include "scribseg/model/unet.hpp"

#include <string>

#include "scribseg/errors.hpp"

namespace scribseg::model {

void ModelConfig::validate() const {
  if (in_channels < 1) throw ValidationError("model: in_channels must be >= 1");
  if (num_classes < 2) throw ValidationError("model: num_classes must be >= 2");
  if (levels < 2) throw ValidationError("model: levels must be >= 2");
  if (base_width < 1) throw ValidationError("model: base_width must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ValidationError("model: dropout_rate must be in [0,1)");
  }
}

void ConvBlock::setup(int in_ch, int out_ch) {
  conv1.setup(in_ch, out_ch, 3);
  conv2.setup(out_ch, out_ch, 3);
  norm1.setup(out_ch);
  norm2.setup(out_ch);
}

void ConvBlock::init(Rng& rng) {
  conv1.init(rng);
  conv2.init(rng);
}

Tensor ConvBlock::forward(const Tensor& x, Cache* cache) const {
  Tensor a = conv1.forward(x);
  Tensor h = relu(norm1.forward(a, cache ? &cache->n1 : nullptr));
  Tensor a2 = conv2.forward(h);
  Tensor out = relu(norm2.forward(a2, cache ? &cache->n2 : nullptr));
  if (cache) {
    cache->x = x;
    cache->r1 = h;
    cache->r2 = out;
  }
  return out;
}

Tensor ConvBlock::backward(Cache& cache, const Tensor& dy) {
  Tensor d = relu_backward(cache.r2, dy);
  d = norm2.backward(cache.n2, d);
  d = conv2.backward(cache.r1, d);
  d = relu_backward(cache.r1, d);
  d = norm1.backward(cache.n1, d);
  return conv1.backward(cache.x, d);
}

void ConvBlock::register_params(const std::string& prefix, std::vector<ParamRef>& out) {
  conv1.register_params(prefix + ".conv1", out);
  norm1.register_params(prefix + ".norm1", out);
  conv2.register_params(prefix + ".conv2", out);
  norm2.register_params(prefix + ".norm2", out);
}

void Decoder::setup(const ModelConfig& cfg, bool dropout) {
  use_dropout = dropout;
  dropout_rate = dropout ? cfg.dropout_rate : 0.0;
  const int n = cfg.levels - 1;
  ups.resize(static_cast<std::size_t>(n));
  blocks.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ups[static_cast<std::size_t>(i)].setup(cfg.channels_at(i + 1), cfg.channels_at(i));
    blocks[static_cast<std::size_t>(i)].setup(2 * cfg.channels_at(i), cfg.channels_at(i));
  }
  head.setup(cfg.channels_at(0), cfg.num_classes, 1);
}

void Decoder::init(Rng& rng) {
  for (std::size_t i = 0; i < ups.size(); ++i) {
    ups[i].init(rng);
    blocks[i].init(rng);
  }
  head.init(rng);
}

Tensor Decoder::forward(const std::vector<Tensor>& skips, bool train, Rng* rng,
                        Cache* cache) const {
  const int n = static_cast<int>(ups.size());
  if (cache) cache->steps.resize(static_cast<std::size_t>(n));
  Tensor cur = skips[static_cast<std::size_t>(n)];
  for (int i = n - 1; i >= 0; --i) {
    Cache::Step* step = cache ? &cache->steps[static_cast<std::size_t>(i)] : nullptr;
    if (step) step->up_in = cur;
    Tensor up = ups[static_cast<std::size_t>(i)].forward(cur);
    Tensor cat = concat_channels(up, skips[static_cast<std::size_t>(i)]);
    const bool drop = use_dropout && train && dropout_rate > 0.0;
    cat = Dropout::forward(cat, dropout_rate, drop, rng, step ? &step->drop : nullptr);
    cur = blocks[static_cast<std::size_t>(i)].forward(cat, step ? &step->block : nullptr);
  }
  if (cache) cache->head_in = cur;
  return head.forward(cur);
}

std::vector<Tensor> Decoder::backward(Cache& cache, const Tensor& dz) {
  const int n = static_cast<int>(ups.size());
  std::vector<Tensor> dskips(static_cast<std::size_t>(n) + 1);
  Tensor dcur = head.backward(cache.head_in, dz);
  for (int i = 0; i < n; ++i) {
    Cache::Step& step = cache.steps[static_cast<std::size_t>(i)];
    Tensor dcat = blocks[static_cast<std::size_t>(i)].backward(step.block, dcur);
    dcat = Dropout::backward(step.drop, dcat);
    Tensor dup, dskip;
    split_channels(dcat, ups[static_cast<std::size_t>(i)].out_ch, dup, dskip);
    dskips[static_cast<std::size_t>(i)] = std::move(dskip);
    dcur = ups[static_cast<std::size_t>(i)].backward(step.up_in, dup);
  }
  dskips[static_cast<std::size_t>(n)] = std::move(dcur);
  return dskips;
}

void Decoder::register_params(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < ups.size(); ++i) {
    ups[i].register_params(prefix + ".up" + std::to_string(i), out);
    blocks[i].register_params(prefix + ".block" + std::to_string(i), out);
  }
  head.register_params(prefix + ".head", out);
}

DualBranchUNet::DualBranchUNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  enc_.resize(static_cast<std::size_t>(cfg_.levels));
  enc_[0].setup(cfg_.in_channels, cfg_.channels_at(0));
  for (int i = 1; i < cfg_.levels; ++i) {
    enc_[static_cast<std::size_t>(i)].setup(cfg_.channels_at(i - 1), cfg_.channels_at(i));
  }
  dec_main_.setup(cfg_, /*dropout=*/false);
  dec_aux_.setup(cfg_, /*dropout=*/true);
}

void DualBranchUNet::init_params(std::uint64_t seed) {
  Rng rng = Rng::derive(seed, rng_stream::kInit);
  for (auto& block : enc_) block.init(rng);
  dec_main_.init(rng);
  dec_aux_.init(rng);
}

DualBranchUNet::Output DualBranchUNet::forward(const Tensor& batch, bool train,
                                               Rng* rng, Cache* cache) const {
  if (batch.rank() != 4 || batch.dim(1) != cfg_.in_channels) {
    throw ValidationError("model: batch must be [B," + std::to_string(cfg_.in_channels) +
                          ",H,W], got " + batch.shape_str());
  }
  const int stride = cfg_.stride();
  if (batch.dim(2) % stride || batch.dim(3) % stride) {
    throw ValidationError("model: H and W must be divisible by " + std::to_string(stride) +
                          ", got " + batch.shape_str());
  }
  if (!batch.all_finite()) throw ValidationError("model: non-finite input batch");

  if (cache) {
    cache->enc_blocks.resize(static_cast<std::size_t>(cfg_.levels));
    cache->pools.resize(static_cast<std::size_t>(cfg_.levels) - 1);
  }
  std::vector<Tensor> skips(static_cast<std::size_t>(cfg_.levels));
  skips[0] = enc_[0].forward(batch, cache ? &cache->enc_blocks[0] : nullptr);
  for (int i = 1; i < cfg_.levels; ++i) {
    Tensor pooled = MaxPool2x2::forward(skips[static_cast<std::size_t>(i) - 1],
                                        cache ? &cache->pools[static_cast<std::size_t>(i) - 1]
                                              : nullptr);
    skips[static_cast<std::size_t>(i)] =
        enc_[static_cast<std::size_t>(i)].forward(pooled,
                                                  cache ? &cache->enc_blocks[static_cast<std::size_t>(i)]
                                                        : nullptr);
  }

  Tensor z1 = dec_main_.forward(skips, train, nullptr, cache ? &cache->dec_main : nullptr);
  Tensor z2 = dec_aux_.forward(skips, train, rng, cache ? &cache->dec_aux : nullptr);

  Output out;
  out.y1 = softmax_channels(z1);
  out.y2 = softmax_channels(z2);
  if (cache) {
    cache->y1 = out.y1;
    cache->y2 = out.y2;
  }
  return out;
}

void DualBranchUNet::backward(Cache& cache, const Tensor& dy1, const Tensor& dy2) {
  Tensor dz1 = softmax_backward(cache.y1, dy1);
  Tensor dz2 = softmax_backward(cache.y2, dy2);
  std::vector<Tensor> g1 = dec_main_.backward(cache.dec_main, dz1);
  std::vector<Tensor> g2 = dec_aux_.backward(cache.dec_aux, dz2);
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] += g2[i];

  for (int i = cfg_.levels - 1; i >= 1; --i) {
    Tensor dpooled = enc_[static_cast<std::size_t>(i)].backward(
        cache.enc_blocks[static_cast<std::size_t>(i)], g1[static_cast<std::size_t>(i)]);
    g1[static_cast<std::size_t>(i) - 1] +=
        MaxPool2x2::backward(cache.pools[static_cast<std::size_t>(i) - 1], dpooled);
  }
  enc_[0].backward(cache.enc_blocks[0], g1[0]);
}

void DualBranchUNet::zero_grad() {
  for (ParamRef& p : params()) p.grad->zero();
}

std::vector<ParamRef> DualBranchUNet::params() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    enc_[i].register_params("encoder.block" + std::to_string(i), out);
  }
  dec_main_.register_params("decoder_main", out);
  dec_aux_.register_params("decoder_aux", out);
  return out;
}

}  // namespace scribseg::model
