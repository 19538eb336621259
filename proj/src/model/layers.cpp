#include "scribseg/model/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "scribseg/errors.hpp"

namespace scribseg::model {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

namespace {

void check_input(const Tensor& x, int ch, const char* who) {
  if (x.rank() != 4) throw ValidationError(std::string(who) + ": input must be NCHW");
  if (x.dim(1) != ch) {
    throw ValidationError(std::string(who) + ": expected " + std::to_string(ch) +
                          " channels, got " + std::to_string(x.dim(1)));
  }
}

// col[(ci*K+ky)*K+kx][y*W+x] = x[ci][y+ky-pad][x+kx-pad], zero outside.
void im2col(const double* x, int C, int H, int W, int K, int pad, double* col) {
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  std::size_t row = 0;
  for (int ci = 0; ci < C; ++ci) {
    const double* xc = x + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx, ++row) {
        double* dst = col + row * hw;
        const int x0 = std::max(0, pad - kx);
        const int x1 = std::min(W, W + pad - kx);
        for (int y = 0; y < H; ++y) {
          const int sy = y + ky - pad;
          double* d = dst + static_cast<std::size_t>(y) * W;
          if (sy < 0 || sy >= H) {
            std::fill(d, d + W, 0.0);
            continue;
          }
          const double* s = xc + static_cast<std::size_t>(sy) * W + (kx - pad);
          if (x0 > 0) std::fill(d, d + x0, 0.0);
          if (x1 > x0) std::copy(s + x0, s + x1, d + x0);
          if (x1 < W) std::fill(d + x1, d + W, 0.0);
        }
      }
    }
  }
}

void col2im_add(const double* col, int C, int H, int W, int K, int pad, double* dx) {
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  std::size_t row = 0;
  for (int ci = 0; ci < C; ++ci) {
    double* xc = dx + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx, ++row) {
        const double* src = col + row * hw;
        const int x0 = std::max(0, pad - kx);
        const int x1 = std::min(W, W + pad - kx);
        for (int y = 0; y < H; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= H) continue;
          const double* s = src + static_cast<std::size_t>(y) * W;
          double* d = xc + static_cast<std::size_t>(sy) * W + (kx - pad);
          for (int xi = x0; xi < x1; ++xi) d[xi] += s[xi];
        }
      }
    }
  }
}

}  // namespace

void Conv2d::setup(int in_channels, int out_channels, int k) {
  in_ch = in_channels;
  out_ch = out_channels;
  ksize = k;
  weight = Tensor({out_ch, in_ch, ksize, ksize});
  bias = Tensor({out_ch});
  grad_weight = Tensor::zeros_like(weight);
  grad_bias = Tensor::zeros_like(bias);
}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_ch) * ksize * ksize;
  const double bound = std::sqrt(6.0 / fan_in);
  for (std::int64_t i = 0; i < weight.size(); ++i) {
    weight[i] = rng.uniform(-bound, bound);
  }
  bias.zero();
}

Tensor Conv2d::forward(const Tensor& x) const {
  check_input(x, in_ch, "Conv2d");
  const int B = static_cast<int>(x.dim(0));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  const int pad = ksize / 2;
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const int ck2 = in_ch * ksize * ksize;

  Tensor y({B, out_ch, H, W});
  std::vector<double> col(static_cast<std::size_t>(ck2) * hw);
  MapConst wm(weight.data(), out_ch, ck2);
  for (int b = 0; b < B; ++b) {
    im2col(x.data() + static_cast<std::size_t>(b) * in_ch * hw, in_ch, H, W, ksize,
           pad, col.data());
    MapConst cm(col.data(), ck2, static_cast<Eigen::Index>(hw));
    MapMat ym(y.data() + static_cast<std::size_t>(b) * out_ch * hw, out_ch,
              static_cast<Eigen::Index>(hw));
    ym.noalias() = wm * cm;
    for (int co = 0; co < out_ch; ++co) ym.row(co).array() += bias[co];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy) {
  const int B = static_cast<int>(x.dim(0));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  const int pad = ksize / 2;
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const int ck2 = in_ch * ksize * ksize;

  Tensor dx = Tensor::zeros_like(x);
  std::vector<double> col(static_cast<std::size_t>(ck2) * hw);
  std::vector<double> dcol(col.size());
  MapConst wm(weight.data(), out_ch, ck2);
  MapMat dwm(grad_weight.data(), out_ch, ck2);
  for (int b = 0; b < B; ++b) {
    im2col(x.data() + static_cast<std::size_t>(b) * in_ch * hw, in_ch, H, W, ksize,
           pad, col.data());
    MapConst cm(col.data(), ck2, static_cast<Eigen::Index>(hw));
    MapConst dym(dy.data() + static_cast<std::size_t>(b) * out_ch * hw, out_ch,
                 static_cast<Eigen::Index>(hw));
    dwm.noalias() += dym * cm.transpose();
    // Ordered scalar sum: Eigen's vectorized reductions peel to the buffer's
    // runtime alignment, which varies across allocations and breaks bitwise
    // run-to-run reproducibility.
    for (int co = 0; co < out_ch; ++co) {
      const double* row = dy.data() + (static_cast<std::size_t>(b) * out_ch + co) * hw;
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += row[i];
      grad_bias[co] += s;
    }
    MapMat dcm(dcol.data(), ck2, static_cast<Eigen::Index>(hw));
    dcm.noalias() = wm.transpose() * dym;
    col2im_add(dcol.data(), in_ch, H, W, ksize, pad,
               dx.data() + static_cast<std::size_t>(b) * in_ch * hw);
  }
  return dx;
}

void Conv2d::register_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &grad_weight});
  out.push_back({prefix + ".bias", &bias, &grad_bias});
}

void ConvTranspose2x2::setup(int in_channels, int out_channels) {
  in_ch = in_channels;
  out_ch = out_channels;
  weight = Tensor({in_ch, out_ch, 2, 2});
  bias = Tensor({out_ch});
  grad_weight = Tensor::zeros_like(weight);
  grad_bias = Tensor::zeros_like(bias);
}

void ConvTranspose2x2::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_ch) * 4.0;
  const double bound = std::sqrt(6.0 / fan_in);
  for (std::int64_t i = 0; i < weight.size(); ++i) {
    weight[i] = rng.uniform(-bound, bound);
  }
  bias.zero();
}

Tensor ConvTranspose2x2::forward(const Tensor& x) const {
  check_input(x, in_ch, "ConvTranspose2x2");
  const int B = static_cast<int>(x.dim(0));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const int oc4 = out_ch * 4;

  Tensor y({B, out_ch, 2 * H, 2 * W});
  std::vector<double> tmp(static_cast<std::size_t>(oc4) * hw);
  MapConst wm(weight.data(), in_ch, oc4);
  for (int b = 0; b < B; ++b) {
    MapConst xm(x.data() + static_cast<std::size_t>(b) * in_ch * hw, in_ch,
                static_cast<Eigen::Index>(hw));
    MapMat tm(tmp.data(), oc4, static_cast<Eigen::Index>(hw));
    tm.noalias() = wm.transpose() * xm;
    double* yb = y.data() + static_cast<std::size_t>(b) * out_ch * 4 * hw;
    for (int co = 0; co < out_ch; ++co) {
      for (int k = 0; k < 4; ++k) {
        const int dy_ = k >> 1, dx_ = k & 1;
        const double* src = tmp.data() + (static_cast<std::size_t>(co) * 4 + k) * hw;
        double* dst = yb + static_cast<std::size_t>(co) * 4 * hw;
        for (int yy = 0; yy < H; ++yy) {
          double* drow = dst + (static_cast<std::size_t>(2 * yy + dy_) * 2 * W) + dx_;
          const double* srow = src + static_cast<std::size_t>(yy) * W;
          for (int xx = 0; xx < W; ++xx) drow[2 * xx] = srow[xx] + bias[co];
        }
      }
    }
  }
  return y;
}

Tensor ConvTranspose2x2::backward(const Tensor& x, const Tensor& dy) {
  const int B = static_cast<int>(x.dim(0));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const int oc4 = out_ch * 4;

  Tensor dx = Tensor::zeros_like(x);
  std::vector<double> tmp(static_cast<std::size_t>(oc4) * hw);
  MapConst wm(weight.data(), in_ch, oc4);
  MapMat dwm(grad_weight.data(), in_ch, oc4);
  for (int b = 0; b < B; ++b) {
    // Gather dy into the [out*4, HW] layout used by the forward GEMM.
    const double* dyb = dy.data() + static_cast<std::size_t>(b) * out_ch * 4 * hw;
    for (int co = 0; co < out_ch; ++co) {
      double gb = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int dy_ = k >> 1, dx_ = k & 1;
        double* dst = tmp.data() + (static_cast<std::size_t>(co) * 4 + k) * hw;
        const double* src = dyb + static_cast<std::size_t>(co) * 4 * hw;
        for (int yy = 0; yy < H; ++yy) {
          const double* srow = src + (static_cast<std::size_t>(2 * yy + dy_) * 2 * W) + dx_;
          double* drow = dst + static_cast<std::size_t>(yy) * W;
          for (int xx = 0; xx < W; ++xx) {
            drow[xx] = srow[2 * xx];
            gb += srow[2 * xx];
          }
        }
      }
      grad_bias[co] += gb;
    }
    MapConst xm(x.data() + static_cast<std::size_t>(b) * in_ch * hw, in_ch,
                static_cast<Eigen::Index>(hw));
    MapConst tm(tmp.data(), oc4, static_cast<Eigen::Index>(hw));
    dwm.noalias() += xm * tm.transpose();
    MapMat dxm(dx.data() + static_cast<std::size_t>(b) * in_ch * hw, in_ch,
               static_cast<Eigen::Index>(hw));
    dxm.noalias() = wm * tm;
  }
  return dx;
}

void ConvTranspose2x2::register_params(const std::string& prefix,
                                       std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &grad_weight});
  out.push_back({prefix + ".bias", &bias, &grad_bias});
}

void InstanceNorm::setup(int num_channels) {
  channels = num_channels;
  gamma = Tensor({channels});
  gamma.fill(1.0);
  beta = Tensor({channels});
  grad_gamma = Tensor::zeros_like(gamma);
  grad_beta = Tensor::zeros_like(beta);
}

Tensor InstanceNorm::forward(const Tensor& x, Cache* cache) const {
  check_input(x, channels, "InstanceNorm");
  const int B = static_cast<int>(x.dim(0));
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);

  Tensor y = Tensor::zeros_like(x);
  Tensor xhat = Tensor::zeros_like(x);
  std::vector<double> invstds(static_cast<std::size_t>(B) * channels);

  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < channels; ++c) {
      const double* src = x.data() + (static_cast<std::size_t>(b) * channels + c) * hw;
      double* xh = xhat.data() + (static_cast<std::size_t>(b) * channels + c) * hw;
      double* dst = y.data() + (static_cast<std::size_t>(b) * channels + c) * hw;
      double mean = 0.0;
      for (std::size_t i = 0; i < hw; ++i) mean += src[i];
      mean /= static_cast<double>(hw);
      double var = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        const double d = src[i] - mean;
        var += d * d;
      }
      var /= static_cast<double>(hw);
      const double invstd = 1.0 / std::sqrt(var + eps);
      invstds[static_cast<std::size_t>(b) * channels + c] = invstd;
      const double g = gamma[c], be = beta[c];
      for (std::size_t i = 0; i < hw; ++i) {
        xh[i] = (src[i] - mean) * invstd;
        dst[i] = g * xh[i] + be;
      }
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->invstd = std::move(invstds);
  }
  return y;
}

Tensor InstanceNorm::backward(const Cache& cache, const Tensor& dy) {
  const Tensor& xhat = cache.xhat;
  const int B = static_cast<int>(dy.dim(0));
  const std::size_t hw = static_cast<std::size_t>(dy.dim(2)) * dy.dim(3);

  Tensor dx = Tensor::zeros_like(dy);
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * hw;
      const double* d = dy.data() + off;
      const double* xh = xhat.data() + off;
      double* out = dx.data() + off;
      double sum_dy = 0.0, sum_dyxh = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += d[i];
        sum_dyxh += d[i] * xh[i];
      }
      grad_beta[c] += sum_dy;
      grad_gamma[c] += sum_dyxh;
      const double n = static_cast<double>(hw);
      const double k = gamma[c] * cache.invstd[static_cast<std::size_t>(b) * channels + c];
      for (std::size_t i = 0; i < hw; ++i) {
        out[i] = k * (d[i] - sum_dy / n - xh[i] * sum_dyxh / n);
      }
    }
  }
  return dx;
}

void InstanceNorm::register_params(const std::string& prefix,
                                   std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
  out.push_back({prefix + ".beta", &beta, &grad_beta});
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  double* d = y.data();
  const std::int64_t n = y.size();
  for (std::int64_t i = 0; i < n; ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = Tensor::zeros_like(dy);
  const std::int64_t n = dy.size();
  for (std::int64_t i = 0; i < n; ++i) dx[i] = y[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

Tensor MaxPool2x2::forward(const Tensor& x, Cache* cache) {
  const int B = static_cast<int>(x.dim(0));
  const int C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  if (H % 2 || W % 2) throw ValidationError("MaxPool2x2: H and W must be even");
  const int oh = H / 2, ow = W / 2;

  Tensor y({B, C, oh, ow});
  std::vector<std::int32_t> argmax(static_cast<std::size_t>(y.size()));
  std::size_t oi = 0;
  for (int bc = 0; bc < B * C; ++bc) {
    const double* plane = x.data() + static_cast<std::size_t>(bc) * H * W;
    for (int yy = 0; yy < oh; ++yy) {
      for (int xx = 0; xx < ow; ++xx, ++oi) {
        int best = (2 * yy) * W + 2 * xx;
        double bv = plane[best];
        const int cand[3] = {(2 * yy) * W + 2 * xx + 1, (2 * yy + 1) * W + 2 * xx,
                             (2 * yy + 1) * W + 2 * xx + 1};
        for (int idx : cand) {
          if (plane[idx] > bv) {
            bv = plane[idx];
            best = idx;
          }
        }
        y[static_cast<std::int64_t>(oi)] = bv;
        argmax[oi] = best;
      }
    }
  }
  if (cache) {
    cache->argmax = std::move(argmax);
    cache->in_shape = x.shape();
  }
  return y;
}

Tensor MaxPool2x2::backward(const Cache& cache, const Tensor& dy) {
  Tensor dx(cache.in_shape);
  const int H = static_cast<int>(cache.in_shape[2]);
  const int W = static_cast<int>(cache.in_shape[3]);
  const std::size_t planes = static_cast<std::size_t>(cache.in_shape[0] * cache.in_shape[1]);
  const std::size_t ohw = static_cast<std::size_t>(dy.dim(2)) * dy.dim(3);
  for (std::size_t p = 0; p < planes; ++p) {
    double* plane = dx.data() + p * H * W;
    const double* src = dy.data() + p * ohw;
    const std::int32_t* am = cache.argmax.data() + p * ohw;
    for (std::size_t i = 0; i < ohw; ++i) plane[am[i]] += src[i];
  }
  return dx;
}

Tensor Dropout::forward(const Tensor& x, double rate, bool active, Rng* rng,
                        Cache* cache) {
  if (!active || rate == 0.0) {
    if (cache) cache->active = false;
    return x;
  }
  if (rate < 0.0 || rate >= 1.0) throw ValidationError("Dropout: rate must be in [0,1)");
  if (!rng) throw ValidationError("Dropout: active dropout needs an rng");
  const double keep = 1.0 - rate;
  Tensor mask = Tensor::zeros_like(x);
  Tensor y = Tensor::zeros_like(x);
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) {
    const double m = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    mask[i] = m;
    y[i] = x[i] * m;
  }
  if (cache) {
    cache->mask = std::move(mask);
    cache->active = true;
  }
  return y;
}

Tensor Dropout::backward(const Cache& cache, const Tensor& dy) {
  if (!cache.active) return dy;
  Tensor dx = Tensor::zeros_like(dy);
  const std::int64_t n = dy.size();
  for (std::int64_t i = 0; i < n; ++i) dx[i] = dy[i] * cache.mask[i];
  return dx;
}

Tensor softmax_channels(const Tensor& z) {
  const int B = static_cast<int>(z.dim(0));
  const int C = static_cast<int>(z.dim(1));
  const std::size_t hw = static_cast<std::size_t>(z.dim(2)) * z.dim(3);
  Tensor y = Tensor::zeros_like(z);
  for (int b = 0; b < B; ++b) {
    const double* zb = z.data() + static_cast<std::size_t>(b) * C * hw;
    double* yb = y.data() + static_cast<std::size_t>(b) * C * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      double mx = zb[i];
      for (int c = 1; c < C; ++c) mx = std::max(mx, zb[c * hw + i]);
      double sum = 0.0;
      for (int c = 0; c < C; ++c) {
        const double e = std::exp(zb[c * hw + i] - mx);
        yb[c * hw + i] = e;
        sum += e;
      }
      for (int c = 0; c < C; ++c) yb[c * hw + i] /= sum;
    }
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy) {
  const int B = static_cast<int>(y.dim(0));
  const int C = static_cast<int>(y.dim(1));
  const std::size_t hw = static_cast<std::size_t>(y.dim(2)) * y.dim(3);
  Tensor dz = Tensor::zeros_like(y);
  for (int b = 0; b < B; ++b) {
    const double* yb = y.data() + static_cast<std::size_t>(b) * C * hw;
    const double* db = dy.data() + static_cast<std::size_t>(b) * C * hw;
    double* out = dz.data() + static_cast<std::size_t>(b) * C * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      double dot = 0.0;
      for (int c = 0; c < C; ++c) dot += db[c * hw + i] * yb[c * hw + i];
      for (int c = 0; c < C; ++c) {
        out[c * hw + i] = yb[c * hw + i] * (db[c * hw + i] - dot);
      }
    }
  }
  return dz;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const int B = static_cast<int>(a.dim(0));
  const int ca = static_cast<int>(a.dim(1)), cb = static_cast<int>(b.dim(1));
  const std::size_t hw = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ValidationError("concat_channels: shape mismatch " + a.shape_str() + " vs " +
                          b.shape_str());
  }
  Tensor out({B, ca + cb, a.dim(2), a.dim(3)});
  for (int bi = 0; bi < B; ++bi) {
    std::copy(a.data() + static_cast<std::size_t>(bi) * ca * hw,
              a.data() + static_cast<std::size_t>(bi + 1) * ca * hw,
              out.data() + static_cast<std::size_t>(bi) * (ca + cb) * hw);
    std::copy(b.data() + static_cast<std::size_t>(bi) * cb * hw,
              b.data() + static_cast<std::size_t>(bi + 1) * cb * hw,
              out.data() + static_cast<std::size_t>(bi) * (ca + cb) * hw + ca * hw);
  }
  return out;
}

void split_channels(const Tensor& d, int ca, Tensor& da, Tensor& db) {
  const int B = static_cast<int>(d.dim(0));
  const int c = static_cast<int>(d.dim(1));
  const int cb = c - ca;
  const std::size_t hw = static_cast<std::size_t>(d.dim(2)) * d.dim(3);
  da = Tensor({B, ca, d.dim(2), d.dim(3)});
  db = Tensor({B, cb, d.dim(2), d.dim(3)});
  for (int bi = 0; bi < B; ++bi) {
    std::copy(d.data() + static_cast<std::size_t>(bi) * c * hw,
              d.data() + static_cast<std::size_t>(bi) * c * hw + static_cast<std::size_t>(ca) * hw,
              da.data() + static_cast<std::size_t>(bi) * ca * hw);
    std::copy(d.data() + static_cast<std::size_t>(bi) * c * hw + static_cast<std::size_t>(ca) * hw,
              d.data() + static_cast<std::size_t>(bi + 1) * c * hw,
              db.data() + static_cast<std::size_t>(bi) * cb * hw);
  }
  return;
}

}  // namespace scribseg::model
