#include "scribseg/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "scribseg/errors.hpp"
#include "scribseg/metrics/metrics.hpp"
#include "scribseg/model/checkpoint.hpp"

namespace scribseg::train {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (base_lr <= 0.0) throw ValidationError("train: base_lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("train: momentum must be in [0,1)");
  if (weight_decay < 0.0) throw ValidationError("train: weight_decay must be >= 0");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (max_iterations < 0) throw ValidationError("train: max_iterations must be >= 0");
  if (lambda_pls < 0.0) throw ValidationError("train: lambda_pls must be >= 0");
  if (poly_power <= 0.0) throw ValidationError("train: poly_power must be > 0");
  if (alpha_mode == losses::AlphaMode::kFixed &&
      !(alpha_fixed > 0.0 && alpha_fixed < 1.0)) {
    throw ValidationError("train: alpha_fixed must lie in (0,1)");
  }
  if (input_h < 1 || input_w < 1) throw ValidationError("train: input size must be positive");
  if (epsilon_dice <= 0.0) throw ValidationError("train: epsilon_dice must be > 0");
}

std::vector<TrainSample> strip_dense(const std::vector<data::SliceSample>& samples) {
  std::vector<TrainSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.image, s.scribble});
  return out;
}

double poly_lr(double base_lr, std::int64_t iteration, std::int64_t max_iterations,
               double power) {
  if (iteration < 0 || iteration > max_iterations) {
    throw ValidationError("poly_lr: iteration out of range");
  }
  if (max_iterations == 0) return base_lr;
  const double frac =
      1.0 - static_cast<double>(iteration) / static_cast<double>(max_iterations);
  return base_lr * std::pow(frac, power);
}

void sgd_step(const std::vector<model::ParamRef>& params, OptimState& state, double lr,
              double momentum, double weight_decay) {
  if (state.velocity.empty()) {
    state.velocity.reserve(params.size());
    for (const auto& p : params) state.velocity.push_back(Tensor::zeros_like(*p.value));
  }
  if (state.velocity.size() != params.size()) {
    throw ValidationError("sgd_step: optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].value;
    const Tensor& g = *params[i].grad;
    Tensor& v = state.velocity[i];
    if (!g.all_finite()) {
      throw NumericalError("sgd_step: non-finite gradient in " + params[i].name);
    }
    const std::int64_t n = w.size();
    for (std::int64_t j = 0; j < n; ++j) {
      const double gp = g[j] + weight_decay * w[j];
      v[j] = momentum * v[j] + gp;
      w[j] -= lr * v[j];
    }
  }
  ++state.iteration;
}

namespace {

data::ImageSlice slice_of(const data::ImageVolume& vol, int z) {
  data::ImageSlice s;
  s.h = vol.h;
  s.w = vol.w;
  s.v.assign(vol.voxels.begin() + static_cast<std::ptrdiff_t>(z) * vol.h * vol.w,
             vol.voxels.begin() + static_cast<std::ptrdiff_t>(z + 1) * vol.h * vol.w);
  return s;
}

double validate_model(const model::DualBranchUNet& net, const TrainConfig& cfg,
                      const std::vector<ValVolume>& val_volumes) {
  double sum = 0.0;
  for (const ValVolume& v : val_volumes) {
    const data::DenseLabel pred =
        infer_volume(net, v.image, cfg.eval_decoder, cfg.input_h, cfg.input_w);
    sum += mean_foreground_dsc(pred, v.dense);
  }
  return sum / static_cast<double>(val_volumes.size());
}

void write_history_line(std::ofstream& out, const HistoryRecord& r) {
  if (!out.is_open()) return;
  nlohmann::ordered_json j;
  j["iter"] = r.iter;
  j["lr"] = r.lr;
  j["alpha"] = r.alpha;
  j["loss_total"] = r.loss_total;
  j["loss_scribble"] = r.loss_scribble;
  j["loss_aux"] = r.loss_aux;
  out << j.dump() << "\n";
  out.flush();
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const model::ModelConfig& mcfg,
                  model::DualBranchUNet& net, const std::vector<TrainSample>& samples,
                  const std::vector<ValVolume>& val_volumes, const fs::path& out_dir,
                  const std::string& config_hash) {
  cfg.validate();
  mcfg.validate();
  if (samples.empty()) throw ValidationError("train: empty training set");

  net.init_params(cfg.seed);
  Rng batch_rng = Rng::derive(cfg.seed, rng_stream::kBatch);
  Rng augment_rng = Rng::derive(cfg.seed, rng_stream::kAugment);
  Rng dropout_rng = Rng::derive(cfg.seed, rng_stream::kDropout);
  Rng alpha_rng = Rng::derive(cfg.seed, rng_stream::kAlpha);

  losses::LossWeights weights;
  weights.lambda_pls = cfg.lambda_pls;
  weights.epsilon_dice = cfg.epsilon_dice;
  weights.dice_include_background = cfg.dice_include_background;

  const bool persist = !out_dir.empty();
  std::ofstream history_file;
  if (persist) {
    fs::create_directories(out_dir);
    history_file.open(out_dir / "history.jsonl", std::ios::trunc);
    if (!history_file) throw IoError("train: cannot open history file in " + out_dir.string());
  }

  std::vector<model::ParamRef> params = net.params();
  OptimState opt;
  TrainResult result;
  result.best_val_dsc = -1.0;

  const std::int64_t cadence = std::max<std::int64_t>(1, cfg.max_iterations / 20);
  const std::size_t n_samples = samples.size();
  const int B = cfg.batch_size;
  const std::int64_t hw = static_cast<std::int64_t>(cfg.input_h) * cfg.input_w;

  for (std::int64_t it = 0; it < cfg.max_iterations; ++it) {
    Tensor batch({B, 1, cfg.input_h, cfg.input_w});
    losses::LabelBatch scribbles;
    scribbles.b = B;
    scribbles.h = cfg.input_h;
    scribbles.w = cfg.input_w;
    scribbles.labels.resize(static_cast<std::size_t>(B) * hw);
    for (int bi = 0; bi < B; ++bi) {
      const TrainSample& ts = samples[batch_rng.uniform_int(n_samples)];
      data::SliceSample s;
      s.image = ts.image;
      s.scribble = ts.scribble;
      s = data::augment(s, cfg.augment, augment_rng);
      s = data::resize_sample(s, cfg.input_h, cfg.input_w);
      std::copy(s.image.v.begin(), s.image.v.end(), batch.data() + bi * hw);
      std::copy(s.scribble.v.begin(), s.scribble.v.end(),
                scribbles.labels.begin() + static_cast<std::ptrdiff_t>(bi) * hw);
    }

    const double lr = poly_lr(cfg.base_lr, it, cfg.max_iterations, cfg.poly_power);
    const double alpha = losses::sample_alpha(alpha_rng, cfg.alpha_mode, cfg.alpha_fixed);

    model::DualBranchUNet::Cache cache;
    auto out = net.forward(batch, /*train=*/true, &dropout_rng, &cache);

    net.zero_grad();
    Tensor dy1 = Tensor::zeros_like(out.y1);
    Tensor dy2 = Tensor::zeros_like(out.y2);
    losses::LossDiagnostics diag;
    try {
      losses::total_loss(out.y1, out.y2, scribbles, alpha, weights, cfg.supervision,
                         &diag, &dy1, &dy2);
      net.backward(cache, dy1, dy2);
      sgd_step(params, opt, lr, cfg.momentum, cfg.weight_decay);
    } catch (const NumericalError& e) {
      // History up to the failing step is already flushed.
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }

    HistoryRecord rec{it, lr, diag.alpha, diag.loss_total, diag.loss_scribble,
                      diag.loss_aux};
    result.history.push_back(rec);
    write_history_line(history_file, rec);

    if (!val_volumes.empty() && (it + 1) % cadence == 0) {
      const double dsc = validate_model(net, cfg, val_volumes);
      result.validations.push_back({it + 1, dsc});
      if (dsc > result.best_val_dsc) {
        result.best_val_dsc = dsc;
        result.best_iteration = it + 1;
        if (persist) {
          result.best_checkpoint = out_dir / "checkpoint_best";
          model::save_checkpoint(result.best_checkpoint, net, {it + 1, config_hash});
        }
      }
    }
  }

  if (persist) {
    result.final_checkpoint = out_dir / "checkpoint_final";
    model::save_checkpoint(result.final_checkpoint, net,
                           {cfg.max_iterations, config_hash});
    if (result.best_checkpoint.empty()) {
      // No validation ever ran; keep the pair of checkpoints complete.
      result.best_checkpoint = out_dir / "checkpoint_best";
      model::save_checkpoint(result.best_checkpoint, net,
                             {cfg.max_iterations, config_hash});
    }
  }
  return result;
}

data::DenseLabel infer_volume(const model::DualBranchUNet& net,
                              const data::ImageVolume& volume, EvalDecoder decoder,
                              int input_h, int input_w) {
  const data::ImageVolume norm = data::normalize_intensity(volume);
  data::DenseLabel out;
  out.d = volume.d;
  out.h = volume.h;
  out.w = volume.w;
  out.labels.resize(static_cast<std::size_t>(volume.d) * volume.h * volume.w);

  const std::int64_t hw = static_cast<std::int64_t>(input_h) * input_w;
  for (int z = 0; z < volume.d; ++z) {
    const data::ImageSlice rs = data::resize_bilinear(slice_of(norm, z), input_h, input_w);
    Tensor batch({1, 1, input_h, input_w});
    std::copy(rs.v.begin(), rs.v.end(), batch.data());
    const auto pred = net.forward(batch, /*train=*/false, nullptr, nullptr);
    const losses::LabelBatch lb =
        losses::argmax_labels(decoder == EvalDecoder::kMain ? pred.y1 : pred.y2);

    data::LabelSlice ps;
    ps.h = input_h;
    ps.w = input_w;
    ps.v.assign(lb.labels.begin(), lb.labels.begin() + static_cast<std::ptrdiff_t>(hw));
    const data::LabelSlice orig = data::resize_nearest(ps, volume.h, volume.w);
    std::copy(orig.v.begin(), orig.v.end(),
              out.labels.begin() + static_cast<std::ptrdiff_t>(z) * volume.h * volume.w);
  }
  return out;
}

double mean_foreground_dsc(const data::DenseLabel& pred, const data::DenseLabel& gt) {
  if (pred.d != gt.d || pred.h != gt.h || pred.w != gt.w) {
    throw ValidationError("mean_foreground_dsc: shape mismatch");
  }
  double sum = 0.0;
  for (int cls = 1; cls < data::kNumClasses; ++cls) {
    metrics::BinaryVolume bp{pred.d, pred.h, pred.w, {}, {1.0, 1.0, 1.0}};
    metrics::BinaryVolume bg{gt.d, gt.h, gt.w, {}, {1.0, 1.0, 1.0}};
    bp.mask.resize(pred.labels.size());
    bg.mask.resize(gt.labels.size());
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
      bp.mask[i] = pred.labels[i] == cls;
      bg.mask[i] = gt.labels[i] == cls;
    }
    sum += metrics::dsc3d(bp, bg);
  }
  return sum / static_cast<double>(data::kNumClasses - 1);
}

}  // namespace scribseg::train
