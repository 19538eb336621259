#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scribseg/data/transforms.hpp"
#include "scribseg/data/types.hpp"
#include "scribseg/losses/losses.hpp"
#include "scribseg/model/unet.hpp"

namespace scribseg::train {

enum class EvalDecoder { kMain, kAux };

struct TrainConfig {
  double base_lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 4;
  int max_iterations = 2000;
  double lambda_pls = 0.5;
  double poly_power = 0.9;
  losses::Supervision supervision = losses::Supervision::kPls;
  losses::AlphaMode alpha_mode = losses::AlphaMode::kRandom;
  double alpha_fixed = 0.5;
  std::uint64_t seed = 1;
  EvalDecoder eval_decoder = EvalDecoder::kMain;
  int input_h = 64, input_w = 64;  // slices are resampled to this before forward
  double epsilon_dice = 1e-5;
  bool dice_include_background = true;
  data::AugmentConfig augment;

  void validate() const;
};

struct OptimState {
  std::vector<Tensor> velocity;
  std::int64_t iteration = 0;
};

// A slice the trainer is allowed to see: no dense annotation field exists.
struct TrainSample {
  data::ImageSlice image;
  data::LabelSlice scribble;
};

std::vector<TrainSample> strip_dense(const std::vector<data::SliceSample>& samples);

// Dense labels here feed validation DSC only, never the loss.
struct ValVolume {
  data::ImageVolume image;
  data::DenseLabel dense;
};

struct HistoryRecord {
  std::int64_t iter = 0;
  double lr = 0.0;
  double alpha = 0.0;
  double loss_total = 0.0;
  double loss_scribble = 0.0;
  double loss_aux = 0.0;
};

struct ValidationRecord {
  std::int64_t iter = 0;
  double mean_fg_dsc = 0.0;
};

struct TrainResult {
  std::vector<HistoryRecord> history;
  std::vector<ValidationRecord> validations;
  std::int64_t best_iteration = 0;
  double best_val_dsc = 0.0;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;
};

double poly_lr(double base_lr, std::int64_t iteration, std::int64_t max_iterations,
               double power);

// g' = g + wd*w; v <- momentum*v + g'; w <- w - lr*v. Velocity is created
// lazily on first use.
void sgd_step(const std::vector<model::ParamRef>& params, OptimState& state, double lr,
              double momentum, double weight_decay);

// Runs the full loop; history.jsonl is appended line by line so an abort on a
// non-finite loss still leaves the record on disk. Passing an empty out_dir
// keeps everything in memory (no checkpoints, no history file).
TrainResult train(const TrainConfig& cfg, const model::ModelConfig& mcfg,
                  model::DualBranchUNet& net, const std::vector<TrainSample>& samples,
                  const std::vector<ValVolume>& val_volumes,
                  const std::filesystem::path& out_dir, const std::string& config_hash);

// Slice-wise eval-mode inference: normalize, resample to the network size,
// argmax of the selected decoder, resample labels back, stack.
data::DenseLabel infer_volume(const model::DualBranchUNet& net,
                              const data::ImageVolume& volume, EvalDecoder decoder,
                              int input_h, int input_w);

// Mean DSC over the foreground classes (used for model selection).
double mean_foreground_dsc(const data::DenseLabel& pred, const data::DenseLabel& gt);

}  // namespace scribseg::train
