#pragma once

#include <cstdint>
#include <vector>

#include "scribseg/rng.hpp"
#include "scribseg/tensor.hpp"

namespace scribseg::losses {

// Integer class targets for a batch of slices. Scribble batches may contain
// the unlabeled marker (255); pseudo-label batches never do.
struct LabelBatch {
  std::int64_t b = 0, h = 0, w = 0;
  std::vector<std::uint8_t> labels;

  std::int64_t size() const { return b * h * w; }
  std::uint8_t operator[](std::int64_t i) const {
    return labels[static_cast<std::size_t>(i)];
  }
};

struct LossWeights {
  double lambda_pls = 0.5;
  double epsilon_dice = 1e-5;
  bool dice_include_background = true;
};

enum class Supervision { kPls, kCps, kCr, kPce };
enum class AlphaMode { kRandom, kFixed };

struct LossDiagnostics {
  double loss_total = 0.0;
  double loss_scribble = 0.0;  // 0.5 * (pce of both branches)
  double loss_aux = 0.0;       // unweighted auxiliary term
  double alpha = 0.0;
};

// All gradient outputs ACCUMULATE into the given tensor (callers pass zeroed
// tensors shaped like y); gradients are w.r.t. probabilities, compose with
// the softmax jacobian to reach logits.

// Mean of -log y at labeled pixels, 0 when no pixel is labeled.
double partial_cross_entropy(const Tensor& y, const LabelBatch& scribble,
                             Tensor* dy = nullptr);

// Soft Dice vs one-hot target, averaged over classes.
double dice_loss(const Tensor& y, const LabelBatch& target, const LossWeights& w,
                 Tensor* dy = nullptr);

// Per-pixel argmax, ties to the smallest class index.
LabelBatch argmax_labels(const Tensor& y);

// argmax of alpha*y1 + (1-alpha)*y2; carries no gradient.
LabelBatch mix_pseudo_label(const Tensor& y1, const Tensor& y2, double alpha);

// 0.5 * (dice(y1, pl) + dice(y2, pl)); pl is treated as a constant.
double pls_loss(const LabelBatch& pl, const Tensor& y1, const Tensor& y2,
                const LossWeights& w, Tensor* dy1 = nullptr, Tensor* dy2 = nullptr);

// Mean squared difference over all pixels and classes.
double cr_loss(const Tensor& y1, const Tensor& y2, Tensor* dy1 = nullptr,
               Tensor* dy2 = nullptr);

// 0.5 * (dice(y1, argmax y2) + dice(y2, argmax y1)), both targets detached.
double cps_loss(const Tensor& y1, const Tensor& y2, const LossWeights& w,
                Tensor* dy1 = nullptr, Tensor* dy2 = nullptr);

double sample_alpha(Rng& rng, AlphaMode mode, double fixed_value);

// The training objective: 0.5*(pce(y1)+pce(y2)) + lambda * aux, where aux is
// the strategy term (pls with the mixed pseudo label by default; pce means no
// auxiliary term at all).
double total_loss(const Tensor& y1, const Tensor& y2, const LabelBatch& scribble,
                  double alpha, const LossWeights& w, Supervision strategy,
                  LossDiagnostics* diag = nullptr, Tensor* dy1 = nullptr,
                  Tensor* dy2 = nullptr);

}  // namespace scribseg::losses
