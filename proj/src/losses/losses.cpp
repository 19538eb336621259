#include "scribseg/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scribseg/data/types.hpp"
#include "scribseg/errors.hpp"

namespace scribseg::losses {

namespace {

constexpr double kProbFloor = 1e-12;

void check_pair(const Tensor& y, const LabelBatch& t, const char* who) {
  if (y.rank() != 4) throw ValidationError(std::string(who) + ": prediction must be [B,C,H,W]");
  if (y.dim(0) != t.b || y.dim(2) != t.h || y.dim(3) != t.w) {
    throw ValidationError(std::string(who) + ": prediction " + y.shape_str() +
                          " does not match target batch " + std::to_string(t.b) + "x" +
                          std::to_string(t.h) + "x" + std::to_string(t.w));
  }
}

void check_same(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(who) + ": shape mismatch " + a.shape_str() +
                          " vs " + b.shape_str());
  }
}

// Gradients accumulate scale * d(term)/dy; the returned value is unscaled.
double pce_term(const Tensor& y, const LabelBatch& s, double scale, Tensor* dy) {
  check_pair(y, s, "partial_cross_entropy");
  const std::int64_t B = y.dim(0), C = y.dim(1);
  const std::int64_t hw = y.dim(2) * y.dim(3);

  std::int64_t labeled = 0;
  for (std::int64_t i = 0; i < s.size(); ++i) {
    const std::uint8_t v = s[i];
    if (v == data::kUnlabeled) continue;
    if (v >= C) {
      throw ValidationError("partial_cross_entropy: class id " + std::to_string(v) +
                            " out of range for C=" + std::to_string(C));
    }
    ++labeled;
  }
  if (labeled == 0) return 0.0;

  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(labeled);
  for (std::int64_t bi = 0; bi < B; ++bi) {
    for (std::int64_t p = 0; p < hw; ++p) {
      const std::uint8_t v = s[bi * hw + p];
      if (v == data::kUnlabeled) continue;
      const std::int64_t yi = (bi * C + v) * hw + p;
      const double prob = y[yi];
      loss -= std::log(std::max(prob, kProbFloor));
      if (dy && prob > kProbFloor) (*dy)[yi] -= scale * inv_n / prob;
    }
  }
  return loss * inv_n;
}

double dice_term(const Tensor& y, const LabelBatch& t, const LossWeights& w,
                 double scale, Tensor* dy) {
  check_pair(y, t, "dice_loss");
  const std::int64_t B = y.dim(0), C = y.dim(1);
  const std::int64_t hw = y.dim(2) * y.dim(3);
  const double eps = w.epsilon_dice;
  const std::int64_t c0 = w.dice_include_background ? 0 : 1;
  const std::int64_t n_classes = C - c0;

  std::vector<double> inter(static_cast<std::size_t>(C), 0.0);
  std::vector<double> sum_y(static_cast<std::size_t>(C), 0.0);
  std::vector<double> sum_t(static_cast<std::size_t>(C), 0.0);
  for (std::int64_t bi = 0; bi < B; ++bi) {
    for (std::int64_t p = 0; p < hw; ++p) {
      const std::uint8_t v = t[bi * hw + p];
      if (v >= C) {
        throw ValidationError("dice_loss: target class id " + std::to_string(v) +
                              " out of range for C=" + std::to_string(C));
      }
      sum_t[v] += 1.0;
      inter[v] += y[(bi * C + v) * hw + p];
      for (std::int64_t c = 0; c < C; ++c) sum_y[static_cast<std::size_t>(c)] += y[(bi * C + c) * hw + p];
    }
  }

  double loss = 0.0;
  std::vector<double> num(static_cast<std::size_t>(C)), den(static_cast<std::size_t>(C));
  for (std::int64_t c = c0; c < C; ++c) {
    num[static_cast<std::size_t>(c)] = 2.0 * inter[static_cast<std::size_t>(c)] + eps;
    den[static_cast<std::size_t>(c)] =
        sum_y[static_cast<std::size_t>(c)] + sum_t[static_cast<std::size_t>(c)] + eps;
    loss += 1.0 - num[static_cast<std::size_t>(c)] / den[static_cast<std::size_t>(c)];
  }
  loss /= static_cast<double>(n_classes);

  if (dy) {
    const double k = scale / static_cast<double>(n_classes);
    for (std::int64_t bi = 0; bi < B; ++bi) {
      for (std::int64_t p = 0; p < hw; ++p) {
        const std::uint8_t v = t[bi * hw + p];
        for (std::int64_t c = c0; c < C; ++c) {
          const double d = den[static_cast<std::size_t>(c)];
          const double t_ic = (v == c) ? 1.0 : 0.0;
          (*dy)[(bi * C + c) * hw + p] -=
              k * (2.0 * t_ic * d - num[static_cast<std::size_t>(c)]) / (d * d);
        }
      }
    }
  }
  return loss;
}

double cr_term(const Tensor& y1, const Tensor& y2, double scale, Tensor* dy1,
               Tensor* dy2) {
  check_same(y1, y2, "cr_loss");
  const std::int64_t n = y1.size();
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = y1[i] - y2[i];
    loss += d * d;
    if (dy1) (*dy1)[i] += scale * 2.0 * d * inv_n;
    if (dy2) (*dy2)[i] -= scale * 2.0 * d * inv_n;
  }
  return loss * inv_n;
}

double cps_term(const Tensor& y1, const Tensor& y2, const LossWeights& w,
                double scale, Tensor* dy1, Tensor* dy2) {
  check_same(y1, y2, "cps_loss");
  const LabelBatch pl1 = argmax_labels(y1);
  const LabelBatch pl2 = argmax_labels(y2);
  const double d1 = dice_term(y1, pl2, w, 0.5 * scale, dy1);
  const double d2 = dice_term(y2, pl1, w, 0.5 * scale, dy2);
  return 0.5 * (d1 + d2);
}

double pls_term(const LabelBatch& pl, const Tensor& y1, const Tensor& y2,
                const LossWeights& w, double scale, Tensor* dy1, Tensor* dy2) {
  check_same(y1, y2, "pls_loss");
  const double d1 = dice_term(y1, pl, w, 0.5 * scale, dy1);
  const double d2 = dice_term(y2, pl, w, 0.5 * scale, dy2);
  return 0.5 * (d1 + d2);
}

}  // namespace

double partial_cross_entropy(const Tensor& y, const LabelBatch& scribble, Tensor* dy) {
  return pce_term(y, scribble, 1.0, dy);
}

double dice_loss(const Tensor& y, const LabelBatch& target, const LossWeights& w,
                 Tensor* dy) {
  return dice_term(y, target, w, 1.0, dy);
}

LabelBatch argmax_labels(const Tensor& y) {
  const std::int64_t B = y.dim(0), C = y.dim(1);
  const std::int64_t hw = y.dim(2) * y.dim(3);
  LabelBatch out;
  out.b = B;
  out.h = y.dim(2);
  out.w = y.dim(3);
  out.labels.resize(static_cast<std::size_t>(B * hw));
  for (std::int64_t bi = 0; bi < B; ++bi) {
    for (std::int64_t p = 0; p < hw; ++p) {
      std::int64_t best = 0;
      double bv = y[(bi * C) * hw + p];
      for (std::int64_t c = 1; c < C; ++c) {
        const double v = y[(bi * C + c) * hw + p];
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      out.labels[static_cast<std::size_t>(bi * hw + p)] = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

LabelBatch mix_pseudo_label(const Tensor& y1, const Tensor& y2, double alpha) {
  check_same(y1, y2, "mix_pseudo_label");
  const std::int64_t B = y1.dim(0), C = y1.dim(1);
  const std::int64_t hw = y1.dim(2) * y1.dim(3);
  LabelBatch out;
  out.b = B;
  out.h = y1.dim(2);
  out.w = y1.dim(3);
  out.labels.resize(static_cast<std::size_t>(B * hw));
  for (std::int64_t bi = 0; bi < B; ++bi) {
    for (std::int64_t p = 0; p < hw; ++p) {
      std::int64_t best = 0;
      double bv = alpha * y1[(bi * C) * hw + p] + (1.0 - alpha) * y2[(bi * C) * hw + p];
      for (std::int64_t c = 1; c < C; ++c) {
        const double v =
            alpha * y1[(bi * C + c) * hw + p] + (1.0 - alpha) * y2[(bi * C + c) * hw + p];
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      out.labels[static_cast<std::size_t>(bi * hw + p)] = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

double pls_loss(const LabelBatch& pl, const Tensor& y1, const Tensor& y2,
                const LossWeights& w, Tensor* dy1, Tensor* dy2) {
  return pls_term(pl, y1, y2, w, 1.0, dy1, dy2);
}

double cr_loss(const Tensor& y1, const Tensor& y2, Tensor* dy1, Tensor* dy2) {
  return cr_term(y1, y2, 1.0, dy1, dy2);
}

double cps_loss(const Tensor& y1, const Tensor& y2, const LossWeights& w, Tensor* dy1,
                Tensor* dy2) {
  return cps_term(y1, y2, w, 1.0, dy1, dy2);
}

double sample_alpha(Rng& rng, AlphaMode mode, double fixed_value) {
  if (mode == AlphaMode::kFixed) {
    if (!(fixed_value > 0.0 && fixed_value < 1.0)) {
      throw ValidationError("sample_alpha: fixed value must lie in (0,1), got " +
                            std::to_string(fixed_value));
    }
    return fixed_value;
  }
  return rng.uniform_open();
}

double total_loss(const Tensor& y1, const Tensor& y2, const LabelBatch& scribble,
                  double alpha, const LossWeights& w, Supervision strategy,
                  LossDiagnostics* diag, Tensor* dy1, Tensor* dy2) {
  const double pce1 = pce_term(y1, scribble, 0.5, dy1);
  const double pce2 = pce_term(y2, scribble, 0.5, dy2);
  const double scrib = 0.5 * (pce1 + pce2);

  double aux = 0.0;
  const double lambda = w.lambda_pls;
  switch (strategy) {
    case Supervision::kPls: {
      const LabelBatch pl = mix_pseudo_label(y1, y2, alpha);
      aux = pls_term(pl, y1, y2, w, lambda, dy1, dy2);
      break;
    }
    case Supervision::kCps:
      aux = cps_term(y1, y2, w, lambda, dy1, dy2);
      break;
    case Supervision::kCr:
      aux = cr_term(y1, y2, lambda, dy1, dy2);
      break;
    case Supervision::kPce:
      break;
  }

  const double total = strategy == Supervision::kPce ? scrib : scrib + lambda * aux;
  if (diag) {
    diag->loss_total = total;
    diag->loss_scribble = scrib;
    diag->loss_aux = aux;
    diag->alpha = alpha;
  }
  if (!std::isfinite(total)) throw NumericalError("total_loss: non-finite loss value");
  return total;
}

}  // namespace scribseg::losses
