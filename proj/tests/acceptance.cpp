// End-to-end acceptance gate. Each invocation checks one numbered criterion,
// prints a single PASS/FAIL line and exits 0/1. Criteria 4-6 drive the CLI
// binary, whose path arrives as argv[2].
//
//   acceptance <criterion 1..7> [path-to-cli]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scribseg/data/types.hpp"
#include "scribseg/errors.hpp"
#include "scribseg/losses/losses.hpp"
#include "scribseg/metrics/metrics.hpp"
#include "scribseg/model/layers.hpp"
#include "scribseg/model/unet.hpp"
#include "scribseg/rng.hpp"
#include "scribseg/tensor.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scribseg;

namespace {

std::string g_cli;  // path to the experiment CLI, criteria 4-6 only

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "scribseg_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = g_cli + " " + args + " > " + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// criterion 1: analytic loss gradients w.r.t. logits match central finite
// differences on dual-decoder outputs of the pinned 3-level/width-8 model.

Tensor log_tensor(const Tensor& y) {
  Tensor z = Tensor::zeros_like(y);
  for (std::int64_t i = 0; i < y.size(); ++i) z[i] = std::log(y[i]);
  return z;
}

// Smallest margin between the top-two per-pixel scores; FD steps of 1e-5 must
// not be able to flip any argmax-derived target.
double min_top2_gap(const Tensor& y) {
  const std::int64_t c = y.dim(1), hw = y.dim(2) * y.dim(3);
  double gap = 1e9;
  for (std::int64_t b = 0; b < y.dim(0); ++b) {
    for (std::int64_t px = 0; px < hw; ++px) {
      double best = -1.0, second = -1.0;
      for (std::int64_t k = 0; k < c; ++k) {
        const double v = y[(b * c + k) * hw + px];
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      gap = std::min(gap, best - second);
    }
  }
  return gap;
}

Tensor mix_probs(const Tensor& y1, const Tensor& y2, double alpha) {
  Tensor m = y1;
  m.scale(alpha);
  m.add_scaled(y2, 1.0 - alpha);
  return m;
}

bool criterion1(std::string& detail) {
  model::ModelConfig mc;
  mc.levels = 3;
  mc.base_width = 8;
  mc.in_channels = 1;
  mc.num_classes = 4;

  const double alpha = 0.37;
  model::DualBranchUNet net(mc);
  Tensor y1, y2;
  // Find a seed whose outputs keep every argmax-derived target stable under
  // the FD perturbation (margin >> 2h).
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 20 && !found; ++seed) {
    net.init_params(seed);
    Rng rng(seed * 31 + 7);
    Tensor x({1, 1, 8, 8});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    const auto out = net.forward(x, /*train=*/false, nullptr, nullptr);
    y1 = out.y1;
    y2 = out.y2;
    const double gap = std::min({min_top2_gap(y1), min_top2_gap(y2),
                                 min_top2_gap(mix_probs(y1, y2, alpha))});
    found = gap > 1e-3;
  }
  if (!found) {
    detail = "no seed produced tie-free argmax targets";
    return false;
  }

  losses::LabelBatch scribble{1, 8, 8, {}};
  scribble.labels.resize(64);
  for (int i = 0; i < 64; ++i) {
    scribble.labels[static_cast<std::size_t>(i)] =
        (i % 3 == 0) ? data::kUnlabeled : static_cast<std::uint8_t>(i % 4);
  }
  const losses::LossWeights w;  // lambda 0.5
  const losses::LabelBatch pl = losses::mix_pseudo_label(y1, y2, alpha);
  const losses::LabelBatch a1 = losses::argmax_labels(y1);
  const losses::LabelBatch a2 = losses::argmax_labels(y2);

  const Tensor z1 = log_tensor(y1), z2 = log_tensor(y2);

  struct Case {
    const char* name;
    bool uses_z2;
    std::function<double(const Tensor&, const Tensor&)> value;  // (z1, z2)
    std::function<void(Tensor&, Tensor&)> grads;                // fills dy1, dy2
  };
  const std::vector<Case> cases = {
      {"pce", false,
       [&](const Tensor& a, const Tensor&) {
         return losses::partial_cross_entropy(model::softmax_channels(a), scribble);
       },
       [&](Tensor& d1, Tensor&) { losses::partial_cross_entropy(y1, scribble, &d1); }},
      {"dice", false,
       [&](const Tensor& a, const Tensor&) {
         return losses::dice_loss(model::softmax_channels(a), a2, w);
       },
       [&](Tensor& d1, Tensor&) { losses::dice_loss(y1, a2, w, &d1); }},
      {"pls", true,
       [&](const Tensor& a, const Tensor& b) {
         return losses::pls_loss(pl, model::softmax_channels(a),
                                 model::softmax_channels(b), w);
       },
       [&](Tensor& d1, Tensor& d2) { losses::pls_loss(pl, y1, y2, w, &d1, &d2); }},
      {"cr", true,
       [&](const Tensor& a, const Tensor& b) {
         return losses::cr_loss(model::softmax_channels(a), model::softmax_channels(b));
       },
       [&](Tensor& d1, Tensor& d2) { losses::cr_loss(y1, y2, &d1, &d2); }},
      {"cps", true,
       [&](const Tensor& a, const Tensor& b) {
         // detached targets frozen at the base point
         return 0.5 * (losses::dice_loss(model::softmax_channels(a), a2, w) +
                       losses::dice_loss(model::softmax_channels(b), a1, w));
       },
       [&](Tensor& d1, Tensor& d2) { losses::cps_loss(y1, y2, w, &d1, &d2); }},
      {"total", true,
       [&](const Tensor& a, const Tensor& b) {
         const Tensor pa = model::softmax_channels(a), pb = model::softmax_channels(b);
         return 0.5 * (losses::partial_cross_entropy(pa, scribble) +
                       losses::partial_cross_entropy(pb, scribble)) +
                w.lambda_pls * losses::pls_loss(pl, pa, pb, w);
       },
       [&](Tensor& d1, Tensor& d2) {
         losses::total_loss(y1, y2, scribble, alpha, w, losses::Supervision::kPls,
                            nullptr, &d1, &d2);
       }},
  };

  double worst = 0.0;
  std::string worst_name = "-";
  for (const Case& c : cases) {
    Tensor dy1 = Tensor::zeros_like(y1), dy2 = Tensor::zeros_like(y2);
    c.grads(dy1, dy2);
    const Tensor dz1 = model::softmax_backward(y1, dy1);
    const Tensor fd1 =
        oracle::fd_gradient(z1, [&](const Tensor& z) { return c.value(z, z2); });
    double err = oracle::max_rel_error(dz1, fd1);
    if (c.uses_z2) {
      const Tensor dz2 = model::softmax_backward(y2, dy2);
      const Tensor fd2 =
          oracle::fd_gradient(z2, [&](const Tensor& z) { return c.value(z1, z); });
      err = std::max(err, oracle::max_rel_error(dz2, fd2));
    }
    if (err > worst) {
      worst = err;
      worst_name = c.name;
    }
  }
  detail = fmt("worst rel err %.3e (%s), rtol 1e-3", worst, worst_name.c_str());
  return worst <= 1e-3;
}

// ---------------------------------------------------------------------------
// criterion 2: loss invariants.

Tensor random_probs(Rng& rng, std::int64_t b, std::int64_t c, std::int64_t h,
                    std::int64_t w) {
  Tensor z({b, c, h, w});
  for (std::int64_t i = 0; i < z.size(); ++i) z[i] = rng.uniform(-2.0, 2.0);
  return model::softmax_channels(z);
}

bool criterion2(std::string& detail) {
  std::vector<std::string> fails;
  Rng rng(4242);
  const losses::LossWeights w;

  {  // pce == 0 on a perfect one-hot prediction
    losses::LabelBatch s{1, 4, 4, {}};
    s.labels.resize(16);
    Tensor y({1, 4, 4, 4});
    for (int i = 0; i < 16; ++i) {
      const auto cls = static_cast<std::uint8_t>(i % 4);
      s.labels[static_cast<std::size_t>(i)] = (i % 5 == 0) ? data::kUnlabeled : cls;
      y[cls * 16 + i] = 1.0;
    }
    if (losses::partial_cross_entropy(y, s) != 0.0) {
      fails.push_back("pce not 0 on perfect prediction");
    }
  }
  {  // pce gradient is zero at every unlabeled pixel, nonzero at labeled ones
    const Tensor y = random_probs(rng, 2, 4, 5, 5);
    losses::LabelBatch s{2, 5, 5, {}};
    s.labels.resize(50);
    for (int i = 0; i < 50; ++i) {
      s.labels[static_cast<std::size_t>(i)] =
          (i % 2 == 0) ? data::kUnlabeled : static_cast<std::uint8_t>(i % 4);
    }
    Tensor dy = Tensor::zeros_like(y);
    losses::partial_cross_entropy(y, s, &dy);
    const std::int64_t hw = 25;
    for (std::int64_t b = 0; b < 2 && fails.empty(); ++b) {
      for (std::int64_t px = 0; px < hw; ++px) {
        const std::uint8_t lab = s[b * hw + px];
        double mag = 0.0;
        for (std::int64_t c = 0; c < 4; ++c) {
          mag += std::fabs(dy[(b * 4 + c) * hw + px]);
        }
        if (lab == data::kUnlabeled && mag != 0.0) {
          fails.push_back("pce gradient leaks outside labeled set");
          break;
        }
        if (lab != data::kUnlabeled && mag == 0.0) {
          fails.push_back("pce gradient vanishes at a labeled pixel");
          break;
        }
      }
    }
  }
  {  // PL invariant under alpha when both decoders agree on the argmax
    const Tensor y1 = random_probs(rng, 1, 4, 6, 6);
    Tensor y2 = y1;
    const losses::LabelBatch a1 = losses::argmax_labels(y1);
    for (std::int64_t px = 0; px < 36; ++px) {  // same argmax, different mass
      for (std::int64_t c = 0; c < 4; ++c) {
        const bool top = a1[px] == c;
        y2[c * 36 + px] = 0.5 * y2[c * 36 + px] + (top ? 0.5 : 0.0);
      }
    }
    for (const double a : {0.01, 0.25, 0.5, 0.75, 0.99}) {
      const losses::LabelBatch pl = losses::mix_pseudo_label(y1, y2, a);
      if (pl.labels != a1.labels) {
        fails.push_back(fmt("PL changes with alpha=%.2f despite agreeing argmaxes", a));
        break;
      }
    }
  }
  {  // stop-gradient: pls grads are exactly the dice grads vs a constant PL
    const Tensor y1 = random_probs(rng, 1, 4, 6, 6);
    const Tensor y2 = random_probs(rng, 1, 4, 6, 6);
    const losses::LabelBatch pl = losses::mix_pseudo_label(y1, y2, 0.37);
    Tensor d1 = Tensor::zeros_like(y1), d2 = Tensor::zeros_like(y2);
    losses::pls_loss(pl, y1, y2, w, &d1, &d2);
    Tensor g1 = Tensor::zeros_like(y1), g2 = Tensor::zeros_like(y2);
    losses::dice_loss(y1, pl, w, &g1);
    losses::dice_loss(y2, pl, w, &g2);
    g1.scale(0.5);
    g2.scale(0.5);
    g1.add_scaled(d1, -1.0);
    g2.add_scaled(d2, -1.0);
    if (g1.abs_max() > 1e-12 || g2.abs_max() > 1e-12) {
      fails.push_back("pls gradient has a path beyond dice vs constant PL");
    }
  }
  {  // dice_loss stays in [0, 1]
    for (int t = 0; t < 50; ++t) {
      const Tensor y = random_probs(rng, 1, 4, 5, 5);
      losses::LabelBatch tgt{1, 5, 5, {}};
      tgt.labels.resize(25);
      for (auto& l : tgt.labels) l = static_cast<std::uint8_t>(rng.uniform_int(4));
      const double v = losses::dice_loss(y, tgt, w);
      if (!(v >= 0.0 && v <= 1.0)) {
        fails.push_back(fmt("dice_loss out of [0,1]: %.6f", v));
        break;
      }
    }
  }
  {  // objective decomposition: total == 0.5*(pce1+pce2) + lambda*aux
    const Tensor y1 = random_probs(rng, 2, 4, 6, 6);
    const Tensor y2 = random_probs(rng, 2, 4, 6, 6);
    losses::LabelBatch s{2, 6, 6, {}};
    s.labels.resize(72);
    for (int i = 0; i < 72; ++i) {
      s.labels[static_cast<std::size_t>(i)] =
          (i % 4 == 0) ? static_cast<std::uint8_t>(i % 5 % 4) : data::kUnlabeled;
    }
    const double alpha = 0.61;
    const double scrib = 0.5 * (losses::partial_cross_entropy(y1, s) +
                                losses::partial_cross_entropy(y2, s));
    for (const double lambda : {0.5, 0.2}) {
      losses::LossWeights lw;
      lw.lambda_pls = lambda;
      const struct {
        losses::Supervision strat;
        double aux;
      } arms[] = {
          {losses::Supervision::kPls,
           losses::pls_loss(losses::mix_pseudo_label(y1, y2, alpha), y1, y2, lw)},
          {losses::Supervision::kCps, losses::cps_loss(y1, y2, lw)},
          {losses::Supervision::kCr, losses::cr_loss(y1, y2)},
      };
      for (const auto& arm : arms) {
        losses::LossDiagnostics diag;
        const double total = losses::total_loss(y1, y2, s, alpha, lw, arm.strat, &diag);
        if (std::fabs(total - (scrib + lambda * arm.aux)) > 1e-6 ||
            std::fabs(diag.loss_scribble - scrib) > 1e-6 ||
            std::fabs(diag.loss_aux - arm.aux) > 1e-6) {
          fails.push_back("total != scribble + lambda * aux");
        }
      }
    }
  }

  if (fails.empty()) {
    detail = "pce perfect/masked-gradient, PL alpha invariance, stop-gradient, "
             "dice bounds, decomposition at 1e-6";
    return true;
  }
  detail = fails.front() + fmt(" (+%zu more)", fails.size() - 1);
  return false;
}

// ---------------------------------------------------------------------------
// criterion 3: dsc3d / hd95 equal the brute-force oracles exactly.

bool criterion3(std::string& detail) {
  Rng rng(99);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    metrics::BinaryVolume p, g;
    p.d = static_cast<std::int64_t>(rng.uniform_int(16)) + 1;
    p.h = static_cast<std::int64_t>(rng.uniform_int(16)) + 1;
    p.w = static_cast<std::int64_t>(rng.uniform_int(16)) + 1;
    if (t % 2 == 1) {  // anisotropic voxels
      p.spacing = {rng.uniform(0.5, 10.0), rng.uniform(0.5, 10.0),
                   rng.uniform(0.5, 10.0)};
    }
    g = p;
    const double dens = rng.uniform(0.05, 0.6);
    const auto n = static_cast<std::size_t>(p.d * p.h * p.w);
    p.mask.resize(n);
    g.mask.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.mask[i] = rng.bernoulli(dens);
      g.mask[i] = rng.bernoulli(dens);
    }

    const double got_dsc = metrics::dsc3d(p, g);
    if (got_dsc != oracle::dsc(p, g)) {
      detail = fmt("dsc mismatch on pair %d", t);
      return false;
    }
    const metrics::Hd95Result got = metrics::hd95(p, g);
    if (p.empty() || g.empty()) {
      const bool both = p.empty() && g.empty();
      const double dz = static_cast<double>(p.d) * p.spacing[0];
      const double dy = static_cast<double>(p.h) * p.spacing[1];
      const double dx = static_cast<double>(p.w) * p.spacing[2];
      const double want = both ? 0.0 : std::sqrt(dz * dz + dy * dy + dx * dx);
      if (got.value != want || got.sentinel == both) {
        detail = fmt("hd95 empty-mask convention broken on pair %d", t);
        return false;
      }
    } else if (got.value != oracle::hd95(p, g) || got.sentinel) {
      detail = fmt("hd95 mismatch on pair %d", t);
      return false;
    }
    ++checked;
  }
  detail = fmt("%d random pairs up to 16^3, exact equality", checked);
  return checked == 200;
}

// ---------------------------------------------------------------------------
// criteria 4-6: CLI-level runs.

double arm_mean_dsc(const json& report, const std::string& name,
                    const std::string& decoder) {
  for (const json& a : report.at("arms")) {
    if (a.at("name") == name && a.at("decoder") == decoder && a.at("complete")) {
      return a.at("aggregate").at("dsc").at("Mean").at("mean").get<double>();
    }
  }
  throw ValidationError("arm " + name + "/" + decoder + " missing or incomplete");
}

bool criterion4(std::string& detail) {
  const fs::path dir = scratch_dir("c4");
  const int rc = run_cli("ablate-supervision --out " + (dir / "run").string() +
                             " --set folds=2 --set 'strategies=[\"pce\",\"pls\"]'",
                         dir / "cli.log");
  if (rc != 0) {
    detail = fmt("CLI exited %d (see %s)", rc, (dir / "cli.log").c_str());
    return false;
  }
  const json report = read_json(dir / "run" / "report.json");
  const double pce = arm_mean_dsc(report, "pce", "main");
  const double pls = arm_mean_dsc(report, "pls", "main");
  detail = fmt("pls %.4f vs pce %.4f (need pls >= 0.80 and margin >= 0.03)", pls, pce);
  return pls >= 0.80 && pls - pce >= 0.03;
}

bool criterion5(std::string& detail) {
  const fs::path dir = scratch_dir("c5");
  const std::string reduce =
      " --set folds=2 --set train.max_iterations=200 --set data.synth.n_patients=8";

  int rc = run_cli("ablate-supervision --out " + (dir / "sup").string() + reduce,
                   dir / "sup.log");
  if (rc != 0) {
    detail = fmt("supervision ablation exited %d", rc);
    return false;
  }
  rc = run_cli("ablate-lambda --out " + (dir / "lam").string() + reduce, dir / "lam.log");
  if (rc != 0) {
    detail = fmt("lambda ablation exited %d", rc);
    return false;
  }

  const json sup = read_json(dir / "sup" / "report.json");
  if (!sup.at("controlled_comparison").at("pass").get<bool>()) {
    detail = "supervision controlled-comparison hash check failed";
    return false;
  }
  std::set<std::pair<std::string, std::string>> rows;
  for (const json& a : sup.at("arms")) {
    if (!a.at("complete").get<bool>()) {
      detail = "incomplete supervision arm " + a.at("name").get<std::string>();
      return false;
    }
    // 8 patients x 2 frames each, every patient in the test split of exactly
    // one of the 2 folds.
    if (a.at("aggregate").at("n_cases").get<int>() != 16) {
      detail = "supervision arm with wrong case count";
      return false;
    }
    rows.emplace(a.at("name").get<std::string>(), a.at("decoder").get<std::string>());
  }
  const std::set<std::pair<std::string, std::string>> want = {
      {"pce", "main"},       {"cr", "main"},        {"cps", "main"},
      {"pls-fixed", "main"}, {"pls-fixed", "aux"},  {"pls", "main"},
      {"pls", "aux"}};
  if (rows != want) {
    detail = "supervision rows wrong; both pls decoder rows are required";
    return false;
  }

  const json lam = read_json(dir / "lam" / "report.json");
  if (!lam.at("controlled_comparison").at("pass").get<bool>()) {
    detail = "lambda controlled-comparison hash check failed";
    return false;
  }
  std::vector<double> lambdas;
  for (const json& a : lam.at("arms")) {
    if (!a.at("complete").get<bool>()) {
      detail = "incomplete lambda arm " + a.at("name").get<std::string>();
      return false;
    }
    lambdas.push_back(a.at("lambda").get<double>());
  }
  const std::vector<double> want_l = {0.01, 0.1, 0.2, 0.3, 0.5, 1.0};
  if (lambdas != want_l) {
    detail = "lambda arms are not the six-point sweep in ascending order";
    return false;
  }
  const std::string sweep = read_text(dir / "lam" / "lambda_sweep.csv");
  const auto sweep_lines = std::count(sweep.begin(), sweep.end(), '\n');
  const std::string csv = read_text(dir / "sup" / "report.csv");
  const auto csv_lines = std::count(csv.begin(), csv.end(), '\n');
  if (sweep_lines != 7 || csv_lines != 8) {
    detail = fmt("report shapes wrong (sweep %ld lines, supervision csv %ld lines)",
                 static_cast<long>(sweep_lines), static_cast<long>(csv_lines));
    return false;
  }
  detail = "5 strategies (7 rows incl. pls main+aux) and 6-point lambda sweep, "
           "controlled hashes pass";
  return true;
}

bool criterion6(std::string& detail) {
  const fs::path dir = scratch_dir("c6");
  const std::string reduce =
      " --set folds=2 --set train.max_iterations=100 --set data.synth.n_patients=4";
  for (const char* run : {"a", "b"}) {
    const int rc = run_cli("cv --out " + (dir / run).string() + reduce,
                           dir / (std::string(run) + ".log"));
    if (rc != 0) {
      detail = fmt("cv run %s exited %d", run, rc);
      return false;
    }
  }
  const std::string a = read_text(dir / "a" / "report.csv");
  const std::string b = read_text(dir / "b" / "report.csv");
  if (a.empty() || a != b) {
    detail = "report.csv differs between identical runs";
    return false;
  }
  detail = fmt("two cv runs, report.csv byte-identical (%zu bytes)", a.size());
  return true;
}

// ---------------------------------------------------------------------------
// criterion 7: exhaustive sign-flip significance on a constant shift.

bool criterion7(std::string& detail) {
  std::vector<double> a, b;
  Rng rng(5);
  for (int i = 0; i < 8; ++i) {
    const double base = rng.uniform(0.5, 0.9);
    b.push_back(base);
    a.push_back(base + 0.05);
  }
  const metrics::PairedTestResult r = metrics::paired_test(a, b);
  detail = fmt("n=8 constant shift: p=%.10g, expect %.10g exactly", r.p_value,
               2.0 / 256.0);
  return r.exhaustive && r.p_value == 2.0 / 256.0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <criterion 1..7> [cli-path]\n", argv[0]);
    return 2;
  }
  const int criterion = std::atoi(argv[1]);
  if (argc > 2) g_cli = argv[2];
  if (criterion >= 4 && criterion <= 6 && g_cli.empty()) {
    std::fprintf(stderr, "criterion %d needs the CLI path as argv[2]\n", criterion);
    return 2;
  }

  bool pass = false;
  std::string detail;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (criterion) {
      case 1: pass = criterion1(detail); break;
      case 2: pass = criterion2(detail); break;
      case 3: pass = criterion3(detail); break;
      case 4: pass = criterion4(detail); break;
      case 5: pass = criterion5(detail); break;
      case 6: pass = criterion6(detail); break;
      case 7: pass = criterion7(detail); break;
      default:
        std::fprintf(stderr, "unknown criterion %d\n", criterion);
        return 2;
    }
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %d: %s — %s [%.1f s]\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  return pass ? 0 : 1;
}
