#include "scribseg/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "scribseg/data/dataset.hpp"
#include "scribseg/data/folds.hpp"
#include "scribseg/errors.hpp"
#include "scribseg/model/checkpoint.hpp"
#include "scribseg/train/train.hpp"

namespace scribseg::harness {

namespace fs = std::filesystem;

namespace {

constexpr int kMaxValidationPatients = 4;

std::string case_id_of(const data::FrameRecord& rec) {
  return "patient_" + rec.image.patient_id + "_frame_" + rec.image.frame_id;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

void write_resolved_config(const Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_text(out_dir / "config.json", cfg.dump(2) + "\n");
}

Config structure_to_json(const metrics::StructureMetrics& s) {
  return Config{{"dsc", s.dsc},
                {"hd95", s.hd95},
                {"pred_empty", s.pred_empty},
                {"gt_empty", s.gt_empty},
                {"hd95_sentinel", s.hd95_sentinel}};
}

metrics::StructureMetrics structure_from_json(const Config& j) {
  metrics::StructureMetrics s;
  s.dsc = j.at("dsc").get<double>();
  s.hd95 = j.at("hd95").get<double>();
  s.pred_empty = j.at("pred_empty").get<bool>();
  s.gt_empty = j.at("gt_empty").get<bool>();
  s.hd95_sentinel = j.at("hd95_sentinel").get<bool>();
  return s;
}

Config case_to_json(const metrics::CaseMetrics& c) {
  return Config{{"case_id", c.case_id},
                {"RV", structure_to_json(c.structures[0])},
                {"Myo", structure_to_json(c.structures[1])},
                {"LV", structure_to_json(c.structures[2])},
                {"mean_dsc", c.mean_dsc()},
                {"mean_hd95", c.mean_hd95()}};
}

metrics::CaseMetrics case_from_json(const Config& j) {
  metrics::CaseMetrics c;
  c.case_id = j.at("case_id").get<std::string>();
  c.structures[0] = structure_from_json(j.at("RV"));
  c.structures[1] = structure_from_json(j.at("Myo"));
  c.structures[2] = structure_from_json(j.at("LV"));
  return c;
}

Config table_to_json(const metrics::AggregateTable& t) {
  static constexpr const char* kCols[4] = {"RV", "Myo", "LV", "Mean"};
  Config dsc, hd95;
  for (int i = 0; i < 4; ++i) {
    dsc[kCols[i]] = Config{{"mean", t.dsc[static_cast<std::size_t>(i)].mean},
                           {"std", t.dsc[static_cast<std::size_t>(i)].stddev}};
    hd95[kCols[i]] = Config{{"mean", t.hd95[static_cast<std::size_t>(i)].mean},
                            {"std", t.hd95[static_cast<std::size_t>(i)].stddev}};
  }
  return Config{{"dsc", dsc},
                {"hd95", hd95},
                {"n_cases", t.n_cases},
                {"n_hd95_sentinel", t.n_hd95_sentinel}};
}

metrics::AggregateTable table_from_json(const Config& j) {
  static constexpr const char* kCols[4] = {"RV", "Myo", "LV", "Mean"};
  metrics::AggregateTable t;
  for (int i = 0; i < 4; ++i) {
    t.dsc[static_cast<std::size_t>(i)] = {j.at("dsc").at(kCols[i]).at("mean").get<double>(),
                                          j.at("dsc").at(kCols[i]).at("std").get<double>()};
    t.hd95[static_cast<std::size_t>(i)] = {
        j.at("hd95").at(kCols[i]).at("mean").get<double>(),
        j.at("hd95").at(kCols[i]).at("std").get<double>()};
  }
  t.n_cases = j.at("n_cases").get<int>();
  t.n_hd95_sentinel = j.at("n_hd95_sentinel").get<int>();
  return t;
}

struct FoldRun {
  int fold = 0;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
  std::vector<metrics::CaseMetrics> cases_main, cases_aux;
};

FoldRun run_fold(const Config& arm_cfg, const std::vector<data::FrameRecord>& frames,
                 const data::FoldSplit& split, int fold, bool eval_both,
                 const fs::path& fold_dir) {
  FoldRun run;
  run.fold = fold;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const model::ModelConfig mcfg = to_model_config(arm_cfg);
    const train::TrainConfig tcfg = to_train_config(arm_cfg);
    const std::string hash = config_hash(arm_cfg);

    std::vector<data::FrameRecord> train_frames;
    std::vector<const data::FrameRecord*> test_frames;
    for (const auto& rec : frames) {
      if (split.fold_of(rec.image.patient_id) == fold) {
        test_frames.push_back(&rec);
      } else {
        data::FrameRecord norm = rec;
        norm.image = data::normalize_intensity(rec.image);
        norm.dense.reset();  // the trainer never sees dense labels
        train_frames.push_back(std::move(norm));
      }
    }
    if (train_frames.empty() || test_frames.empty()) {
      throw ValidationError("fold " + std::to_string(fold) + " leaves an empty split");
    }

    const std::vector<train::TrainSample> samples =
        train::strip_dense(data::extract_slices(train_frames, /*include_dense=*/false));

    // Validation volumes: first few training patients, first frame each,
    // drawn from the raw (un-normalized) records since inference normalizes.
    std::vector<train::ValVolume> val;
    std::vector<std::string> seen;
    for (const auto& rec : frames) {
      if (split.fold_of(rec.image.patient_id) == fold || !rec.dense) continue;
      if (std::find(seen.begin(), seen.end(), rec.image.patient_id) != seen.end()) continue;
      seen.push_back(rec.image.patient_id);
      val.push_back({rec.image, *rec.dense});
      if (seen.size() >= kMaxValidationPatients) break;
    }

    model::DualBranchUNet net(mcfg);
    train::train(tcfg, mcfg, net, samples, val, fold_dir, hash);

    for (const data::FrameRecord* rec : test_frames) {
      if (!rec->dense) {
        throw ValidationError("test case " + case_id_of(*rec) + " has no dense labels");
      }
      const data::DenseLabel pred_main = train::infer_volume(
          net, rec->image, train::EvalDecoder::kMain, tcfg.input_h, tcfg.input_w);
      run.cases_main.push_back(metrics::evaluate_case(pred_main, *rec->dense,
                                                      rec->image.spacing, case_id_of(*rec)));
      if (eval_both) {
        const data::DenseLabel pred_aux = train::infer_volume(
            net, rec->image, train::EvalDecoder::kAux, tcfg.input_h, tcfg.input_w);
        run.cases_aux.push_back(metrics::evaluate_case(pred_aux, *rec->dense,
                                                       rec->image.spacing, case_id_of(*rec)));
      }
    }
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Per-fold record; wall time lives here, never in the consolidated report.
  Config rec{{"fold", fold},
             {"config_hash", config_hash(arm_cfg)},
             {"ok", run.ok},
             {"error", run.error},
             {"wall_seconds", run.wall_seconds},
             {"cases", Config::array()},
             {"cases_aux", Config::array()}};
  for (const auto& c : run.cases_main) rec["cases"].push_back(case_to_json(c));
  for (const auto& c : run.cases_aux) rec["cases_aux"].push_back(case_to_json(c));
  fs::create_directories(fold_dir);
  write_text(fold_dir / "metrics.json", rec.dump(2) + "\n");
  return run;
}

struct ArmSpec {
  std::string name;
  Config cfg;
  bool eval_both = false;
  double lambda = -1.0;
};

void sort_cases(std::vector<metrics::CaseMetrics>& cases) {
  std::sort(cases.begin(), cases.end(),
            [](const metrics::CaseMetrics& a, const metrics::CaseMetrics& b) {
              return a.case_id < b.case_id;
            });
}

// Trains and evaluates all folds of one arm; appends one report row per
// evaluated decoder.
void run_arm(const ArmSpec& spec, const std::vector<data::FrameRecord>& frames,
             const fs::path& runs_dir, std::vector<ArmReport>& arms) {
  const int k = spec.cfg.at("folds").get<int>();
  if (k < 2) throw ValidationError("folds must be >= 2");
  const train::TrainConfig tcfg = to_train_config(spec.cfg);
  const data::FoldSplit split = data::split_folds(
      data::patient_ids(frames), k, tcfg.seed);

  ArmReport main_arm;
  main_arm.name = spec.name;
  main_arm.decoder = "main";
  main_arm.hash = config_hash(spec.cfg);
  main_arm.controlled = controlled_hash(spec.cfg);
  main_arm.lambda = spec.lambda;
  ArmReport aux_arm = main_arm;
  aux_arm.decoder = "aux";

  bool all_ok = true;
  for (int fold = 0; fold < k; ++fold) {
    const FoldRun run = run_fold(spec.cfg, frames, split, fold, spec.eval_both,
                                 runs_dir / spec.name / ("fold" + std::to_string(fold)));
    if (!run.ok) {
      all_ok = false;
      const std::string msg = "fold " + std::to_string(fold) + ": " + run.error;
      main_arm.errors.push_back(msg);
      aux_arm.errors.push_back(msg);
      std::cerr << spec.name << " " << msg << "\n";
      continue;
    }
    main_arm.cases.insert(main_arm.cases.end(), run.cases_main.begin(),
                          run.cases_main.end());
    aux_arm.cases.insert(aux_arm.cases.end(), run.cases_aux.begin(), run.cases_aux.end());
  }

  main_arm.complete = all_ok;
  aux_arm.complete = all_ok;
  sort_cases(main_arm.cases);
  sort_cases(aux_arm.cases);
  if (!main_arm.cases.empty()) main_arm.table = metrics::aggregate(main_arm.cases);
  if (!aux_arm.cases.empty()) aux_arm.table = metrics::aggregate(aux_arm.cases);

  arms.push_back(std::move(main_arm));
  if (spec.eval_both) arms.push_back(std::move(aux_arm));
}

// Paired significance vs the pce baseline row, matched by case id.
void attach_baseline_tests(std::vector<ArmReport>& arms) {
  const ArmReport* base = nullptr;
  for (const ArmReport& a : arms) {
    if (a.name == "pce" && a.decoder == "main" && a.complete) base = &a;
  }
  if (!base) return;
  for (ArmReport& a : arms) {
    if (!a.complete || a.cases.size() != base->cases.size() || a.cases.empty()) continue;
    std::vector<double> x, y;
    bool aligned = true;
    for (std::size_t i = 0; i < a.cases.size(); ++i) {
      if (a.cases[i].case_id != base->cases[i].case_id) {
        aligned = false;
        break;
      }
      x.push_back(a.cases[i].mean_dsc());
      y.push_back(base->cases[i].mean_dsc());
    }
    if (!aligned) continue;
    const metrics::PairedTestResult r = metrics::paired_test(x, y);
    a.has_p = true;
    a.p_vs_pce = r.p_value;
    a.t_vs_pce = r.statistic;
  }
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

std::vector<data::FrameRecord> prepare_frames(const Config& cfg, const fs::path& out_dir) {
  const std::string root = cfg.at("data").at("root").get<std::string>();
  if (!root.empty()) return data::load_dataset(root);
  const fs::path droot = out_dir / "dataset";
  data::synthesize_dataset(droot, to_synth_config(cfg));
  return data::load_dataset(droot);
}

Outcome run_cv(const Config& cfg, const fs::path& out_dir) {
  const auto frames = prepare_frames(cfg, out_dir);
  Outcome out;
  run_arm({"cv", cfg, false, -1.0}, frames, out_dir / "runs", out.arms);
  out.ok = out.arms[0].complete;
  return out;
}

Outcome ablate_lambda(const Config& cfg, const fs::path& out_dir) {
  std::vector<double> values = cfg.at("lambda_sweep").get<std::vector<double>>();
  if (values.empty()) throw ValidationError("lambda_sweep is empty");
  for (double v : values) {
    if (v < 0.0) throw ValidationError("lambda_sweep values must be >= 0");
  }
  std::sort(values.begin(), values.end());

  const auto frames = prepare_frames(cfg, out_dir);
  Outcome out;
  for (double v : values) {
    ArmSpec spec;
    spec.name = "lambda=" + fmt("%g", v);
    spec.cfg = cfg;
    spec.cfg["train"]["lambda_pls"] = v;
    spec.lambda = v;
    run_arm(spec, frames, out_dir / "runs", out.arms);
  }
  out.ok = std::all_of(out.arms.begin(), out.arms.end(),
                       [](const ArmReport& a) { return a.complete; });
  return out;
}

Outcome ablate_supervision(const Config& cfg, const fs::path& out_dir) {
  const auto strategies = cfg.at("strategies").get<std::vector<std::string>>();
  if (strategies.empty()) throw ValidationError("strategies is empty");

  const auto frames = prepare_frames(cfg, out_dir);
  Outcome out;
  for (const std::string& s : strategies) {
    ArmSpec spec;
    spec.name = s;
    spec.cfg = cfg;
    if (s == "pce" || s == "cr" || s == "cps") {
      spec.cfg["train"]["supervision"] = s;
    } else if (s == "pls-fixed") {
      spec.cfg["train"]["supervision"] = "pls";
      spec.cfg["train"]["alpha_mode"] = "fixed";
      spec.cfg["train"]["alpha_fixed"] = 0.5;
      spec.eval_both = true;
    } else if (s == "pls") {
      spec.cfg["train"]["supervision"] = "pls";
      spec.cfg["train"]["alpha_mode"] = "random";
      spec.eval_both = true;
    } else {
      throw ValidationError("unknown strategy '" + s + "'");
    }
    run_arm(spec, frames, out_dir / "runs", out.arms);
  }
  attach_baseline_tests(out.arms);
  out.ok = std::all_of(out.arms.begin(), out.arms.end(),
                       [](const ArmReport& a) { return a.complete; });
  return out;
}

void emit_report(const std::vector<ArmReport>& arms, const fs::path& out_dir) {
  if (arms.empty()) throw ValidationError("emit_report: no arms");
  fs::create_directories(out_dir);

  bool controlled_ok = true;
  for (const ArmReport& a : arms) {
    if (a.controlled != arms[0].controlled) controlled_ok = false;
  }

  Config report;
  report["stat_basis"] = "cases pooled across folds; population std";
  report["significance"] =
      "paired t statistic; p from a two-sided sign-flip permutation test";
  report["controlled_comparison"] =
      Config{{"pass", controlled_ok}, {"hash", arms[0].controlled}};
  report["arms"] = Config::array();
  for (const ArmReport& a : arms) {
    Config j{{"name", a.name},
             {"decoder", a.decoder},
             {"config_hash", a.hash},
             {"controlled_hash", a.controlled},
             {"complete", a.complete}};
    if (a.lambda >= 0.0) j["lambda"] = a.lambda;
    if (a.has_p) {
      j["p_vs_pce"] = a.p_vs_pce;
      j["t_vs_pce"] = a.t_vs_pce;
    }
    j["errors"] = a.errors;
    j["aggregate"] = a.cases.empty() ? Config() : table_to_json(a.table);
    j["cases"] = Config::array();
    for (const auto& c : a.cases) j["cases"].push_back(case_to_json(c));
    report["arms"].push_back(std::move(j));
  }
  write_text(out_dir / "report.json", report.dump(2) + "\n");

  std::string csv =
      "arm,decoder,dsc_rv,dsc_myo,dsc_lv,dsc_mean,hd95_rv,hd95_myo,hd95_lv,hd95_mean,"
      "p_vs_pce\n";
  for (const ArmReport& a : arms) {
    csv += a.name + "," + a.decoder;
    if (a.cases.empty()) {
      csv += ",-,-,-,-,-,-,-,-";
    } else {
      for (int i = 0; i < 4; ++i) {
        csv += "," + fmt("%.3f(%.3f)", a.table.dsc[static_cast<std::size_t>(i)].mean,
                         a.table.dsc[static_cast<std::size_t>(i)].stddev);
      }
      for (int i = 0; i < 4; ++i) {
        csv += "," + fmt("%.1f(%.1f)", a.table.hd95[static_cast<std::size_t>(i)].mean,
                         a.table.hd95[static_cast<std::size_t>(i)].stddev);
      }
    }
    csv += ",";
    if (a.has_p) csv += fmt("%.6f", a.p_vs_pce);
    csv += "\n";
  }
  write_text(out_dir / "report.csv", csv);

  bool any_lambda = false;
  for (const ArmReport& a : arms) any_lambda |= a.lambda >= 0.0;
  if (any_lambda) {
    std::string sweep = "lambda,dsc_mean,hd95_mean\n";
    for (const ArmReport& a : arms) {
      if (a.lambda < 0.0 || a.cases.empty()) continue;
      sweep += fmt("%g", a.lambda) + "," + fmt("%.3f", a.table.dsc[3].mean) + "," +
               fmt("%.1f", a.table.hd95[3].mean) + "\n";
    }
    write_text(out_dir / "lambda_sweep.csv", sweep);
  }
}

int cmd_synth(const Config& cfg, const fs::path& out_dir) {
  write_resolved_config(cfg, out_dir);
  data::synthesize_dataset(out_dir / "dataset", to_synth_config(cfg));
  const auto frames = data::load_dataset(out_dir / "dataset");
  std::cout << "wrote " << frames.size() << " frames to " << (out_dir / "dataset").string()
            << "\n";
  return 0;
}

int cmd_train(const Config& cfg, const fs::path& out_dir) {
  write_resolved_config(cfg, out_dir);
  const auto frames = prepare_frames(cfg, out_dir);
  const model::ModelConfig mcfg = to_model_config(cfg);
  const train::TrainConfig tcfg = to_train_config(cfg);

  std::vector<data::FrameRecord> norm_frames;
  for (const auto& rec : frames) {
    data::FrameRecord r = rec;
    r.image = data::normalize_intensity(rec.image);
    r.dense.reset();
    norm_frames.push_back(std::move(r));
  }
  const auto samples =
      train::strip_dense(data::extract_slices(norm_frames, /*include_dense=*/false));

  std::vector<train::ValVolume> val;
  std::vector<std::string> seen;
  for (const auto& rec : frames) {
    if (!rec.dense) continue;
    if (std::find(seen.begin(), seen.end(), rec.image.patient_id) != seen.end()) continue;
    seen.push_back(rec.image.patient_id);
    val.push_back({rec.image, *rec.dense});
    if (seen.size() >= kMaxValidationPatients) break;
  }

  model::DualBranchUNet net(mcfg);
  const auto result = train::train(tcfg, mcfg, net, samples, val,
                                   out_dir / "runs" / "train", config_hash(cfg));
  std::cout << "trained " << tcfg.max_iterations << " iterations; best validation DSC "
            << fmt("%.4f", result.best_val_dsc) << " at iteration "
            << result.best_iteration << "\n";
  return 0;
}

int cmd_eval(const Config& cfg, const fs::path& out_dir) {
  write_resolved_config(cfg, out_dir);
  const std::string ckpt = cfg.at("eval").at("checkpoint").get<std::string>();
  if (ckpt.empty()) {
    throw ValidationError("eval.checkpoint is empty (use --set eval.checkpoint=<dir>)");
  }
  const train::EvalDecoder decoder =
      cfg.at("eval").at("decoder").get<std::string>() == "aux" ? train::EvalDecoder::kAux
                                                               : train::EvalDecoder::kMain;
  const auto frames = prepare_frames(cfg, out_dir);
  const model::ModelConfig mcfg = to_model_config(cfg);
  const train::TrainConfig tcfg = to_train_config(cfg);

  model::DualBranchUNet net(mcfg);
  model::load_checkpoint(ckpt, net);

  ArmReport arm;
  arm.name = "eval";
  arm.decoder = cfg.at("eval").at("decoder").get<std::string>();
  arm.hash = config_hash(cfg);
  arm.controlled = controlled_hash(cfg);
  for (const auto& rec : frames) {
    if (!rec.dense) continue;
    const data::DenseLabel pred =
        train::infer_volume(net, rec.image, decoder, tcfg.input_h, tcfg.input_w);
    arm.cases.push_back(
        metrics::evaluate_case(pred, *rec.dense, rec.image.spacing, case_id_of(rec)));
  }
  if (arm.cases.empty()) throw ValidationError("eval: no cases with dense labels");
  sort_cases(arm.cases);
  arm.table = metrics::aggregate(arm.cases);
  arm.complete = true;
  emit_report({arm}, out_dir);
  std::cout << "evaluated " << arm.cases.size() << " cases; mean DSC "
            << fmt("%.4f", arm.table.dsc[3].mean) << "\n";
  return 0;
}

int cmd_cv(const Config& cfg, const fs::path& out_dir) {
  write_resolved_config(cfg, out_dir);
  const Outcome out = run_cv(cfg, out_dir);
  emit_report(out.arms, out_dir);
  return out.ok ? 0 : 1;
}

int cmd_ablate_lambda(const Config& cfg, const fs::path& out_dir) {
  write_resolved_config(cfg, out_dir);
  const Outcome out = ablate_lambda(cfg, out_dir);
  emit_report(out.arms, out_dir);
  return out.ok ? 0 : 1;
}

int cmd_ablate_supervision(const Config& cfg, const fs::path& out_dir) {
  write_resolved_config(cfg, out_dir);
  const Outcome out = ablate_supervision(cfg, out_dir);
  emit_report(out.arms, out_dir);
  return out.ok ? 0 : 1;
}

int cmd_report(const fs::path& out_dir) {
  std::ifstream in(out_dir / "report.json");
  if (!in) throw IoError("no report.json under " + out_dir.string());
  Config report;
  in >> report;

  std::vector<ArmReport> arms;
  for (const Config& j : report.at("arms")) {
    ArmReport a;
    a.name = j.at("name").get<std::string>();
    a.decoder = j.at("decoder").get<std::string>();
    a.hash = j.at("config_hash").get<std::string>();
    a.controlled = j.at("controlled_hash").get<std::string>();
    a.complete = j.at("complete").get<bool>();
    if (j.contains("lambda")) a.lambda = j.at("lambda").get<double>();
    if (j.contains("p_vs_pce")) {
      a.has_p = true;
      a.p_vs_pce = j.at("p_vs_pce").get<double>();
      a.t_vs_pce = j.at("t_vs_pce").get<double>();
    }
    a.errors = j.at("errors").get<std::vector<std::string>>();
    for (const Config& c : j.at("cases")) a.cases.push_back(case_from_json(c));
    if (!j.at("aggregate").is_null()) a.table = table_from_json(j.at("aggregate"));
    arms.push_back(std::move(a));
  }
  emit_report(arms, out_dir);
  return 0;
}

}  // namespace scribseg::harness
