#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scribseg/harness/config.hpp"
#include "scribseg/metrics/metrics.hpp"

namespace scribseg::harness {

// Consolidated result of one experiment arm: cases pooled over all folds.
struct ArmReport {
  std::string name;        // row label, e.g. "cv", "pce", "lambda=0.1"
  std::string decoder;     // "main" or "aux"
  std::string hash;        // config hash of the arm's resolved config
  std::string controlled;  // hash with ablated keys stripped
  double lambda = -1.0;    // >= 0 only on sweep rows
  std::vector<metrics::CaseMetrics> cases;  // sorted by case id
  metrics::AggregateTable table;
  bool complete = false;
  bool has_p = false;      // p/t vs the pce baseline filled in
  double p_vs_pce = 1.0;
  double t_vs_pce = 0.0;
  std::vector<std::string> errors;
};

struct Outcome {
  std::vector<ArmReport> arms;
  bool ok = false;
};

// Loads data.root, or synthesizes into out_dir/dataset when root is empty.
std::vector<data::FrameRecord> prepare_frames(const Config& cfg,
                                              const std::filesystem::path& out_dir);

Outcome run_cv(const Config& cfg, const std::filesystem::path& out_dir);
Outcome ablate_lambda(const Config& cfg, const std::filesystem::path& out_dir);
Outcome ablate_supervision(const Config& cfg, const std::filesystem::path& out_dir);

// report.json (full per-case data) + report.csv ("mean(std)" cells); sweep
// arms additionally produce lambda_sweep.csv. Byte-deterministic.
void emit_report(const std::vector<ArmReport>& arms,
                 const std::filesystem::path& out_dir);

// Subcommand entry points; each writes the resolved config.json under out_dir
// and returns a process exit code.
int cmd_synth(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_train(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_eval(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_cv(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_ablate_lambda(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_ablate_supervision(const Config& cfg, const std::filesystem::path& out_dir);
int cmd_report(const std::filesystem::path& out_dir);

}  // namespace scribseg::harness
