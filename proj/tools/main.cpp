#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scribseg/harness/config.hpp"
#include "scribseg/harness/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "out";
  std::int64_t seed = -1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "JSON config file (defaults when omitted)");
  sub->add_option("--set", args.sets, "override a config key, dotted path: a.b.c=value");
  sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--seed", args.seed, "experiment seed (shorthand for train.seed)");
}

scribseg::harness::Config resolve(const CommonArgs& args) {
  scribseg::harness::Config cfg = args.config_path.empty()
                                      ? scribseg::harness::default_config()
                                      : scribseg::harness::load_config(args.config_path);
  for (const std::string& s : args.sets) scribseg::harness::apply_set(cfg, s);
  if (args.seed >= 0) cfg["train"]["seed"] = args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scribble-supervised segmentation experiments"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  CLI::App* train = app.add_subcommand("train", "single training run on all patients");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  CLI::App* cv = app.add_subcommand("cv", "k-fold cross-validation");
  CLI::App* ab_lambda = app.add_subcommand("ablate-lambda", "lambda sensitivity sweep");
  CLI::App* ab_sup =
      app.add_subcommand("ablate-supervision", "supervision strategy comparison");
  CLI::App* report = app.add_subcommand("report", "re-emit reports from report.json");
  for (CLI::App* sub : {synth, train, eval, cv, ab_lambda, ab_sup, report}) {
    add_common(sub, args);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return scribseg::harness::cmd_report(args.out_dir);
    const scribseg::harness::Config cfg = resolve(args);
    if (synth->parsed()) return scribseg::harness::cmd_synth(cfg, args.out_dir);
    if (train->parsed()) return scribseg::harness::cmd_train(cfg, args.out_dir);
    if (eval->parsed()) return scribseg::harness::cmd_eval(cfg, args.out_dir);
    if (cv->parsed()) return scribseg::harness::cmd_cv(cfg, args.out_dir);
    if (ab_lambda->parsed()) return scribseg::harness::cmd_ablate_lambda(cfg, args.out_dir);
    if (ab_sup->parsed()) return scribseg::harness::cmd_ablate_supervision(cfg, args.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
