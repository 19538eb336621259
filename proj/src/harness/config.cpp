#include "scribseg/harness/config.hpp"

#include <cstdio>
#include <fstream>

#include "scribseg/errors.hpp"

namespace scribseg::harness {

Config default_config() {
  return Config{
      {"data",
       {{"root", ""},
        {"synth",
         {{"n_patients", 20},
          {"depth", 8},
          {"height", 64},
          {"width", 64},
          {"seed", 1234},
          {"noise_sigma", 0.08},
          {"drift_amplitude", 0.15}}}}},
      {"model",
       {{"in_channels", 1},
        {"num_classes", 4},
        {"levels", 3},
        {"base_width", 8},
        {"dropout_rate", 0.5}}},
      {"train",
       {{"base_lr", 0.03},
        {"momentum", 0.9},
        {"weight_decay", 1e-4},
        {"batch_size", 4},
        {"max_iterations", 2000},
        {"lambda_pls", 0.5},
        {"poly_power", 0.9},
        {"supervision", "pls"},
        {"alpha_mode", "random"},
        {"alpha_fixed", 0.5},
        {"seed", 1},
        {"eval_decoder", "main"},
        {"input_h", 64},
        {"input_w", 64},
        {"epsilon_dice", 1e-5},
        {"dice_include_background", true},
        {"augment",
         {{"rotate_prob", 0.5},
          {"flip_prob", 0.5},
          {"noise_prob", 0.5},
          {"noise_sigma_max", 0.05},
          {"free_rotation", false},
          {"max_angle_deg", 20.0}}}}},
      {"folds", 5},
      {"lambda_sweep", {0.01, 0.1, 0.2, 0.3, 0.5, 1.0}},
      {"strategies", {"pce", "cr", "cps", "pls-fixed", "pls"}},
      {"eval", {{"checkpoint", ""}, {"decoder", "main"}}},
  };
}

namespace {

void deep_merge(Config& base, const Config& overlay, const std::string& where) {
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) {
      throw ValidationError("config: unknown key '" + path + "'");
    }
    Config& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      deep_merge(slot, it.value(), path);
    } else {
      slot = it.value();
    }
  }
}

}  // namespace

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  Config file;
  try {
    in >> file;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config: " + path.string() + ": " + e.what());
  }
  Config cfg = default_config();
  deep_merge(cfg, file, "");
  return cfg;
}

void apply_set(Config& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("--set expects key.path=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  Config value;
  try {
    value = Config::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;  // bare strings like pls or main
  }

  Config* node = &cfg;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot - pos);
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError("--set: unknown config key '" + key + "'");
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

std::string config_hash(const Config& cfg) {
  const std::string s = cfg.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string controlled_hash(const Config& cfg) {
  Config c = cfg;
  c["train"].erase("supervision");
  c["train"].erase("alpha_mode");
  c["train"].erase("alpha_fixed");
  c["train"].erase("lambda_pls");
  c["train"].erase("eval_decoder");
  return config_hash(c);
}

data::SynthConfig to_synth_config(const Config& cfg) {
  const Config& s = cfg.at("data").at("synth");
  data::SynthConfig out;
  out.n_patients = s.at("n_patients").get<int>();
  out.depth = s.at("depth").get<int>();
  out.height = s.at("height").get<int>();
  out.width = s.at("width").get<int>();
  out.seed = s.at("seed").get<std::uint64_t>();
  out.noise_sigma = s.at("noise_sigma").get<double>();
  out.drift_amplitude = s.at("drift_amplitude").get<double>();
  return out;
}

model::ModelConfig to_model_config(const Config& cfg) {
  const Config& m = cfg.at("model");
  model::ModelConfig out;
  out.in_channels = m.at("in_channels").get<int>();
  out.num_classes = m.at("num_classes").get<int>();
  out.levels = m.at("levels").get<int>();
  out.base_width = m.at("base_width").get<int>();
  out.dropout_rate = m.at("dropout_rate").get<double>();
  out.validate();
  return out;
}

namespace {

losses::Supervision parse_supervision(const std::string& s) {
  if (s == "pls") return losses::Supervision::kPls;
  if (s == "cps") return losses::Supervision::kCps;
  if (s == "cr") return losses::Supervision::kCr;
  if (s == "pce") return losses::Supervision::kPce;
  throw ValidationError("config: unknown supervision '" + s + "'");
}

losses::AlphaMode parse_alpha_mode(const std::string& s) {
  if (s == "random") return losses::AlphaMode::kRandom;
  if (s == "fixed") return losses::AlphaMode::kFixed;
  throw ValidationError("config: unknown alpha_mode '" + s + "'");
}

train::EvalDecoder parse_decoder(const std::string& s) {
  if (s == "main") return train::EvalDecoder::kMain;
  if (s == "aux") return train::EvalDecoder::kAux;
  throw ValidationError("config: unknown eval_decoder '" + s + "'");
}

}  // namespace

train::TrainConfig to_train_config(const Config& cfg) {
  const Config& t = cfg.at("train");
  train::TrainConfig out;
  out.base_lr = t.at("base_lr").get<double>();
  out.momentum = t.at("momentum").get<double>();
  out.weight_decay = t.at("weight_decay").get<double>();
  out.batch_size = t.at("batch_size").get<int>();
  out.max_iterations = t.at("max_iterations").get<int>();
  out.lambda_pls = t.at("lambda_pls").get<double>();
  out.poly_power = t.at("poly_power").get<double>();
  out.supervision = parse_supervision(t.at("supervision").get<std::string>());
  out.alpha_mode = parse_alpha_mode(t.at("alpha_mode").get<std::string>());
  out.alpha_fixed = t.at("alpha_fixed").get<double>();
  out.seed = t.at("seed").get<std::uint64_t>();
  out.eval_decoder = parse_decoder(t.at("eval_decoder").get<std::string>());
  out.input_h = t.at("input_h").get<int>();
  out.input_w = t.at("input_w").get<int>();
  out.epsilon_dice = t.at("epsilon_dice").get<double>();
  out.dice_include_background = t.at("dice_include_background").get<bool>();
  const Config& a = t.at("augment");
  out.augment.rotate_prob = a.at("rotate_prob").get<double>();
  out.augment.flip_prob = a.at("flip_prob").get<double>();
  out.augment.noise_prob = a.at("noise_prob").get<double>();
  out.augment.noise_sigma_max = a.at("noise_sigma_max").get<double>();
  out.augment.free_rotation = a.at("free_rotation").get<bool>();
  out.augment.max_angle_deg = a.at("max_angle_deg").get<double>();
  out.validate();
  return out;
}

std::string supervision_name(losses::Supervision s) {
  switch (s) {
    case losses::Supervision::kPls: return "pls";
    case losses::Supervision::kCps: return "cps";
    case losses::Supervision::kCr: return "cr";
    case losses::Supervision::kPce: return "pce";
  }
  return "?";
}

}  // namespace scribseg::harness
