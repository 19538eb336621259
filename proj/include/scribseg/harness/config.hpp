#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "scribseg/data/synth.hpp"
#include "scribseg/model/config.hpp"
#include "scribseg/train/train.hpp"

namespace scribseg::harness {

// One canonical JSON document drives every command; CLI --set overrides
// individual keys by dotted path. Key order is pinned by the defaults so the
// serialized form (and therefore the config hash) is stable.
using Config = nlohmann::ordered_json;

Config default_config();

// Defaults overlaid with the file's keys (deep merge, objects only).
Config load_config(const std::filesystem::path& path);

// "a.b.c=value"; value parsed as JSON when possible, else taken as a string.
// The path must already exist (catches typos).
void apply_set(Config& cfg, const std::string& assignment);

// FNV-1a over the canonical serialization.
std::string config_hash(const Config& cfg);

// Hash with the ablated factors removed (supervision, alpha mode/value,
// lambda, eval decoder); equal across arms of a controlled comparison.
std::string controlled_hash(const Config& cfg);

data::SynthConfig to_synth_config(const Config& cfg);
model::ModelConfig to_model_config(const Config& cfg);
train::TrainConfig to_train_config(const Config& cfg);

std::string supervision_name(losses::Supervision s);

}  // namespace scribseg::harness
