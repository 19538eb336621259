#include "scribseg/model/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "scribseg/array_io.hpp"
#include "scribseg/errors.hpp"

namespace scribseg::model {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const fs::path& dir, DualBranchUNet& model,
                     const CheckpointMeta& meta) {
  const fs::path tmp = dir.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);

  json manifest;
  manifest["iteration"] = meta.iteration;
  manifest["config_hash"] = meta.config_hash;
  json tensors = json::array();
  std::vector<ParamRef> params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    char stem[16];
    std::snprintf(stem, sizeof stem, "t%04zu", i);
    io::ArrayHeader header;
    header.dtype = io::Dtype::F64;
    header.shape = params[i].value->shape();
    io::write_array(tmp / stem, header, params[i].value->data(),
                    static_cast<std::size_t>(params[i].value->size()) * sizeof(double));
    tensors.push_back({{"name", params[i].name},
                       {"shape", params[i].value->shape()},
                       {"file", stem}});
  }
  manifest["tensors"] = std::move(tensors);

  std::ofstream out(tmp / "manifest.json");
  out << manifest.dump(2) << "\n";
  out.close();
  if (!out) throw IoError("checkpoint: failed to write " + (tmp / "manifest.json").string());

  fs::remove_all(dir, ec);
  fs::rename(tmp, dir);
}

CheckpointMeta load_checkpoint(const fs::path& dir, DualBranchUNet& model) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("checkpoint: cannot open " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint: bad manifest " + manifest_path.string() + ": " + e.what());
  }

  CheckpointMeta meta;
  meta.iteration = manifest.at("iteration").get<std::int64_t>();
  meta.config_hash = manifest.at("config_hash").get<std::string>();

  const json& tensors = manifest.at("tensors");
  std::vector<ParamRef> params = model.params();
  if (tensors.size() != params.size()) {
    throw FormatError("checkpoint: expected " + std::to_string(params.size()) +
                      " tensors, manifest has " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& entry = tensors[i];
    const std::string name = entry.at("name").get<std::string>();
    if (name != params[i].name) {
      throw FormatError("checkpoint: tensor " + std::to_string(i) + " is '" + name +
                        "', model expects '" + params[i].name + "'");
    }
    io::StoredArray arr = io::read_array(dir / entry.at("file").get<std::string>());
    if (arr.header.shape != params[i].value->shape()) {
      throw FormatError("checkpoint: shape mismatch for '" + name + "'");
    }
    std::vector<double> v = arr.as_f64();
    std::copy(v.begin(), v.end(), params[i].value->data());
  }
  return meta;
}

}  // namespace scribseg::model
