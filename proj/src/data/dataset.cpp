#include "scribseg/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scribseg/array_io.hpp"
#include "scribseg/errors.hpp"

namespace scribseg::data {

namespace fs = std::filesystem;

int FoldSplit::fold_of(const std::string& patient_id) const {
  for (const auto& [id, fold] : assignments) {
    if (id == patient_id) return fold;
  }
  throw ValidationError("FoldSplit: unknown patient " + patient_id);
}

namespace {

void check_labels(const std::vector<std::uint8_t>& labels, bool allow_unlabeled,
                  const std::string& file) {
  for (std::uint8_t v : labels) {
    if (v < kNumClasses) continue;
    if (allow_unlabeled && v == kUnlabeled) continue;
    throw ValidationError(file + ": unknown label value " + std::to_string(v));
  }
}

ImageVolume read_image(const fs::path& base, const std::string& patient,
                       const std::string& frame) {
  const auto arr = io::read_array(base);
  if (arr.header.dtype != io::Dtype::F32) {
    throw FormatError(base.string() + ".json: image must be f32");
  }
  if (arr.header.shape.size() != 3) {
    throw FormatError(base.string() + ".json: image must be 3D");
  }
  ImageVolume vol;
  vol.d = static_cast<int>(arr.header.shape[0]);
  vol.h = static_cast<int>(arr.header.shape[1]);
  vol.w = static_cast<int>(arr.header.shape[2]);
  vol.spacing = arr.header.spacing_mm;
  vol.patient_id = patient;
  vol.frame_id = frame;
  const auto f = arr.as_f32();
  vol.voxels.assign(f.begin(), f.end());
  for (double v : vol.voxels) {
    if (!std::isfinite(v)) {
      throw ValidationError(base.string() + ".bin: non-finite intensity");
    }
  }
  return vol;
}

std::vector<std::uint8_t> read_labels(const fs::path& base, int d, int h, int w,
                                      bool allow_unlabeled) {
  const auto arr = io::read_array(base);
  if (arr.header.dtype != io::Dtype::U8) {
    throw FormatError(base.string() + ".json: labels must be u8");
  }
  if (arr.header.shape.size() != 3 || arr.header.shape[0] != d ||
      arr.header.shape[1] != h || arr.header.shape[2] != w) {
    throw ValidationError(base.string() + ".json: label shape does not match image");
  }
  auto labels = arr.as_u8();
  check_labels(labels, allow_unlabeled, base.string() + ".bin");
  return labels;
}

}  // namespace

std::vector<FrameRecord> load_dataset(const fs::path& root) {
  std::vector<FrameRecord> out;
  if (!fs::exists(root)) {
    throw IoError("dataset root does not exist: " + root.string());
  }

  std::vector<std::string> patients;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.rfind("patient_", 0) == 0) patients.push_back(name);
  }
  std::sort(patients.begin(), patients.end());

  for (const auto& patient : patients) {
    const fs::path pdir = root / patient;
    std::set<std::string> frames;
    for (const auto& entry : fs::directory_iterator(pdir)) {
      const auto name = entry.path().filename().string();
      constexpr const char* suffix = "_image.json";
      if (name.rfind("frame_", 0) == 0 && name.size() > 17 &&
          name.compare(name.size() - 11, 11, suffix) == 0) {
        frames.insert(name.substr(6, name.size() - 17));
      }
    }
    for (const auto& frame : frames) {
      const std::string stem = "frame_" + frame;
      FrameRecord rec;
      rec.image = read_image(pdir / (stem + "_image"), patient.substr(8), frame);

      ScribbleMask scr;
      scr.d = rec.image.d;
      scr.h = rec.image.h;
      scr.w = rec.image.w;
      scr.labels = read_labels(pdir / (stem + "_scribble"), scr.d, scr.h, scr.w,
                               /*allow_unlabeled=*/true);
      rec.scribble = std::move(scr);

      if (fs::exists(pdir / (stem + "_label.json"))) {
        DenseLabel dl;
        dl.d = rec.image.d;
        dl.h = rec.image.h;
        dl.w = rec.image.w;
        dl.labels = read_labels(pdir / (stem + "_label"), dl.d, dl.h, dl.w,
                                /*allow_unlabeled=*/false);
        rec.dense = std::move(dl);
      }
      out.push_back(std::move(rec));
    }
  }

  std::sort(out.begin(), out.end(), [](const FrameRecord& a, const FrameRecord& b) {
    return std::tie(a.image.patient_id, a.image.frame_id) <
           std::tie(b.image.patient_id, b.image.frame_id);
  });
  return out;
}

void write_frame(const fs::path& root, const FrameRecord& frame) {
  const auto& img = frame.image;
  const fs::path pdir = root / ("patient_" + img.patient_id);
  fs::create_directories(pdir);
  const std::string stem = "frame_" + img.frame_id;

  io::ArrayHeader h;
  h.shape = {img.d, img.h, img.w};
  h.spacing_mm = img.spacing;

  h.dtype = io::Dtype::F32;
  std::vector<float> f(img.voxels.begin(), img.voxels.end());
  io::write_f32(pdir / (stem + "_image"), h, f);

  h.dtype = io::Dtype::U8;
  io::write_u8(pdir / (stem + "_scribble"), h, frame.scribble.labels);
  if (frame.dense) {
    io::write_u8(pdir / (stem + "_label"), h, frame.dense->labels);
  }
}

std::vector<SliceSample> extract_slices(std::span<const FrameRecord> frames,
                                        bool include_dense) {
  std::vector<SliceSample> out;
  for (const auto& rec : frames) {
    const auto& img = rec.image;
    for (int z = 0; z < img.d; ++z) {
      SliceSample s;
      s.image.h = img.h;
      s.image.w = img.w;
      s.image.v.assign(img.voxels.begin() + static_cast<std::ptrdiff_t>(z) * img.h * img.w,
                       img.voxels.begin() + static_cast<std::ptrdiff_t>(z + 1) * img.h * img.w);
      s.scribble.h = img.h;
      s.scribble.w = img.w;
      s.scribble.v.assign(
          rec.scribble.labels.begin() + static_cast<std::ptrdiff_t>(z) * img.h * img.w,
          rec.scribble.labels.begin() + static_cast<std::ptrdiff_t>(z + 1) * img.h * img.w);
      if (include_dense && rec.dense) {
        LabelSlice d;
        d.h = img.h;
        d.w = img.w;
        d.v.assign(rec.dense->labels.begin() + static_cast<std::ptrdiff_t>(z) * img.h * img.w,
                   rec.dense->labels.begin() + static_cast<std::ptrdiff_t>(z + 1) * img.h * img.w);
        s.dense = std::move(d);
      }
      s.prov = {img.patient_id, img.frame_id, z};
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<std::string> patient_ids(std::span<const FrameRecord> frames) {
  std::vector<std::string> ids;
  for (const auto& rec : frames) ids.push_back(rec.image.patient_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace scribseg::data
