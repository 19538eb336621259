#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "scribseg/data/types.hpp"

namespace scribseg::data {

// Loads every frame under `root/patient_<id>/frame_<id>_<kind>.{bin,json}`,
// kind in {image,label,scribble}; `label` (the dense annotation) is optional
// per frame. Returns frames sorted by (patient_id, frame_id).
std::vector<FrameRecord> load_dataset(const std::filesystem::path& root);

// Writes one frame in the repo layout. Creates the patient directory.
void write_frame(const std::filesystem::path& root, const FrameRecord& frame);

// Flattens volumes to per-slice samples; dense slices included only on request.
std::vector<SliceSample> extract_slices(std::span<const FrameRecord> frames,
                                        bool include_dense);

std::vector<std::string> patient_ids(std::span<const FrameRecord> frames);

}  // namespace scribseg::data
