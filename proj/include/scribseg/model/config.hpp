#pragma once

namespace scribseg::model {

struct ModelConfig {
  int in_channels = 1;
  int num_classes = 4;
  int levels = 5;
  int base_width = 16;   // channels at the top level, doubling per level down
  double dropout_rate = 0.5;  // aux decoder only, train mode only

  void validate() const;
  int channels_at(int level) const { return base_width << level; }
  int stride() const { return 1 << (levels - 1); }
};

}  // namespace scribseg::model
