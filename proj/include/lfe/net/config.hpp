#pragma once

#include <string>
#include <vector>

#include "lfe/filters/side_window.hpp"

namespace lfe::net {

struct NetworkConfig {
  int base_channels = 16;
  int scales = 4;  // one full-resolution level plus scales-1 downsamplings
  int csm_per_level = 1;
  int ca_reduction = 4;
  int large_kernel = 5;
  std::vector<int> interaction_scales{1, 2, 3};
  bool use_iem = true;
  bool use_cvmi = true;
  bool use_csfi = true;
  bool use_csm_stage1 = true;
  bool use_csm_stage2 = true;
  bool use_fre = true;
  bool use_spa = true;
  filters::SideWindowSpec lowfre{5, 10};

  /// Throws ConfigError on violated invariants.
  void validate() const;

  /// Feature channels at 1-based level i: base_channels * 2^(i-1).
  int channels(int level) const;
  /// Levels taking part in cross-view/cross-scale interaction: 1..scales-1.
  int interaction_levels() const { return scales - 1; }
  /// Spatial extents must be multiples of this (2^(scales-1)).
  int size_multiple() const { return 1 << (scales - 1); }
  bool interacts_at(int level) const;

  /// Sets one key from its text form; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);
  /// key=value lines covering every field, in a fixed order.
  std::string to_text() const;
  /// Inverse of to_text(); unknown keys are errors.
  static NetworkConfig from_text(const std::string& text);
};

bool parse_bool(const std::string& key, const std::string& value);
int parse_int(const std::string& key, const std::string& value);

}  // namespace lfe::net
