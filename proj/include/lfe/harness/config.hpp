#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "lfe/net/config.hpp"

namespace lfe::harness {

/// Training settings plus the network they train. Serialized as flat
/// key=value text; network keys share the same namespace.
struct TrainConfig {
  double lr0 = 2e-4;
  int lr_halve_every = 250;  // epochs
  int epochs = 1000;
  int max_steps = 0;  // 0: run all epochs; otherwise stop after this many steps
  int batch = 20;
  int patch = 128;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int checkpoint_every = 0;  // steps; 0 writes only the final checkpoint
  int eval_crop = 400;       // centre crop for held-out evaluation; 0 = full image
  net::NetworkConfig network;

  void validate() const;
  /// Sets one key (training or network); throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
};

/// Named profiles matching configs/desk.cfg and configs/paper.cfg.
TrainConfig desk_profile();
TrainConfig paper_profile();

enum class AblationId { full, no_iem, no_cvmi, no_csfi, no_cvmi_csfi, no_spa, no_fre, no_csm1, no_csm2 };

inline constexpr std::array<AblationId, 9> kAllAblations{
    AblationId::full,    AblationId::no_iem, AblationId::no_cvmi, AblationId::no_csfi, AblationId::no_cvmi_csfi,
    AblationId::no_spa,  AblationId::no_fre, AblationId::no_csm1, AblationId::no_csm2};

const char* ablation_name(AblationId id);
AblationId parse_ablation(const std::string& name);
/// Copy of `base` with exactly the toggles of `id` switched off.
TrainConfig apply_ablation(TrainConfig base, AblationId id);

}  // namespace lfe::harness
