#include "lfe/net/config.hpp"

#include <algorithm>
#include <sstream>

#include "lfe/core/error.hpp"

namespace lfe::net {

void NetworkConfig::validate() const {
  if (base_channels < 1) throw ConfigError("base_channels must be positive");
  if (ca_reduction < 1) throw ConfigError("ca_reduction must be positive");
  if (base_channels % ca_reduction != 0) throw ConfigError("base_channels must be divisible by ca_reduction");
  if (scales < 2 || scales > 8) throw ConfigError("scales must lie in [2, 8]");
  if (csm_per_level < 1) throw ConfigError("csm_per_level must be at least 1");
  if (large_kernel < 1 || large_kernel % 2 == 0) throw ConfigError("large_kernel must be odd and positive");
  for (int s : interaction_scales) {
    if (s < 1 || s > scales - 1) {
      throw ConfigError("interaction scale " + std::to_string(s) + " outside 1.." + std::to_string(scales - 1));
    }
  }
  if (!use_fre && !use_spa) throw ConfigError("at least one of use_fre and use_spa must be enabled");
  lowfre.validate();
}

int NetworkConfig::channels(int level) const { return base_channels << (level - 1); }

bool NetworkConfig::interacts_at(int level) const {
  return std::find(interaction_scales.begin(), interaction_scales.end(), level) != interaction_scales.end();
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used == value.size()) return static_cast<int>(v);
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + value + "'");
}

bool NetworkConfig::set(const std::string& key, const std::string& value) {
  if (key == "base_channels") base_channels = parse_int(key, value);
  else if (key == "scales") scales = parse_int(key, value);
  else if (key == "csm_per_level") csm_per_level = parse_int(key, value);
  else if (key == "ca_reduction") ca_reduction = parse_int(key, value);
  else if (key == "large_kernel") large_kernel = parse_int(key, value);
  else if (key == "interaction_scales") {
    interaction_scales.clear();
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) interaction_scales.push_back(parse_int(key, item));
    }
  } else if (key == "use_iem") use_iem = parse_bool(key, value);
  else if (key == "use_cvmi") use_cvmi = parse_bool(key, value);
  else if (key == "use_csfi") use_csfi = parse_bool(key, value);
  else if (key == "use_csm_stage1") use_csm_stage1 = parse_bool(key, value);
  else if (key == "use_csm_stage2") use_csm_stage2 = parse_bool(key, value);
  else if (key == "use_fre") use_fre = parse_bool(key, value);
  else if (key == "use_spa") use_spa = parse_bool(key, value);
  else if (key == "lowfre_radius") lowfre.radius = parse_int(key, value);
  else if (key == "lowfre_iterations") lowfre.iterations = parse_int(key, value);
  else return false;
  return true;
}

std::string NetworkConfig::to_text() const {
  std::ostringstream out;
  out << "base_channels=" << base_channels << "\n";
  out << "scales=" << scales << "\n";
  out << "csm_per_level=" << csm_per_level << "\n";
  out << "ca_reduction=" << ca_reduction << "\n";
  out << "large_kernel=" << large_kernel << "\n";
  out << "interaction_scales=";
  for (std::size_t i = 0; i < interaction_scales.size(); ++i) out << (i ? "," : "") << interaction_scales[i];
  out << "\n";
  out << "use_iem=" << use_iem << "\n";
  out << "use_cvmi=" << use_cvmi << "\n";
  out << "use_csfi=" << use_csfi << "\n";
  out << "use_csm_stage1=" << use_csm_stage1 << "\n";
  out << "use_csm_stage2=" << use_csm_stage2 << "\n";
  out << "use_fre=" << use_fre << "\n";
  out << "use_spa=" << use_spa << "\n";
  out << "lowfre_radius=" << lowfre.radius << "\n";
  out << "lowfre_iterations=" << lowfre.iterations << "\n";
  return out.str();
}

NetworkConfig NetworkConfig::from_text(const std::string& text) {
  NetworkConfig cfg;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
    const auto key = line.substr(0, eq);
    if (!cfg.set(key, line.substr(eq + 1))) throw ConfigError("unknown network key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace lfe::net
