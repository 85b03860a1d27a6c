#include "lfe/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfe/core/error.hpp"

namespace lfe::harness {

namespace {

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > 0)) throw ConfigError("lr0 must be positive");
  if (lr_halve_every < 1) throw ConfigError("lr_halve_every must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (patch < 1 || patch % network.size_multiple() != 0) {
    throw ConfigError("patch must be a positive multiple of " + std::to_string(network.size_multiple()));
  }
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ConfigError("adam_eps must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (eval_crop < 0) throw ConfigError("eval_crop must be non-negative");
  if (!network.use_fre && !network.use_spa) throw ConfigError("at least one of use_fre and use_spa must be on");
  network.validate();
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "lr0") lr0 = parse_real(key, value);
  else if (key == "lr_halve_every") lr_halve_every = net::parse_int(key, value);
  else if (key == "epochs") epochs = net::parse_int(key, value);
  else if (key == "max_steps") max_steps = net::parse_int(key, value);
  else if (key == "batch") batch = net::parse_int(key, value);
  else if (key == "patch") patch = net::parse_int(key, value);
  else if (key == "seed") {
    try {
      std::size_t used = 0;
      seed = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("seed: expected a non-negative integer, got '" + value + "'");
    }
  } else if (key == "adam_beta1") adam_beta1 = parse_real(key, value);
  else if (key == "adam_beta2") adam_beta2 = parse_real(key, value);
  else if (key == "adam_eps") adam_eps = parse_real(key, value);
  else if (key == "checkpoint_every") checkpoint_every = net::parse_int(key, value);
  else if (key == "eval_crop") eval_crop = net::parse_int(key, value);
  else if (!network.set(key, value)) throw ConfigError("unknown configuration key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "lr0=" << real_text(lr0) << "\n";
  out << "lr_halve_every=" << lr_halve_every << "\n";
  out << "epochs=" << epochs << "\n";
  out << "max_steps=" << max_steps << "\n";
  out << "batch=" << batch << "\n";
  out << "patch=" << patch << "\n";
  out << "seed=" << seed << "\n";
  out << "adam_beta1=" << real_text(adam_beta1) << "\n";
  out << "adam_beta2=" << real_text(adam_beta2) << "\n";
  out << "adam_eps=" << real_text(adam_eps) << "\n";
  out << "checkpoint_every=" << checkpoint_every << "\n";
  out << "eval_crop=" << eval_crop << "\n";
  out << network.to_text();
  return out.str();
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key=value, got '" + line + "'");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

TrainConfig desk_profile() {
  TrainConfig cfg;
  cfg.lr0 = 1e-3;
  cfg.lr_halve_every = 250;
  cfg.epochs = 2000;
  cfg.max_steps = 2000;
  cfg.batch = 2;
  cfg.patch = 64;
  cfg.checkpoint_every = 500;
  cfg.eval_crop = 64;
  return cfg;
}

TrainConfig paper_profile() {
  TrainConfig cfg;  // defaults are the paper-scale settings
  cfg.checkpoint_every = 1000;
  return cfg;
}

const char* ablation_name(AblationId id) {
  switch (id) {
    case AblationId::full: return "full";
    case AblationId::no_iem: return "no_iem";
    case AblationId::no_cvmi: return "no_cvmi";
    case AblationId::no_csfi: return "no_csfi";
    case AblationId::no_cvmi_csfi: return "no_cvmi_csfi";
    case AblationId::no_spa: return "no_spa";
    case AblationId::no_fre: return "no_fre";
    case AblationId::no_csm1: return "no_csm1";
    case AblationId::no_csm2: return "no_csm2";
  }
  return "?";
}

AblationId parse_ablation(const std::string& name) {
  for (auto id : kAllAblations)
    if (name == ablation_name(id)) return id;
  throw ConfigError("unknown ablation '" + name + "'");
}

TrainConfig apply_ablation(TrainConfig cfg, AblationId id) {
  auto& n = cfg.network;
  switch (id) {
    case AblationId::full: break;
    case AblationId::no_iem: n.use_iem = false; break;
    case AblationId::no_cvmi: n.use_cvmi = false; break;
    case AblationId::no_csfi: n.use_csfi = false; break;
    case AblationId::no_cvmi_csfi: n.use_cvmi = n.use_csfi = false; break;
    case AblationId::no_spa: n.use_spa = false; break;
    case AblationId::no_fre: n.use_fre = false; break;
    case AblationId::no_csm1: n.use_csm_stage1 = false; break;
    case AblationId::no_csm2: n.use_csm_stage2 = false; break;
  }
  return cfg;
}

}  // namespace lfe::harness
