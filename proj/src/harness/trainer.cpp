#include "lfe/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lfe/core/ops.hpp"
#include "lfe/degrade/dataset.hpp"
#include "lfe/harness/data.hpp"
#include "lfe/net/checkpoint.hpp"

namespace lfe::harness {

double scheduled_lr(double lr0, int halve_every, std::int64_t epoch) {
  return lr0 * std::pow(0.5, static_cast<double>(epoch / halve_every));
}

std::string format_log_line(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld\t%.9g\t%.9g\t%.9g\t%.9g", static_cast<long long>(r.step), r.lr, r.l_fre,
                r.l_spa, r.total);
  return buf;
}

std::pair<Tensor<float>, Tensor<float>> enhance_pair(const net::ParameterStore<float>& params,
                                                     const net::NetworkConfig& cfg, const Tensor<float>& low_left,
                                                     const Tensor<float>& low_right) {
  NoGradGuard guard;
  auto out = net::network_forward(batch_of_one(low_left), batch_of_one(low_right), params, cfg);
  auto finish = [](const Tensor<float>& t) {
    std::vector<float> v(t.data().begin(), t.data().end());
    for (auto& x : v) x = std::clamp(x, 0.0f, 1.0f);
    return Tensor<float>(Shape{t.dim(1), t.dim(2), t.dim(3)}, std::move(v));
  };
  return {finish(out.h_l), finish(out.h_r)};
}

EvalSummary evaluate(const net::ParameterStore<float>& params, const net::NetworkConfig& cfg,
                     const std::vector<degrade::StereoSample>& samples, int crop) {
  EvalSummary summary;
  summary.mean.id = "mean";
  for (const auto& full : samples) {
    const auto s = center_crop(full, crop);
    const auto [h_l, h_r] = enhance_pair(params, cfg, s.low_left, s.low_right);
    ViewMetrics m;
    m.id = s.id;
    m.psnr_left = objectives::psnr(h_l, s.gt_left);
    m.psnr_right = objectives::psnr(h_r, s.gt_right);
    {
      NoGradGuard guard;
      m.ssim_left = objectives::ssim(h_l, s.gt_left).item();
      m.ssim_right = objectives::ssim(h_r, s.gt_right).item();
    }
    summary.per_sample.push_back(m);
  }
  if (!summary.per_sample.empty()) {
    const double n = static_cast<double>(summary.per_sample.size());
    for (const auto& m : summary.per_sample) {
      summary.mean.psnr_left += m.psnr_left / n;
      summary.mean.psnr_right += m.psnr_right / n;
      summary.mean.ssim_left += m.ssim_left / n;
      summary.mean.ssim_right += m.ssim_right / n;
    }
  }
  return summary;
}

Trainer::Trainer(TrainConfig cfg, std::vector<degrade::StereoSample> samples) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (samples.empty()) throw ConfigError("no training samples");
  for (auto& s : samples) {
    Prepared p;
    if (cfg_.network.use_iem) {
      p.lowfre_left = filters::side_window_box_filter(s.low_left, cfg_.network.lowfre);
      p.lowfre_right = filters::side_window_box_filter(s.low_right, cfg_.network.lowfre);
    } else {
      p.lowfre_left = s.low_left;
      p.lowfre_right = s.low_right;
    }
    p.sample = std::move(s);
    samples_.push_back(std::move(p));
  }
  params_ = net::init_parameters<float>(cfg_.network, cfg_.seed);
  adam_ = Adam<float>(cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
}

std::int64_t Trainer::steps_per_epoch() const {
  const auto n = static_cast<std::int64_t>(samples_.size());
  return (n + cfg_.batch - 1) / cfg_.batch;
}

std::int64_t Trainer::planned_steps() const {
  return cfg_.max_steps > 0 ? cfg_.max_steps : static_cast<std::int64_t>(cfg_.epochs) * steps_per_epoch();
}

double Trainer::lr_for_step(std::int64_t step) const {
  return scheduled_lr(cfg_.lr0, cfg_.lr_halve_every, epoch_of_step(step));
}

std::vector<std::size_t> Trainer::epoch_order(std::int64_t epoch) const {
  std::vector<std::size_t> order(samples_.size());
  std::iota(order.begin(), order.end(), 0);
  degrade::Rng rng(degrade::derive_seed(cfg_.seed ^ 0x6f726465720aULL, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

StepRecord Trainer::run_step() {
  const std::int64_t step = step_;
  const auto epoch = epoch_of_step(step);
  const auto order = epoch_order(epoch);
  const auto within = step % steps_per_epoch();
  degrade::Rng rng(degrade::derive_seed(cfg_.seed ^ 0x63726f70ULL, static_cast<std::uint64_t>(step)));

  std::vector<Tensor<float>> low_l, low_r, lf_l, lf_r, gt_l, gt_r;
  for (int b = 0; b < cfg_.batch; ++b) {
    const auto& p = samples_[order[(within * cfg_.batch + b) % order.size()]];
    const auto win = draw_crop(p.sample.low_left.dim(1), p.sample.low_left.dim(2), cfg_.patch, rng);
    low_l.push_back(apply_crop(p.sample.low_left, win));
    low_r.push_back(apply_crop(p.sample.low_right, win));
    lf_l.push_back(apply_crop(p.lowfre_left, win));
    lf_r.push_back(apply_crop(p.lowfre_right, win));
    gt_l.push_back(apply_crop(p.sample.gt_left, win));
    gt_r.push_back(apply_crop(p.sample.gt_right, win));
  }
  const auto gl = stack(gt_l), gr = stack(gt_r);
  const auto out = net::network_forward(stack(low_l), stack(low_r), stack(lf_l), stack(lf_r), params_, cfg_.network);

  StepRecord rec;
  rec.step = step + 1;
  rec.lr = lr_for_step(step);
  Tensor<float> loss;
  if (cfg_.network.use_fre) {
    auto l = objectives::fre_loss(out.h_l, out.h_r, gl, gr);
    rec.l_fre = l.item();
    loss = l;
  }
  if (cfg_.network.use_spa) {
    auto l = objectives::spa_loss(out.h_l, out.h_r, gl, gr);
    rec.l_spa = l.item();
    loss = loss.defined() ? ops::add(loss, l) : l;
  }
  rec.total = loss.item();
  if (!std::isfinite(rec.total)) throw NonFiniteLoss(rec.step, "total loss is " + std::to_string(rec.total));
  for (const auto& pair : out.attention) rec.attention_error = std::max(rec.attention_error, net::attention_row_error(pair));

  params_.zero_grad();
  loss.backward();
  adam_.step(params_, rec.lr);
  ++step_;
  return rec;
}

void Trainer::save(const fs::path& dir) const {
  net::save_checkpoint(dir / "model.ckpt", cfg_.network, params_);
  net::RecordFile state;
  std::ostringstream header;
  header << "step=" << step_ << "\nadam_t=" << adam_.steps() << "\n" << cfg_.to_text();
  state.header = header.str();
  for (const auto* table : {&adam_.first_moments(), &adam_.second_moments()}) {
    const char* kind = table == &adam_.first_moments() ? "adam.m." : "adam.v.";
    for (const auto& [name, values] : *table) {
      state.records.push_back({kind + name, params_.get(name).shape(), values});
    }
  }
  net::write_records(dir / "trainer.state", net::kTrainerStateMagic, state);
}

namespace {

// Config text minus the step budget, which a resumed run may extend.
std::string without_budget(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("epochs=", 0) == 0 || line.rfind("max_steps=", 0) == 0) continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace

void Trainer::resume(const fs::path& dir) {
  auto model = net::load_checkpoint(dir / "model.ckpt");
  if (model.config.to_text() != cfg_.network.to_text()) {
    throw CheckpointError("checkpoint network configuration differs from the training configuration");
  }
  auto state = net::read_records(dir / "trainer.state", net::kTrainerStateMagic);
  std::istringstream header(state.header);
  std::string line, rest;
  std::int64_t step = -1, t = -1;
  while (std::getline(header, line)) {
    if (line.rfind("step=", 0) == 0) step = std::stoll(line.substr(5));
    else if (line.rfind("adam_t=", 0) == 0) t = std::stoll(line.substr(7));
    else rest += line + "\n";
  }
  if (step < 0 || t < 0) throw CheckpointError("trainer.state: missing step counters");
  if (without_budget(rest) != without_budget(cfg_.to_text())) {
    throw CheckpointError("trainer.state: training configuration differs");
  }
  Adam<float> adam(cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
  adam.set_steps(t);
  for (auto& rec : state.records) {
    const bool first = rec.name.rfind("adam.m.", 0) == 0;
    if (!first && rec.name.rfind("adam.v.", 0) != 0) throw CheckpointError("trainer.state: unexpected record " + rec.name);
    const auto name = rec.name.substr(7);
    if (!model.params.contains(name) || model.params.get(name).numel() != static_cast<std::int64_t>(rec.values.size())) {
      throw CheckpointError("trainer.state: record " + rec.name + " does not match the model");
    }
    (first ? adam.first_moments() : adam.second_moments())[name] = std::move(rec.values);
  }
  params_ = std::move(model.params);
  adam_ = std::move(adam);
  step_ = step;
}

TrainResult train_samples(const TrainConfig& cfg, std::vector<degrade::StereoSample> samples, const fs::path& out_dir,
                          const TrainOptions& options) {
  Trainer trainer(cfg, std::move(samples));
  fs::create_directories(out_dir);
  const auto log_path = out_dir / "train_log.tsv";
  if (options.resume) {
    trainer.resume(out_dir);
  }
  std::ofstream log(log_path, options.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  if (!options.resume) log << kLogHeader << "\n";

  TrainResult result;
  while (trainer.steps_done() < trainer.planned_steps()) {
    StepRecord rec;
    try {
      rec = trainer.run_step();
    } catch (const NonFiniteLoss& e) {
      log << "# non-finite loss at step\t" << e.step() << "\n";
      log.flush();
      throw;
    }
    log << format_log_line(rec) << "\n";
    result.last = rec;
    const bool keep_going = !options.on_step || options.on_step(rec, trainer);
    if (cfg.checkpoint_every > 0 && rec.step % cfg.checkpoint_every == 0) {
      log.flush();
      trainer.save(out_dir);
    }
    if (!keep_going) break;
  }
  log.flush();
  trainer.save(out_dir);
  result.steps = trainer.steps_done();
  return result;
}

TrainResult train(const TrainConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                  const TrainOptions& options) {
  auto samples = degrade::load_split(data_dir, degrade::Split::train);
  if (samples.empty()) throw ConfigError("dataset " + data_dir.string() + " has no training samples");
  return train_samples(cfg, std::move(samples), out_dir, options);
}

}  // namespace lfe::harness
