#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lfe/degrade/degrade.hpp"
#include "lfe/harness/adam.hpp"
#include "lfe/harness/config.hpp"
#include "lfe/net/modules.hpp"
#include "lfe/objectives/losses.hpp"

namespace lfe::harness {

namespace fs = std::filesystem;

struct StepRecord {
  std::int64_t step = 0;  // 1-based index of the completed step
  double lr = 0, l_fre = 0, l_spa = 0, total = 0;
  /// Worst |row sum - 1| over every attention map of the step; +inf if any
  /// entry was non-finite; 0 when no attention ran.
  double attention_error = 0;
};

/// Tab-separated log line: step, lr, l_fre, l_spa, total.
std::string format_log_line(const StepRecord& record);
inline constexpr const char* kLogHeader = "step\tlr\tl_fre\tl_spa\ttotal";

struct ViewMetrics {
  std::string id;
  double psnr_left = 0, psnr_right = 0, ssim_left = 0, ssim_right = 0;
};

struct EvalSummary {
  std::vector<ViewMetrics> per_sample;
  ViewMetrics mean;
};

/// Runs the network in inference mode on one stereo pair [3,H,W]; outputs
/// are clamped to [0,1].
std::pair<Tensor<float>, Tensor<float>> enhance_pair(const net::ParameterStore<float>& params,
                                                     const net::NetworkConfig& cfg, const Tensor<float>& low_left,
                                                     const Tensor<float>& low_right);

/// PSNR/SSIM of enhanced views against ground truth, each sample centre
/// cropped to `crop` first (0 = full image).
EvalSummary evaluate(const net::ParameterStore<float>& params, const net::NetworkConfig& cfg,
                     const std::vector<degrade::StereoSample>& samples, int crop);

/// Minibatch training: epoch = one pass over the samples in a seeded
/// order; each step crops, runs both views, applies the loss and Adam.
/// The crop generator of step s and the order of epoch e are derived from
/// (seed, s) and (seed, e), so a resumed run replays the same stream.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<degrade::StereoSample> samples);

  const TrainConfig& config() const { return cfg_; }
  net::ParameterStore<float>& params() { return params_; }
  const net::ParameterStore<float>& params() const { return params_; }
  const Adam<float>& optimizer() const { return adam_; }

  std::int64_t steps_done() const { return step_; }
  std::int64_t steps_per_epoch() const;
  /// Total steps the config asks for (max_steps or epochs x steps_per_epoch).
  std::int64_t planned_steps() const;
  std::int64_t epoch_of_step(std::int64_t step) const { return step / steps_per_epoch(); }
  double lr_for_step(std::int64_t step) const;

  /// One optimisation step. Throws NonFiniteLoss before touching parameters
  /// when the loss is not finite.
  StepRecord run_step();

  /// model.ckpt (parameters) and trainer.state (Adam moments, step count).
  void save(const fs::path& dir) const;
  /// Restores both files written by save(); the config must match apart
  /// from epochs and max_steps.
  void resume(const fs::path& dir);

 private:
  struct Prepared {
    degrade::StereoSample sample;
    Tensor<float> lowfre_left, lowfre_right;
  };

  std::vector<std::size_t> epoch_order(std::int64_t epoch) const;

  TrainConfig cfg_;
  std::vector<Prepared> samples_;
  net::ParameterStore<float> params_;
  Adam<float> adam_;
  std::int64_t step_ = 0;
};

struct TrainOptions {
  bool resume = false;
  /// Called after every step; return false to stop early.
  std::function<bool(const StepRecord&, const Trainer&)> on_step;
};

struct TrainResult {
  std::int64_t steps = 0;
  StepRecord last;
};

/// Trains on the train split of `data_dir`, appending to out_dir/train_log.tsv
/// and writing out_dir/model.ckpt and out_dir/trainer.state. On a non-finite
/// loss the step is noted in the log, the last saved state is left on disk
/// and NonFiniteLoss propagates.
TrainResult train(const TrainConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                  const TrainOptions& options = {});

/// Same, with samples supplied directly.
TrainResult train_samples(const TrainConfig& cfg, std::vector<degrade::StereoSample> samples,
                          const fs::path& out_dir, const TrainOptions& options = {});

}  // namespace lfe::harness
