#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lfe/harness/trainer.hpp"

namespace lfe::harness {

/// Loads a checkpoint and enhances one stereo pair of PNG files, writing
/// 8-bit PNGs of the input size.
void enhance_files(const fs::path& checkpoint, const fs::path& low_left, const fs::path& low_right,
                   const fs::path& out_left, const fs::path& out_right);

/// Compares pred_dir/{left,right}/<id>.png with gt_dir/{left,right}/<id>.png
/// for every id present in pred_dir/left. With `mse_dir`, writes binary
/// error maps to mse_dir/{left,right}/<id>.png (white = error at or above
/// the per-image Otsu threshold).
EvalSummary evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir,
                          const std::optional<fs::path>& mse_dir = std::nullopt);

/// id, psnr_left, psnr_right, ssim_left, ssim_right; one row per sample and
/// a final "mean" row.
std::string format_eval_table(const EvalSummary& summary);

struct AblationRow {
  AblationId id = AblationId::full;
  std::int64_t parameters = 0;
  std::int64_t steps = 0;
  ViewMetrics metrics;
};

/// Trains every ablation under the same seed, data and step budget and
/// evaluates each on `eval_samples`. Models go to out_dir/<ablation>/.
std::vector<AblationRow> ablate_samples(const TrainConfig& base, const std::vector<degrade::StereoSample>& train_set,
                                        const std::vector<degrade::StereoSample>& eval_set, const fs::path& out_dir,
                                        const std::vector<AblationId>& ids = {kAllAblations.begin(),
                                                                              kAllAblations.end()});

/// Train split for training, test split (or val when test is empty) for
/// evaluation; writes out_dir/ablation.tsv.
std::vector<AblationRow> ablate(const TrainConfig& base, const fs::path& data_dir, const fs::path& out_dir);

/// ablation, psnr_left, psnr_right, ssim_left, ssim_right, parameters.
std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace lfe::harness
