#include "lfe/harness/apps.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfe/degrade/dataset.hpp"
#include "lfe/net/checkpoint.hpp"

namespace lfe::harness {

namespace {

std::string metric_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Tensor<float> as_rgb(const Tensor<float>& map) {
  const auto h = map.dim(0), w = map.dim(1);
  std::vector<float> v;
  v.reserve(3 * h * w);
  for (int c = 0; c < 3; ++c) v.insert(v.end(), map.data().begin(), map.data().end());
  return Tensor<float>(Shape{3, h, w}, std::move(v));
}

}  // namespace

void enhance_files(const fs::path& checkpoint, const fs::path& low_left, const fs::path& low_right,
                   const fs::path& out_left, const fs::path& out_right) {
  const auto model = net::load_checkpoint(checkpoint);
  const auto l = degrade::read_png(low_left), r = degrade::read_png(low_right);
  if (l.shape() != r.shape()) {
    throw ContractViolation("stereo views differ in size: " + shape_str(l.shape()) + " vs " + shape_str(r.shape()));
  }
  const auto [h_l, h_r] = enhance_pair(model.params, model.config, l, r);
  degrade::write_png(out_left, h_l);
  degrade::write_png(out_right, h_r);
}

EvalSummary evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir, const std::optional<fs::path>& mse_dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(pred_dir / "left")) throw IoError("missing directory " + (pred_dir / "left").string());
  for (const auto& entry : fs::directory_iterator(pred_dir / "left")) {
    if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw IoError("no PNG files in " + (pred_dir / "left").string());

  EvalSummary summary;
  summary.mean.id = "mean";
  for (const auto& id : ids) {
    ViewMetrics m;
    m.id = id;
    for (const char* side : {"left", "right"}) {
      const auto pred = degrade::read_png(pred_dir / side / (id + ".png"));
      const auto gt = degrade::read_png(gt_dir / side / (id + ".png"));
      if (pred.shape() != gt.shape()) {
        throw ContractViolation(id + " (" + side + "): prediction " + shape_str(pred.shape()) +
                                " and ground truth " + shape_str(gt.shape()) + " differ");
      }
      const bool left = side[0] == 'l';
      (left ? m.psnr_left : m.psnr_right) = objectives::psnr(pred, gt);
      {
        NoGradGuard guard;
        (left ? m.ssim_left : m.ssim_right) = objectives::ssim(pred, gt).item();
      }
      if (mse_dir) degrade::write_png(*mse_dir / side / (id + ".png"), as_rgb(objectives::mse_map(pred, gt)));
    }
    summary.per_sample.push_back(m);
  }
  const double n = static_cast<double>(ids.size());
  for (const auto& m : summary.per_sample) {
    summary.mean.psnr_left += m.psnr_left / n;
    summary.mean.psnr_right += m.psnr_right / n;
    summary.mean.ssim_left += m.ssim_left / n;
    summary.mean.ssim_right += m.ssim_right / n;
  }
  return summary;
}

std::string format_eval_table(const EvalSummary& summary) {
  std::ostringstream out;
  out << "id\tpsnr_left\tpsnr_right\tssim_left\tssim_right\n";
  auto row = [&](const ViewMetrics& m) {
    out << m.id << "\t" << metric_text(m.psnr_left) << "\t" << metric_text(m.psnr_right) << "\t"
        << metric_text(m.ssim_left) << "\t" << metric_text(m.ssim_right) << "\n";
  };
  for (const auto& m : summary.per_sample) row(m);
  row(summary.mean);
  return out.str();
}

std::vector<AblationRow> ablate_samples(const TrainConfig& base, const std::vector<degrade::StereoSample>& train_set,
                                        const std::vector<degrade::StereoSample>& eval_set, const fs::path& out_dir,
                                        const std::vector<AblationId>& ids) {
  std::vector<AblationRow> rows;
  for (auto id : ids) {
    const auto cfg = apply_ablation(base, id);
    const auto dir = out_dir / ablation_name(id);
    const auto result = train_samples(cfg, train_set, dir);
    const auto model = net::load_checkpoint(dir / "model.ckpt");
    AblationRow row;
    row.id = id;
    row.parameters = model.params.numel();
    row.steps = result.steps;
    row.metrics = evaluate(model.params, model.config, eval_set, cfg.eval_crop).mean;
    row.metrics.id = ablation_name(id);
    rows.push_back(row);
  }
  return rows;
}

std::vector<AblationRow> ablate(const TrainConfig& base, const fs::path& data_dir, const fs::path& out_dir) {
  const auto train_set = degrade::load_split(data_dir, degrade::Split::train);
  auto eval_set = degrade::load_split(data_dir, degrade::Split::test);
  if (eval_set.empty()) eval_set = degrade::load_split(data_dir, degrade::Split::val);
  if (train_set.empty()) throw ConfigError("dataset " + data_dir.string() + " has no training samples");
  if (eval_set.empty()) throw ConfigError("dataset " + data_dir.string() + " has no held-out samples");
  auto rows = ablate_samples(base, train_set, eval_set, out_dir);
  std::ofstream table(out_dir / "ablation.tsv");
  if (!table) throw IoError("cannot write " + (out_dir / "ablation.tsv").string());
  table << format_ablation_table(rows);
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "ablation\tpsnr_left\tpsnr_right\tssim_left\tssim_right\tparameters\n";
  for (const auto& r : rows) {
    out << ablation_name(r.id) << "\t" << metric_text(r.metrics.psnr_left) << "\t" << metric_text(r.metrics.psnr_right)
        << "\t" << metric_text(r.metrics.ssim_left) << "\t" << metric_text(r.metrics.ssim_right) << "\t"
        << r.parameters << "\n";
  }
  return out.str();
}

}  // namespace lfe::harness
