// Command-line front end. Every subcommand takes --config and --seed; errors
// are reported as one line "error<TAB><category><TAB><message>" on stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "lfe/degrade/dataset.hpp"
#include "lfe/filters/side_window.hpp"
#include "lfe/harness/apps.hpp"
#include "lfe/net/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace lfe;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kConfig = 3, kIo = 4, kContract = 5, kCheckpoint = 6, kNonFinite = 7 };

int report(const char* category, const std::string& message, int code) {
  std::string flat = message;
  for (auto& c : flat) {
    if (c == '\n' || c == '\t') c = ' ';
  }
  std::cerr << "error\t" << category << "\t" << flat << "\n";
  return code;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key=value configuration file (default: desk profile)");
    cmd->add_option("--seed", seed, "overrides the configuration seed");
  }

  harness::TrainConfig resolve() const {
    auto cfg = config.empty() ? harness::desk_profile() : harness::TrainConfig::load(config);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

void print_step(const harness::StepRecord& r) {
  std::printf("%s\n", harness::format_log_line(r).c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-light stereo enhancement: data factory, training, inference and evaluation"};
  app.require_subcommand(1);

  // degrade
  Common degrade_opts;
  std::string gt_dir, data_out, splits = "0.8,0.05,0.15";
  auto* degrade_cmd = app.add_subcommand("degrade", "Build a synthetic low-light dataset from clean stereo pairs");
  degrade_opts.attach(degrade_cmd);
  degrade_cmd->add_option("--gt", gt_dir, "directory with left/ and right/ PNG pairs")->required();
  degrade_cmd->add_option("--out", data_out, "dataset root to create")->required();
  degrade_cmd->add_option("--splits", splits, "train,val,test fractions");

  // filter
  Common filter_opts;
  std::string filter_in, filter_out;
  std::optional<int> radius, iterations;
  bool plain_box = false;
  auto* filter_cmd = app.add_subcommand("filter", "Side-window box filter of one PNG");
  filter_opts.attach(filter_cmd);
  filter_cmd->add_option("--in", filter_in, "input PNG")->required();
  filter_cmd->add_option("--out", filter_out, "output PNG")->required();
  filter_cmd->add_option("--radius", radius, "window radius (default from config)");
  filter_cmd->add_option("--iterations", iterations, "filter passes (default from config)");
  filter_cmd->add_flag("--box", plain_box, "plain box filter instead, for comparison");

  // train
  Common train_opts;
  std::string train_data, train_out;
  std::optional<int> train_steps;
  bool resume = false, quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train on the train split of a dataset");
  train_opts.attach(train_cmd);
  train_cmd->add_option("--data", train_data, "dataset root")->required();
  train_cmd->add_option("--out", train_out, "run directory (log, checkpoint, trainer state)")->required();
  train_cmd->add_option("--max-steps", train_steps, "overrides max_steps");
  train_cmd->add_flag("--resume", resume, "continue from the state in --out");
  train_cmd->add_flag("--quiet", quiet, "do not echo log lines");

  // enhance
  Common enhance_opts;
  std::string checkpoint, left, right, enhance_data, split = "test", enhance_out;
  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance stereo pairs with a trained checkpoint");
  enhance_opts.attach(enhance_cmd);
  enhance_cmd->add_option("--checkpoint", checkpoint, "model.ckpt")->required();
  auto* left_opt = enhance_cmd->add_option("--left", left, "low-light left view");
  auto* right_opt = enhance_cmd->add_option("--right", right, "low-light right view");
  auto* data_opt = enhance_cmd->add_option("--data", enhance_data, "dataset root; enhances every pair of --split");
  enhance_cmd->add_option("--split", split, "train, val or test");
  enhance_cmd->add_option("--out", enhance_out, "writes <out>/left/<id>.png and <out>/right/<id>.png")->required();
  left_opt->needs(right_opt);
  right_opt->needs(left_opt);
  data_opt->excludes(left_opt);

  // eval
  Common eval_opts;
  std::string pred_dir, eval_gt, mse_dir;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM table of enhanced pairs against ground truth");
  eval_opts.attach(eval_cmd);
  eval_cmd->add_option("--pred", pred_dir, "directory with left/ and right/ predictions")->required();
  eval_cmd->add_option("--gt", eval_gt, "directory with left/ and right/ ground truth")->required();
  eval_cmd->add_option("--emit-mse-maps", mse_dir, "write binary error maps here");

  // ablate
  Common ablate_opts;
  std::string ablate_data, ablate_out;
  std::optional<int> ablate_steps;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate every ablation under one seed");
  ablate_opts.attach(ablate_cmd);
  ablate_cmd->add_option("--data", ablate_data, "dataset root")->required();
  ablate_cmd->add_option("--out", ablate_out, "one run directory per ablation plus ablation.tsv")->required();
  ablate_cmd->add_option("--max-steps", ablate_steps, "overrides max_steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kUsage);
  }

  try {
    if (degrade_cmd->parsed()) {
      const auto cfg = degrade_opts.resolve();
      const auto manifest = degrade::build_dataset(gt_dir, data_out, cfg.seed, degrade::SplitSpec::parse(splits));
      std::size_t counts[3] = {0, 0, 0};
      for (const auto& e : manifest.entries) ++counts[static_cast<int>(e.split)];
      std::printf("pairs\t%zu\ntrain\t%zu\nval\t%zu\ntest\t%zu\nskipped\t%zu\n", manifest.entries.size(), counts[0],
                  counts[1], counts[2], manifest.skipped.size());
    } else if (filter_cmd->parsed()) {
      auto spec = filter_opts.resolve().network.lowfre;
      if (radius) spec.radius = *radius;
      if (iterations) spec.iterations = *iterations;
      spec.validate();
      const auto image = degrade::read_png(filter_in);
      degrade::write_png(filter_out, plain_box ? filters::box_filter(image, spec.radius)
                                               : filters::side_window_box_filter(image, spec));
    } else if (train_cmd->parsed()) {
      auto cfg = train_opts.resolve();
      if (train_steps) cfg.max_steps = *train_steps;
      cfg.validate();
      harness::TrainOptions options;
      options.resume = resume;
      if (!quiet) {
        std::printf("%s\n", harness::kLogHeader);
        options.on_step = [](const harness::StepRecord& r, const harness::Trainer&) {
          print_step(r);
          return true;
        };
      }
      const auto result = harness::train(cfg, train_data, train_out, options);
      std::fprintf(stderr, "trained\t%lld steps\t%s\n", static_cast<long long>(result.steps),
                   (fs::path(train_out) / "model.ckpt").c_str());
    } else if (enhance_cmd->parsed()) {
      const fs::path out(enhance_out);
      if (!left.empty()) {
        const auto stem = fs::path(left).stem().string();
        harness::enhance_files(checkpoint, left, right, out / "left" / (stem + ".png"),
                               out / "right" / (fs::path(right).stem().string() + ".png"));
      } else if (!enhance_data.empty()) {
        const auto model = net::load_checkpoint(checkpoint);
        for (const auto& s : degrade::load_split(enhance_data, degrade::parse_split(split))) {
          const auto [h_l, h_r] = harness::enhance_pair(model.params, model.config, s.low_left, s.low_right);
          degrade::write_png(out / "left" / (s.id + ".png"), h_l);
          degrade::write_png(out / "right" / (s.id + ".png"), h_r);
          std::printf("%s\n", s.id.c_str());
        }
      } else {
        return report("usage", "enhance needs --left/--right or --data", kUsage);
      }
    } else if (eval_cmd->parsed()) {
      std::optional<fs::path> maps;
      if (!mse_dir.empty()) maps = mse_dir;
      std::fputs(harness::format_eval_table(harness::evaluate_dirs(pred_dir, eval_gt, maps)).c_str(), stdout);
    } else if (ablate_cmd->parsed()) {
      auto cfg = ablate_opts.resolve();
      if (ablate_steps) cfg.max_steps = *ablate_steps;
      cfg.validate();
      std::fputs(harness::format_ablation_table(harness::ablate(cfg, ablate_data, ablate_out)).c_str(), stdout);
    }
  } catch (const ConfigError& e) {
    return report("config", e.what(), kConfig);
  } catch (const IoError& e) {
    return report("io", e.what(), kIo);
  } catch (const CheckpointError& e) {
    return report("checkpoint", e.what(), kCheckpoint);
  } catch (const NonFiniteLoss& e) {
    return report("nonfinite", "step " + std::to_string(e.step()) + ": " + e.what(), kNonFinite);
  } catch (const ContractViolation& e) {
    return report("contract", e.what(), kContract);
  } catch (const std::exception& e) {
    return report("internal", e.what(), kInternal);
  }
  return kOk;
}
