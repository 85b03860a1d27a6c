#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lfe/core/ops.hpp"
#include "lfe/degrade/dataset.hpp"
#include "lfe/harness/apps.hpp"
#include "lfe/harness/data.hpp"
#include "lfe/net/checkpoint.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace lfe::harness {
namespace {

using testing::as_double;
using testing::TempDir;

const fs::path kStereo = fs::path(LFE_TEST_DATA_DIR) / "stereo";
constexpr int kDisparity = 6;  // right(x) = left(x + 6) in the fixture pairs

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

degrade::StereoSample fixture(const std::string& id, std::uint64_t seed) {
  const auto l = degrade::read_png(kStereo / "left" / (id + ".png"));
  const auto r = degrade::read_png(kStereo / "right" / (id + ".png"));
  degrade::Rng rng(seed);
  auto params = degrade::sample_params(rng);
  degrade::Rng noise(params.seed);
  return degrade::degrade_pair(id, l, r, params, noise);
}

std::vector<degrade::StereoSample> micro_samples(std::int64_t crop) {
  return {center_crop(fixture("astronaut", 1), crop), center_crop(fixture("chelsea", 2), crop)};
}

TrainConfig tiny_config() {
  TrainConfig cfg = desk_profile();
  cfg.network.base_channels = 4;
  cfg.network.ca_reduction = 2;
  cfg.network.lowfre = {1, 2};
  cfg.patch = 16;
  cfg.eval_crop = 16;
  cfg.checkpoint_every = 0;
  cfg.seed = 7;
  return cfg;
}

std::vector<std::string> log_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

TEST(Adam, MatchesThreeStepTrace) {
  // p0 = (1, -2), fixed gradients per step, lr 0.1, default betas.
  // Expected values computed offline in double with the textbook update.
  net::ParameterStore<float> store;
  store.add("p", Tensor<float>(Shape{2}, std::vector<float>{1.0f, -2.0f}));
  Adam<float> adam;
  const std::vector<std::vector<float>> grads{{0.5f, -1.0f}, {0.1f, 0.3f}, {-0.2f, 0.0f}};
  const std::vector<std::vector<double>> expected{{0.8999999761581421, -1.899999976158142},
                                                  {0.8196958899497986, -1.857215166091919},
                                                  {0.7852604985237122, -1.824142336845398}};
  for (int t = 0; t < 3; ++t) {
    store.zero_grad();
    auto c = Tensor<float>(Shape{2}, grads[t]);
    ops::sum(ops::mul(store.get("p"), c)).backward();
    adam.step(store, 0.1);
    EXPECT_NEAR(store.get("p")[0], expected[t][0], 1e-6) << "step " << t + 1;
    EXPECT_NEAR(store.get("p")[1], expected[t][1], 1e-6) << "step " << t + 1;
  }
  EXPECT_EQ(adam.steps(), 3);
}

TEST(Adam, SkipsParametersWithoutGradient) {
  net::ParameterStore<float> store;
  store.add("a", Tensor<float>(Shape{1}, 1.0f));
  store.add("b", Tensor<float>(Shape{1}, 1.0f));
  ops::sum(store.get("a")).backward();
  Adam<float> adam;
  adam.step(store, 0.1);
  EXPECT_NEAR(store.get("a")[0], 0.9f, 1e-7);
  EXPECT_EQ(store.get("b")[0], 1.0f);
}

TEST(Schedule, HalvesEveryConfiguredEpoch) {
  EXPECT_EQ(scheduled_lr(2e-4, 250, 0), 2e-4);
  EXPECT_EQ(scheduled_lr(2e-4, 250, 249), 2e-4);
  EXPECT_EQ(scheduled_lr(2e-4, 250, 250), 1e-4);
  EXPECT_EQ(scheduled_lr(2e-4, 250, 500), 5e-5);
  auto cfg = tiny_config();
  auto samples = micro_samples(16);
  samples.push_back(samples[0]);  // three samples, batch 2: two steps per epoch
  Trainer trainer(cfg, samples);
  EXPECT_EQ(trainer.steps_per_epoch(), 2);
  EXPECT_EQ(trainer.lr_for_step(499), cfg.lr0);
  EXPECT_EQ(trainer.lr_for_step(500), cfg.lr0 / 2);
}

TEST(Schedule, LoggedLrAtEpoch250IsHalved) {
  TempDir dir;
  auto cfg = tiny_config();
  cfg.network.base_channels = 2;
  cfg.network.ca_reduction = 1;
  cfg.max_steps = 251;
  train_samples(cfg, micro_samples(16), dir.path());
  const auto lines = log_lines(dir.path() / "train_log.tsv");
  ASSERT_EQ(lines.size(), 252u);
  auto lr_of = [&](std::size_t i) { return std::stod(lines[i].substr(lines[i].find('\t') + 1)); };
  EXPECT_EQ(lr_of(250), cfg.lr0);      // step 250 runs in epoch 249
  EXPECT_EQ(lr_of(251), cfg.lr0 / 2);  // step 251 is the first of epoch 250
}

TEST(Crop, FullSizePatchIsIdentity) {
  const auto s = center_crop(fixture("coffee", 3), 32);
  degrade::Rng rng(1);
  const auto c = random_paired_crop(s, 32, rng);
  EXPECT_EQ(as_double(c.low_left), as_double(s.low_left));
  EXPECT_EQ(as_double(c.gt_right), as_double(s.gt_right));
}

TEST(Crop, SameSeedSameOffsets) {
  degrade::Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    const auto wa = draw_crop(96, 128, 32, a), wb = draw_crop(96, 128, 32, b);
    EXPECT_EQ(wa.top, wb.top);
    EXPECT_EQ(wa.left, wb.left);
  }
}

TEST(Crop, PreservesKnownDisparity) {
  const auto l = degrade::read_png(kStereo / "left" / "rocket.png");
  const auto r = degrade::read_png(kStereo / "right" / "rocket.png");
  const auto h = l.dim(1), w = l.dim(2);
  // The fixture itself carries the disparity.
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x + kDisparity < w; ++x) ASSERT_EQ(r[y * w + x], l[y * w + x + kDisparity]);

  degrade::StereoSample s{"rocket", l, r, l, r, std::nullopt};
  degrade::Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_paired_crop(s, 32, rng);
    for (std::int64_t ch = 0; ch < 3; ++ch)
      for (std::int64_t y = 0; y < 32; ++y)
        for (std::int64_t x = 0; x + kDisparity < 32; ++x) {
          ASSERT_EQ(c.low_right[(ch * 32 + y) * 32 + x], c.low_left[(ch * 32 + y) * 32 + x + kDisparity]);
        }
  }
}

TEST(Crop, SmallImagesAreReflectPadded) {
  const auto s = center_crop(fixture("coffee", 4), 8);
  degrade::Rng rng(2);
  const auto c = random_paired_crop(s, 16, rng);
  EXPECT_EQ(c.low_left.shape(), (Shape{3, 16, 16}));
  EXPECT_EQ(c.gt_left[0], s.gt_left[0]);
  // Row 8 mirrors row 6.
  EXPECT_EQ(c.gt_left[8 * 16 + 0], s.gt_left[6 * 8 + 0]);
}

TEST(Train, LossDecreasesOnAFixedMicroBatch) {
  TempDir dir;
  auto cfg = tiny_config();
  cfg.max_steps = 50;
  std::vector<double> totals;
  TrainOptions opt;
  opt.on_step = [&](const StepRecord& r, const Trainer&) {
    totals.push_back(r.total);
    return true;
  };
  train_samples(cfg, micro_samples(16), dir.path(), opt);
  ASSERT_EQ(totals.size(), 50u);
  EXPECT_LT(totals.back(), totals.front());
}

TEST(Train, IdenticalRunsGiveIdenticalLogsAndCheckpoints) {
  TempDir a, b;
  auto cfg = tiny_config();
  cfg.patch = 16;
  cfg.max_steps = 12;
  const auto samples = micro_samples(32);
  train_samples(cfg, samples, a.path());
  train_samples(cfg, samples, b.path());
  EXPECT_EQ(slurp(a.path() / "train_log.tsv"), slurp(b.path() / "train_log.tsv"));
  EXPECT_EQ(slurp(a.path() / "model.ckpt"), slurp(b.path() / "model.ckpt"));
  EXPECT_EQ(slurp(a.path() / "trainer.state"), slurp(b.path() / "trainer.state"));
  EXPECT_EQ(log_lines(a.path() / "train_log.tsv").front(), kLogHeader);
}

TEST(Train, ResumedRunMatchesUninterruptedRun) {
  TempDir straight, split;
  auto cfg = tiny_config();
  cfg.max_steps = 100;
  const auto samples = micro_samples(32);  // 32x32 images, 16x16 crops
  train_samples(cfg, samples, straight.path());

  auto half = cfg;
  half.max_steps = 50;
  train_samples(half, samples, split.path());
  TrainOptions resume;
  resume.resume = true;
  const auto result = train_samples(cfg, samples, split.path(), resume);
  EXPECT_EQ(result.steps, 100);

  EXPECT_EQ(slurp(straight.path() / "train_log.tsv"), slurp(split.path() / "train_log.tsv"));
  const auto a = net::load_checkpoint(straight.path() / "model.ckpt");
  const auto b = net::load_checkpoint(split.path() / "model.ckpt");
  for (const auto& [name, t] : a.params.entries()) EXPECT_EQ(as_double(t), as_double(b.params.get(name))) << name;
}

TEST(Train, ResumeRejectsADifferentConfiguration) {
  TempDir dir;
  auto cfg = tiny_config();
  cfg.max_steps = 2;
  train_samples(cfg, micro_samples(16), dir.path());
  auto other = cfg;
  other.lr0 = 5e-4;
  TrainOptions resume;
  resume.resume = true;
  EXPECT_THROW(train_samples(other, micro_samples(16), dir.path(), resume), CheckpointError);
}

TEST(Train, NonFiniteLossAbortsBeforeTheUpdate) {
  TempDir dir;
  auto cfg = tiny_config();
  auto samples = micro_samples(16);
  for (auto* s : {&samples[0], &samples[1]}) s->gt_left.mutable_data()[3] = std::numeric_limits<float>::quiet_NaN();
  Trainer trainer(cfg, samples);
  const auto before = trainer.params().clone();
  try {
    trainer.run_step();
    FAIL() << "expected NonFiniteLoss";
  } catch (const NonFiniteLoss& e) {
    EXPECT_EQ(e.step(), 1);
  }
  EXPECT_EQ(trainer.steps_done(), 0);
  for (const auto& [name, t] : before.entries()) EXPECT_EQ(as_double(t), as_double(trainer.params().get(name)));

  cfg.max_steps = 3;
  EXPECT_THROW(train_samples(cfg, samples, dir.path()), NonFiniteLoss);
  EXPECT_EQ(log_lines(dir.path() / "train_log.tsv").back(), "# non-finite loss at step\t1");
}

TEST(Config, ParseRoundTripAndErrors) {
  auto cfg = tiny_config();
  cfg.seed = 123456789012345ULL;
  const auto back = TrainConfig::parse(cfg.to_text());
  EXPECT_EQ(back.to_text(), cfg.to_text());
  EXPECT_THROW(TrainConfig::parse("learning_rate=0.1\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("patch=60\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("lr0=0\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("batch=two\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("just words\n"), ConfigError);
  EXPECT_EQ(TrainConfig::parse("# comment\n  seed = 4 \n").seed, 4u);
}

TEST(Config, ShippedProfilesMatchTheirFiles) {
  const fs::path configs = fs::path(LFE_TEST_DATA_DIR) / ".." / ".." / "configs";
  EXPECT_EQ(TrainConfig::load(configs / "desk.cfg").to_text(), desk_profile().to_text());
  EXPECT_EQ(TrainConfig::load(configs / "paper.cfg").to_text(), paper_profile().to_text());
  const auto paper = paper_profile();
  EXPECT_EQ(paper.lr0, 2e-4);
  EXPECT_EQ(paper.lr_halve_every, 250);
  EXPECT_EQ(paper.epochs, 1000);
  EXPECT_EQ(paper.batch, 20);
  EXPECT_EQ(paper.patch, 128);
  EXPECT_EQ(paper.eval_crop, 400);
}

TEST(Config, EachAblationFlipsExactlyItsToggles) {
  const TrainConfig base;
  auto flags = [](const net::NetworkConfig& n) {
    return std::vector<bool>{n.use_iem,        n.use_cvmi,       n.use_csfi, n.use_spa,
                             n.use_fre,        n.use_csm_stage1, n.use_csm_stage2};
  };
  const std::vector<std::pair<AblationId, std::vector<int>>> off{
      {AblationId::full, {}},         {AblationId::no_iem, {0}},  {AblationId::no_cvmi, {1}},
      {AblationId::no_csfi, {2}},     {AblationId::no_cvmi_csfi, {1, 2}},
      {AblationId::no_spa, {3}},      {AblationId::no_fre, {4}},  {AblationId::no_csm1, {5}},
      {AblationId::no_csm2, {6}}};
  for (const auto& [id, idx] : off) {
    const auto f = flags(apply_ablation(base, id).network);
    for (int i = 0; i < 7; ++i) {
      const bool expect_off = std::find(idx.begin(), idx.end(), i) != idx.end();
      EXPECT_EQ(f[i], !expect_off) << ablation_name(id) << " flag " << i;
    }
    EXPECT_EQ(parse_ablation(ablation_name(id)), id);
  }
  EXPECT_THROW(parse_ablation("no_everything"), ConfigError);
}

TEST(Checkpoint, ReloadedModelGivesBitwiseIdenticalOutput) {
  TempDir dir;
  auto cfg = tiny_config();
  const auto params = net::init_parameters<float>(cfg.network, 3);
  const auto s = center_crop(fixture("coffee", 5), 24);
  const auto before = enhance_pair(params, cfg.network, s.low_left, s.low_right);
  net::save_checkpoint(dir.path() / "m.ckpt", cfg.network, params);
  const auto model = net::load_checkpoint(dir.path() / "m.ckpt");
  const auto after = enhance_pair(model.params, model.config, s.low_left, s.low_right);
  EXPECT_EQ(as_double(before.first), as_double(after.first));
  EXPECT_EQ(as_double(before.second), as_double(after.second));
}

TEST(Enhance, UntrainedModelWritesValidImagesOfInputSize) {
  TempDir dir;
  auto cfg = tiny_config();
  net::save_checkpoint(dir.path() / "m.ckpt", cfg.network, net::init_parameters<float>(cfg.network, 1));
  const auto s = fixture("astronaut", 6);
  // 13x21 has no factor of 8 in either extent.
  auto odd = [](const Tensor<float>& t) {
    NoGradGuard guard;
    return ops::reshape(ops::crop(batch_of_one(t), 0, 0, 13, 21), {3, 13, 21});
  };
  degrade::write_png(dir.path() / "in/l.png", odd(s.low_left));
  degrade::write_png(dir.path() / "in/r.png", odd(s.low_right));
  enhance_files(dir.path() / "m.ckpt", dir.path() / "in/l.png", dir.path() / "in/r.png", dir.path() / "out/l.png",
                dir.path() / "out/r.png");
  const auto out = degrade::read_png(dir.path() / "out/l.png");
  EXPECT_EQ(out.shape(), (Shape{3, 13, 21}));
  for (float v : out.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Enhance, SwappingInputsSwapsOutputs) {
  TempDir dir;
  auto cfg = tiny_config();
  net::save_checkpoint(dir.path() / "m.ckpt", cfg.network, net::init_parameters<float>(cfg.network, 2));
  const auto s = center_crop(fixture("chelsea", 7), 32);
  degrade::write_png(dir.path() / "a.png", s.low_left);
  degrade::write_png(dir.path() / "b.png", s.low_right);
  enhance_files(dir.path() / "m.ckpt", dir.path() / "a.png", dir.path() / "b.png", dir.path() / "ab_l.png",
                dir.path() / "ab_r.png");
  enhance_files(dir.path() / "m.ckpt", dir.path() / "b.png", dir.path() / "a.png", dir.path() / "ba_l.png",
                dir.path() / "ba_r.png");
  EXPECT_EQ(slurp(dir.path() / "ab_l.png"), slurp(dir.path() / "ba_r.png"));
  EXPECT_EQ(slurp(dir.path() / "ab_r.png"), slurp(dir.path() / "ba_l.png"));
}

TEST(Enhance, CorruptCheckpointIsReported) {
  TempDir dir;
  std::ofstream(dir.path() / "bad.ckpt") << "LFECKPT1 garbage";
  degrade::write_png(dir.path() / "a.png", Tensor<float>(Shape{3, 8, 8}, 0.5f));
  EXPECT_THROW(enhance_files(dir.path() / "bad.ckpt", dir.path() / "a.png", dir.path() / "a.png",
                             dir.path() / "l.png", dir.path() / "r.png"),
               CheckpointError);
}

TEST(Eval, TableAndErrorMaps) {
  TempDir dir;
  const auto s = center_crop(fixture("rocket", 8), 32);
  for (const char* side : {"left", "right"}) {
    const bool left = side[0] == 'l';
    degrade::write_png(dir.path() / "gt" / side / "a.png", left ? s.gt_left : s.gt_right);
    degrade::write_png(dir.path() / "gt" / side / "b.png", left ? s.gt_left : s.gt_right);
    degrade::write_png(dir.path() / "pred" / side / "a.png", left ? s.gt_left : s.gt_right);
    degrade::write_png(dir.path() / "pred" / side / "b.png", left ? s.low_left : s.low_right);
  }
  const auto summary = evaluate_dirs(dir.path() / "pred", dir.path() / "gt", dir.path() / "maps");
  ASSERT_EQ(summary.per_sample.size(), 2u);
  EXPECT_EQ(summary.per_sample[0].psnr_left, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(summary.per_sample[0].ssim_right, 1.0, 1e-9);
  EXPECT_LT(summary.per_sample[1].psnr_left, 30.0);
  EXPECT_TRUE(fs::exists(dir.path() / "maps/right/b.png"));
  const auto map = degrade::read_png(dir.path() / "maps/left/a.png");
  for (float v : map.data()) EXPECT_EQ(v, 0.0f);

  const auto table = format_eval_table(summary);
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "id\tpsnr_left\tpsnr_right\tssim_left\tssim_right");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_THROW(evaluate_dirs(dir.path() / "nowhere", dir.path() / "gt"), IoError);
}

TEST(Ablate, TableHasNineRowsAndFourMetricColumns) {
  TempDir dir;
  auto cfg = tiny_config();
  cfg.max_steps = 1;
  const auto samples = micro_samples(16);
  const auto rows = ablate_samples(cfg, samples, samples, dir.path());
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].id, kAllAblations[i]);
    EXPECT_EQ(rows[i].steps, 1);
    EXPECT_EQ(rows[i].parameters, net::count_parameters(apply_ablation(cfg, rows[i].id).network));
    EXPECT_TRUE(fs::exists(dir.path() / ablation_name(rows[i].id) / "model.ckpt"));
  }
  EXPECT_EQ(rows[5].parameters, rows[0].parameters);  // no_spa only changes the loss
  EXPECT_LT(rows[4].parameters, rows[2].parameters);

  std::istringstream table(format_ablation_table(rows));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "ablation\tpsnr_left\tpsnr_right\tssim_left\tssim_right\tparameters");
  int n = 0;
  while (std::getline(table, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 5) << line;
    ++n;
  }
  EXPECT_EQ(n, 9);
}

}  // namespace
}  // namespace lfe::harness
