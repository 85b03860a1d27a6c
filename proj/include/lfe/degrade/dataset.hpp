#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lfe/degrade/degrade.hpp"

namespace lfe::degrade {

namespace fs = std::filesystem;

/// Reads an 8-bit PNG (gray, RGB or with alpha) as Tensor[3,H,W] in [0,1].
Tensor<float> read_png(const fs::path& path);
/// Writes Tensor[3,H,W] as 8-bit RGB, rounding to the nearest level.
void write_png(const fs::path& path, const Tensor<float>& image);

enum class Split { train, val, test };
const char* split_name(Split split);
Split parse_split(const std::string& name);

struct SplitSpec {
  double train = 0.8;
  double val = 0.05;
  double test = 0.15;

  void validate() const;
  /// "0.8,0.05,0.15"
  static SplitSpec parse(const std::string& text);
};

struct ManifestEntry {
  std::string id;
  Split split = Split::train;
  std::optional<DegradeParams> params;
};

/// Flat text manifest. Layout of a dataset root:
///   <root>/low/{left,right}/<id>.png
///   <root>/gt/{left,right}/<id>.png
///   <root>/manifest.txt
/// Manifest lines are tab-separated: id split alpha beta gamma sigma_s sigma_c,
/// with "-" in the five parameter fields for real captures. Lines starting
/// with '#' carry metadata: the seed, skipped (unpaired) names and their count.
struct Manifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> skipped;

  std::string to_text() const;
  static Manifest parse(const std::string& text);
  void save(const fs::path& path) const;
  static Manifest load(const fs::path& path);
};

/// Reads `<gt_dir>/{left,right}/*.png`, degrades each pair with parameters
/// drawn from derive_seed(seed, index) and writes the dataset layout under
/// out_dir. Names present on only one side are skipped and listed.
Manifest build_dataset(const fs::path& gt_dir, const fs::path& out_dir, std::uint64_t seed,
                       const SplitSpec& splits);

/// Loads every sample of `split` from a dataset root, in manifest order.
std::vector<StereoSample> load_split(const fs::path& root, Split split);

}  // namespace lfe::degrade
