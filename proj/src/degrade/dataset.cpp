#include "lfe/degrade/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace lfe::degrade {

Tensor<float> read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const std::int64_t h = image.height, w = image.width;
  std::vector<float> data(3 * h * w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t c = 0; c < 3; ++c) data[(c * h + y) * w + x] = buffer[(y * w + x) * 3 + c] / 255.0f;
  return Tensor<float>(Shape{3, h, w}, std::move(data));
}

void write_png(const fs::path& path, const Tensor<float>& tensor) {
  if (tensor.rank() != 3 || tensor.dim(0) != 3) {
    throw ContractViolation("write_png expects [3,H,W], got " + shape_str(tensor.shape()));
  }
  const std::int64_t h = tensor.dim(1), w = tensor.dim(2);
  std::vector<png_byte> buffer(3 * h * w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t c = 0; c < 3; ++c) {
        const float v = std::clamp(tensor[(c * h + y) * w + x], 0.0f, 1.0f);
        buffer[(y * w + x) * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + name + "'");
}

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0) throw ConfigError("split fractions must be non-negative");
  if (std::abs(train + val + test - 1.0) > 1e-6) throw ConfigError("split fractions must sum to 1");
}

SplitSpec SplitSpec::parse(const std::string& text) {
  std::stringstream in(text);
  std::vector<double> parts;
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad split fraction '" + item + "'");
    }
  }
  if (parts.size() != 3) throw ConfigError("splits need three fractions train,val,test");
  SplitSpec spec{parts[0], parts[1], parts[2]};
  spec.validate();
  return spec;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

double parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError("manifest: bad number '" + text + "'");
}

std::set<std::string> png_stems(const fs::path& dir) {
  std::set<std::string> stems;
  if (!fs::is_directory(dir)) throw IoError("missing directory " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") stems.insert(entry.path().stem().string());
  }
  return stems;
}

}  // namespace

std::string Manifest::to_text() const {
  std::ostringstream out;
  out << "# lfenet manifest v1\n";
  out << "# seed\t" << seed << "\n";
  for (const auto& name : skipped) out << "# skipped\t" << name << "\n";
  out << "# skipped_count\t" << skipped.size() << "\n";
  out << "# id\tsplit\talpha\tbeta\tgamma\tsigma_s\tsigma_c\n";
  for (const auto& e : entries) {
    out << e.id << '\t' << split_name(e.split);
    if (e.params) {
      for (double v : {e.params->alpha, e.params->beta, e.params->gamma, e.params->sigma_s, e.params->sigma_c})
        out << '\t' << format_double(v);
    } else {
      out << "\t-\t-\t-\t-\t-";
    }
    out << '\n';
  }
  return out.str();
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (line[0] == '#') {
      if (fields.size() == 2 && fields[0] == "# seed") m.seed = std::stoull(fields[1]);
      if (fields.size() == 2 && fields[0] == "# skipped") m.skipped.push_back(fields[1]);
      continue;
    }
    if (fields.size() != 7) throw IoError("manifest: expected 7 fields in line '" + line + "'");
    ManifestEntry e;
    e.id = fields[0];
    try {
      e.split = parse_split(fields[1]);
    } catch (const ConfigError& err) {
      throw IoError(std::string("manifest: ") + err.what());
    }
    if (fields[2] != "-") {
      DegradeParams p;
      p.alpha = parse_double(fields[2]);
      p.beta = parse_double(fields[3]);
      p.gamma = parse_double(fields[4]);
      p.sigma_s = parse_double(fields[5]);
      p.sigma_c = parse_double(fields[6]);
      e.params = p;
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void Manifest::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << to_text();
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Manifest build_dataset(const fs::path& gt_dir, const fs::path& out_dir, std::uint64_t seed,
                       const SplitSpec& splits) {
  splits.validate();
  const auto left = png_stems(gt_dir / "left");
  const auto right = png_stems(gt_dir / "right");

  Manifest manifest;
  manifest.seed = seed;
  std::vector<std::string> ids;
  for (const auto& id : left) {
    if (right.count(id)) ids.push_back(id);
    else manifest.skipped.push_back("left/" + id + ".png");
  }
  for (const auto& id : right)
    if (!left.count(id)) manifest.skipped.push_back("right/" + id + ".png");

  // Seeded shuffle, then contiguous blocks with cumulative rounding.
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(seed);
  std::shuffle(order.begin(), order.end(), split_rng);
  const double n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::llround(splits.train * n));
  const auto n_train_val = static_cast<std::size_t>(std::llround((splits.train + splits.val) * n));
  std::vector<Split> membership(ids.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    membership[order[rank]] = rank < n_train ? Split::train : rank < n_train_val ? Split::val : Split::test;
  }

  for (std::size_t i = 0; i < ids.size(); ++i) {
    Rng param_rng(derive_seed(seed, i));
    DegradeParams params = sample_params(param_rng);
    Rng noise_rng(params.seed);
    auto gt_left = read_png(gt_dir / "left" / (ids[i] + ".png"));
    auto gt_right = read_png(gt_dir / "right" / (ids[i] + ".png"));
    if (gt_left.shape() != gt_right.shape()) {
      manifest.skipped.push_back(ids[i] + " (view sizes differ)");
      continue;
    }
    auto sample = degrade_pair(ids[i], gt_left, gt_right, params, noise_rng);
    write_png(out_dir / "low" / "left" / (ids[i] + ".png"), sample.low_left);
    write_png(out_dir / "low" / "right" / (ids[i] + ".png"), sample.low_right);
    write_png(out_dir / "gt" / "left" / (ids[i] + ".png"), sample.gt_left);
    write_png(out_dir / "gt" / "right" / (ids[i] + ".png"), sample.gt_right);
    manifest.entries.push_back({ids[i], membership[i], params});
  }
  fs::create_directories(out_dir);
  manifest.save(out_dir / "manifest.txt");
  return manifest;
}

std::vector<StereoSample> load_split(const fs::path& root, Split split) {
  const auto manifest = Manifest::load(root / "manifest.txt");
  std::vector<StereoSample> samples;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    StereoSample s;
    s.id = e.id;
    s.low_left = read_png(root / "low" / "left" / (e.id + ".png"));
    s.low_right = read_png(root / "low" / "right" / (e.id + ".png"));
    s.gt_left = read_png(root / "gt" / "left" / (e.id + ".png"));
    s.gt_right = read_png(root / "gt" / "right" / (e.id + ".png"));
    for (const auto* view : {&s.low_right, &s.gt_left, &s.gt_right}) {
      if (view->shape() != s.low_left.shape()) throw IoError("sample " + e.id + ": views differ in size");
    }
    s.params = e.params;
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace lfe::degrade
