#include "lfe/net/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lfe::net {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void text(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}
  bool u32(std::uint32_t& v) { return bytes(&v, 4); }
  bool text(std::string& s) {
    std::uint32_t n = 0;
    if (!u32(n) || n > remaining()) return false;
    s.assign(data_.data() + pos_, n);
    pos_ += n;
    return true;
  }
  bool bytes(void* p, std::size_t n) {
    if (n > remaining()) return false;
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
    return true;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_records(const std::filesystem::path& path, const char (&magic)[9], const RecordFile& file) {
  Writer w;
  w.bytes(magic, 8);
  w.u32(1);
  w.text(file.header);
  w.u32(static_cast<std::uint32_t>(file.records.size()));
  for (const auto& r : file.records) {
    if (static_cast<std::int64_t>(r.values.size()) != shape_numel(r.shape)) {
      throw ContractViolation("record " + r.name + ": value count does not match shape " + shape_str(r.shape));
    }
    w.text(r.name);
    w.u32(static_cast<std::uint32_t>(r.shape.size()));
    for (auto e : r.shape) w.u32(static_cast<std::uint32_t>(e));
    w.bytes(r.values.data(), r.values.size() * sizeof(float));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RecordFile read_records(const std::filesystem::path& path, const char (&magic)[9]) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  char got[8];
  if (!r.bytes(got, 8) || std::memcmp(got, magic, 8) != 0) {
    throw CheckpointError(path.string() + ": bad magic, expected " + std::string(magic));
  }
  std::uint32_t version = 0, count = 0;
  if (!r.u32(version) || version != 1) throw CheckpointError(path.string() + ": unsupported format version");
  RecordFile file;
  if (!r.text(file.header)) throw CheckpointError(path.string() + ": truncated header");
  if (!r.u32(count)) throw CheckpointError(path.string() + ": truncated record count");
  for (std::uint32_t i = 0; i < count; ++i) {
    Record rec;
    auto fail = [&](const std::string& what) {
      return CheckpointError(path.string() + ": record " + std::to_string(i) +
                             (rec.name.empty() ? "" : " (" + rec.name + ")") + ": " + what);
    };
    std::uint32_t rank = 0;
    if (!r.text(rec.name)) throw fail("truncated name");
    if (!r.u32(rank) || rank > 8) throw fail("bad rank");
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      std::uint32_t e = 0;
      if (!r.u32(e)) throw fail("truncated shape");
      rec.shape.push_back(e);
      total *= e;
    }
    if (total * sizeof(float) > r.remaining()) throw fail("truncated values");
    rec.values.resize(total);
    r.bytes(rec.values.data(), total * sizeof(float));
    file.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) throw CheckpointError(path.string() + ": trailing bytes after last record");
  return file;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkConfig& cfg, const ParameterStore<float>& params) {
  RecordFile file;
  file.header = cfg.to_text();
  for (const auto& [name, t] : params.entries()) {
    file.records.push_back({name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())});
  }
  write_records(path, kCheckpointMagic, file);
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  auto file = read_records(path, kCheckpointMagic);
  LoadedModel model;
  try {
    model.config = NetworkConfig::from_text(file.header);
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": bad configuration header: " + e.what());
  }
  for (auto& rec : file.records) {
    if (model.params.contains(rec.name)) throw CheckpointError(path.string() + ": duplicate record " + rec.name);
    model.params.add(rec.name, Tensor<float>(rec.shape, std::move(rec.values)));
  }
  check_against_config(model.params, model.config);
  return model;
}

}  // namespace lfe::net
