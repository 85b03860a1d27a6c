#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfe/net/config.hpp"
#include "lfe/net/parameters.hpp"

namespace lfe::net {

/// Binary record container (all integers little-endian):
///   8 bytes   magic
///   u32       format version (1)
///   u32 n     header length, then n bytes of UTF-8 header text
///   u32 r     record count, then r records of
///               u32 name length, name bytes,
///               u32 rank, rank x u32 extents,
///               prod(extents) x float32 values
struct Record {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct RecordFile {
  std::string header;
  std::vector<Record> records;
};

inline constexpr char kCheckpointMagic[9] = "LFECKPT1";
inline constexpr char kTrainerStateMagic[9] = "LFESTAT1";

/// Writes to a sibling temporary file and renames it into place.
void write_records(const std::filesystem::path& path, const char (&magic)[9], const RecordFile& file);
/// Throws CheckpointError naming the first malformed record.
RecordFile read_records(const std::filesystem::path& path, const char (&magic)[9]);

/// Model checkpoint: header is NetworkConfig::to_text(), one record per
/// parameter in name order.
void save_checkpoint(const std::filesystem::path& path, const NetworkConfig& cfg, const ParameterStore<float>& params);

struct LoadedModel {
  NetworkConfig config;
  ParameterStore<float> params;
};
LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace lfe::net
