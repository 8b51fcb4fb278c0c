#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace lagma::harness {

/// Format version written into every checkpoint header.
inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

/// A text manifest (version, metadata, config, array table) followed by the
/// arrays as flat little-endian f64 in table order.
///
///   lagma-checkpoint 1
///   meta env_steps 12000
///   config 3
///   <3 lines of config text>
///   array theta.agent.head.w 64 6
///   end
///   <binary payload>
struct Checkpoint {
  int version = kCheckpointVersion;
  std::vector<std::pair<std::string, std::string>> meta;
  std::string config_text;
  std::vector<NamedArray> arrays;

  void set_meta(const std::string& key, const std::string& value);
  const std::string& meta_value(const std::string& key) const;
  void add_array(std::string name, std::size_t rows, std::size_t cols, std::vector<double> data);
  const NamedArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");

/// Writes through a temporary file and a rename, so an interrupted save
/// leaves any previous checkpoint intact.
void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace lagma::harness
