#include "lagma/harness/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lagma/common/error.hpp"

namespace lagma::harness {

namespace {

constexpr const char* kMagic = "lagma-checkpoint";

bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') return false;
  }
  return true;
}

std::size_t parse_size(const std::string& text, const std::string& what, const std::string& origin) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || text[0] == '-') {
    throw CheckpointError(origin + ": bad " + what + " '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  if (!valid_token(key)) throw CheckpointError("checkpoint: bad metadata key '" + key + "'");
  if (value.find('\n') != std::string::npos) {
    throw CheckpointError("checkpoint: metadata value of '" + key + "' spans lines");
  }
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw CheckpointError("checkpoint: missing metadata '" + key + "'");
}

void Checkpoint::add_array(std::string name, std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (!valid_token(name)) throw CheckpointError("checkpoint: bad array name '" + name + "'");
  if (data.size() != rows * cols) {
    throw CheckpointError("checkpoint: array '" + name + "' holds " + std::to_string(data.size()) +
                          " values, shape says " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (has_array(name)) throw CheckpointError("checkpoint: duplicate array '" + name + "'");
  arrays.push_back({std::move(name), rows, cols, std::move(data)});
}

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw CheckpointError("checkpoint: missing array '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream head;
  head << kMagic << ' ' << ckpt.version << '\n';
  for (const auto& [k, v] : ckpt.meta) head << "meta " << k << ' ' << v << '\n';
  std::string config = ckpt.config_text;
  if (!config.empty() && config.back() != '\n') config.push_back('\n');
  std::size_t lines = 0;
  for (char c : config) lines += c == '\n' ? 1 : 0;
  head << "config " << lines << '\n' << config;
  for (const auto& a : ckpt.arrays) head << "array " << a.name << ' ' << a.rows << ' ' << a.cols << '\n';
  head << "end\n";

  std::string out = head.str();
  std::size_t total = 0;
  for (const auto& a : ckpt.arrays) total += a.data.size();
  const std::size_t offset = out.size();
  out.resize(offset + total * 8);
  char* p = out.data() + offset;
  for (const auto& a : ckpt.arrays) {
    for (double v : a.data) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) *p++ = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin) {
  std::size_t pos = 0;
  auto next_line = [&](const char* what) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointError(origin + ": truncated header (expected " + what + ")");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  Checkpoint ckpt;
  {
    std::istringstream first(next_line("format line"));
    std::string magic;
    std::string version;
    first >> magic >> version;
    if (magic != kMagic) throw CheckpointError(origin + ": not a lagma checkpoint");
    ckpt.version = static_cast<int>(parse_size(version, "version", origin));
    if (ckpt.version != kCheckpointVersion) {
      throw CheckpointError(origin + ": checkpoint format version " + std::to_string(ckpt.version) +
                            " is not supported by this build, which reads version " +
                            std::to_string(kCheckpointVersion));
    }
  }

  std::size_t payload = 0;
  bool seen_config = false;
  for (;;) {
    const std::string line = next_line("'end'");
    if (line == "end") break;
    const std::size_t sp = line.find(' ');
    const std::string kind = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (kind == "meta") {
      const std::size_t sp2 = rest.find(' ');
      if (sp2 == std::string::npos) throw CheckpointError(origin + ": bad metadata line '" + line + "'");
      ckpt.set_meta(rest.substr(0, sp2), rest.substr(sp2 + 1));
    } else if (kind == "config") {
      if (seen_config) throw CheckpointError(origin + ": config block given twice");
      seen_config = true;
      const std::size_t n = parse_size(rest, "config line count", origin);
      for (std::size_t i = 0; i < n; ++i) ckpt.config_text += next_line("config text") + "\n";
    } else if (kind == "array") {
      std::istringstream in(rest);
      std::string name;
      std::string rows;
      std::string cols;
      std::string extra;
      in >> name >> rows >> cols;
      if (name.empty() || cols.empty() || (in >> extra)) {
        throw CheckpointError(origin + ": bad array line '" + line + "'");
      }
      NamedArray a{name, parse_size(rows, "row count", origin), parse_size(cols, "column count", origin), {}};
      if (ckpt.has_array(name)) throw CheckpointError(origin + ": duplicate array '" + name + "'");
      payload += a.rows * a.cols;
      ckpt.arrays.push_back(std::move(a));
    } else {
      throw CheckpointError(origin + ": unknown header line '" + line + "'");
    }
  }

  const std::size_t expected = pos + payload * 8;
  if (bytes.size() != expected) {
    throw CheckpointError(origin + ": payload is " + std::to_string(bytes.size() - pos) + " bytes, header describes " +
                          std::to_string(payload * 8));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (auto& a : ckpt.arrays) {
    a.data.resize(a.rows * a.cols);
    for (double& v : a.data) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(*p++) << (8 * b);
      v = std::bit_cast<double>(bits);
    }
  }
  return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place at '" + path + "': " + ec.message());
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), path);
}

}  // namespace lagma::harness
