#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cgswap {

struct NamedTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t numel() const;
};

/// name -> tensor, the on-disk unit for every weight and checkpoint file.
struct TensorDict {
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
  /// Throws ConfigError naming the file when the tensor is absent or has
  /// the wrong shape.
  const NamedTensor& require(const std::string& name, const std::vector<std::int64_t>& shape) const;

  std::string source;  // file the dict was read from, for diagnostics
};

/// Safetensors layout: u64 little-endian header length, JSON header, raw
/// little-endian data. F32, F64 and F16 are accepted on read; writes are F32.
TensorDict read_tensor_dict(const std::filesystem::path& path);
void write_tensor_dict(const std::filesystem::path& path, const TensorDict& dict);

}  // namespace cgswap
