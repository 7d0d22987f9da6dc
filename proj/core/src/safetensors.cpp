#include "cgswap/safetensors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cgswap/error.hpp"

namespace cgswap {

static_assert(std::endian::native == std::endian::little, "safetensors I/O assumes little endian");

namespace {

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1f;
  std::uint32_t mant = h & 0x3ff;
  std::uint32_t bits = 0;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while ((mant & 0x400u) == 0) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3ff;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 31) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

std::int64_t NamedTensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

const NamedTensor& TensorDict::require(const std::string& name,
                                       const std::vector<std::int64_t>& shape) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw ConfigError("weight file '" + source + "' lacks tensor '" + name + "'");
  }
  if (it->second.shape != shape) {
    std::string want, got;
    for (auto d : shape) want += std::to_string(d) + ",";
    for (auto d : it->second.shape) got += std::to_string(d) + ",";
    throw ConfigError("weight file '" + source + "': tensor '" + name + "' has shape [" + got +
                      "] but [" + want + "] is required");
  }
  return it->second;
}

TensorDict read_tensor_dict(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open weight file: " + path.string());
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len == 0 || header_len > (std::uint64_t{1} << 30)) {
    throw FormatError("not a tensor-dictionary file: " + path.string());
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("truncated header in " + path.string());

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad header in " + path.string() + ": " + e.what());
  }
  std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  TensorDict dict;
  dict.source = path.string();
  for (auto& [name, entry] : meta.items()) {
    if (name == "__metadata__") {
      for (auto& [k, v] : entry.items()) dict.metadata[k] = v.get<std::string>();
      continue;
    }
    NamedTensor t;
    const std::string dtype = entry.at("dtype").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
    if (offsets.size() != 2 || offsets[1] < offsets[0] || offsets[1] > blob.size()) {
      throw FormatError("tensor '" + name + "' has invalid offsets in " + path.string());
    }
    const std::size_t n = static_cast<std::size_t>(t.numel());
    const char* src = blob.data() + offsets[0];
    const std::size_t bytes = offsets[1] - offsets[0];
    t.values.resize(n);
    if (dtype == "F32" && bytes == n * 4) {
      std::memcpy(t.values.data(), src, bytes);
    } else if (dtype == "F64" && bytes == n * 8) {
      for (std::size_t i = 0; i < n; ++i) {
        double d;
        std::memcpy(&d, src + i * 8, 8);
        t.values[i] = static_cast<float>(d);
      }
    } else if (dtype == "F16" && bytes == n * 2) {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t h;
        std::memcpy(&h, src + i * 2, 2);
        t.values[i] = half_to_float(h);
      }
    } else {
      throw FormatError("tensor '" + name + "' has unsupported dtype " + dtype + " or size in " +
                        path.string());
    }
    dict.tensors.emplace(name, std::move(t));
  }
  return dict;
}

void write_tensor_dict(const std::filesystem::path& path, const TensorDict& dict) {
  nlohmann::json meta = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : dict.tensors) {
    if (static_cast<std::size_t>(t.numel()) != t.values.size()) {
      throw ArgumentError("tensor '" + name + "' shape does not match its value count");
    }
    const std::uint64_t bytes = t.values.size() * sizeof(float);
    meta[name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  if (!dict.metadata.empty()) meta["__metadata__"] = dict.metadata;
  std::string header = meta.dump();
  while (header.size() % 8 != 0) header.push_back(' ');

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write weight file: " + path.string());
  const std::uint64_t header_len = header.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : dict.tensors) {
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed while writing weight file: " + path.string());
}

}  // namespace cgswap
