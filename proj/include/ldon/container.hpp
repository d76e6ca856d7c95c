#pragma once

// Binary tensor container.
//
//   "LDON" | u16 version=1 | u16 flags=0 | u32 entry count
//   entry: u16 name length | name | u8 dtype | u8 rank | u64 extent * rank | payload
//   u32 CRC32 of every byte after the magic
//
// dtype 0 is little-endian f64; dtype 1 is raw bytes and is used only for the
// `__manifest` entry (key = value text). All integers are little-endian.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldon/tensor.hpp"

namespace ldon {

inline constexpr std::size_t kMaxTensorName = 64;
inline constexpr const char* kManifestName = "__manifest";

struct TensorContainer {
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::string manifest;

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  void add(std::string name, Tensor value) { tensors.emplace_back(std::move(name), std::move(value)); }
};

std::vector<std::uint8_t> encode_container(const TensorContainer& c);
/// Throws ArtifactError naming the byte offset of the first problem.
TensorContainer decode_container(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling, then renames over `path`.
void write_tensor_container(const std::filesystem::path& path, const TensorContainer& c);
TensorContainer read_tensor_container(const std::filesystem::path& path);

/// `key = value` lines, in key order.
std::string format_manifest(const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> parse_manifest(const std::string& text);

}  // namespace ldon
