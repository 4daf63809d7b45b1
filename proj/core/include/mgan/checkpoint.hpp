#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mgan/tensor.hpp"

namespace mgan {

// Flat named-tensor archive: binary container "MGCK" v1, little-endian,
// float32 payloads stored verbatim so round-trips are bitwise.
struct Archive {
  std::vector<std::pair<std::string, Tensor>> entries;

  void add(const std::string& name, Tensor t);
  const Tensor* find(const std::string& name) const;
  const Tensor& get(const std::string& name) const;  // throws CheckpointMismatch
};

void save_archive(const Archive& a, const std::filesystem::path& path);
Archive load_archive(const std::filesystem::path& path);

}  // namespace mgan
