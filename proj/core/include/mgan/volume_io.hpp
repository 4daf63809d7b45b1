#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "mgan/volume.hpp"

namespace mgan {

// Parsed container header, independent of the on-disk format.
struct VolumeHeader {
  std::array<int, 3> dims{};               // [D,H,W]
  std::string dtype;                        // "float32" | "int16" | "uint8"
  std::array<float, 3> spacing{1, 1, 1};    // mm per voxel, [D,H,W]
  std::array<float, 16> affine{};           // 4x4 row-major

  std::size_t dtype_size() const;
  // dims product x dtype size must equal payload byte length
  void check_payload(std::size_t payload_bytes) const;
};

// Reads a NIfTI-1 single-file (.nii) or raw MGV1 volume; format is detected
// from the magic bytes. Payload is converted to float32.
Volume read_volume(const std::filesystem::path& path);

// Writes float32 volumes. Extension selects the container: ".nii" writes
// NIfTI-1, anything else writes the 16-byte-header MGV1 raw format.
// read_volume(write_volume(v)) is bit-exact on (data, dims); spacing survives
// only in NIfTI (MGV1's fixed header has no spacing field).
void write_volume(const Volume& v, const std::filesystem::path& path);

}  // namespace mgan
