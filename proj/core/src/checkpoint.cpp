#include "mgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace mgan {

void Archive::add(const std::string& name, Tensor t) {
  if (find(name)) throw Error("duplicate archive entry: " + name);
  entries.emplace_back(name, std::move(t));
}

const Tensor* Archive::find(const std::string& name) const {
  for (const auto& [n, t] : entries)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& Archive::get(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw CheckpointMismatch("archive is missing entry " + name);
  return *t;
}

void save_archive(const Archive& a, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write("MGCK", 4);
  const std::uint32_t version = 1, count = static_cast<std::uint32_t>(a.entries.size());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [name, t] : a.entries) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
    out.write(reinterpret_cast<const char*>(&name_len), 4);
    out.write(name.data(), name_len);
    const std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (int i = 0; i < t.rank(); ++i) {
      const std::uint32_t d = static_cast<std::uint32_t>(t.dim(i));
      out.write(reinterpret_cast<const char*>(&d), 4);
    }
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
  }
  if (!out) throw IoFailure("short write to " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MGCK", 4) != 0) throw CheckpointMismatch("bad archive magic");
  std::uint32_t version = 0, count = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in || version != 1) throw CheckpointMismatch("unsupported archive version");
  Archive a;
  for (std::uint32_t e = 0; e < count; ++e) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), 4);
    if (!in || name_len > 4096) throw CheckpointMismatch("corrupt entry name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    if (!in || rank > 8) throw CheckpointMismatch("corrupt entry rank");
    std::vector<int> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint32_t d = 0;
      in.read(reinterpret_cast<char*>(&d), 4);
      shape[i] = static_cast<int>(d);
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
    if (!in) throw CheckpointMismatch("archive payload truncated");
    a.entries.emplace_back(std::move(name), std::move(t));
  }
  return a;
}

}  // namespace mgan
