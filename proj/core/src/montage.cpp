#include "mgan/montage.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace mgan::montage {

namespace {
void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> buf;
  put_be32(buf, static_cast<std::uint32_t>(data.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), data.begin(), data.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, buf.data() + 4, static_cast<uInt>(buf.size() - 4)));
  put_be32(buf, crc);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}
}  // namespace

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
  if (width < 1 || height < 1 || pixels.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
    throw ShapeMismatch("pixel buffer does not match dimensions");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(width));
  put_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // no interlace
  write_chunk(out, "IHDR", ihdr);

  // raw scanlines, each prefixed with filter byte 0
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y) * width,
               pixels.begin() + static_cast<std::ptrdiff_t>(y + 1) * width);
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoFailure("zlib compression failed for " + path.string());
  comp.resize(comp_size);
  write_chunk(out, "IDAT", comp);
  write_chunk(out, "IEND", {});
  if (!out) throw IoFailure("short write to " + path.string());
}

std::vector<std::uint8_t> mid_axial_slice_u8(const Volume& v, int* width, int* height) {
  const int D = v.dim(0), H = v.dim(1), W = v.dim(2);
  const int z = D / 2;
  float lo = v.data[(static_cast<std::int64_t>(z) * H) * W], hi = lo;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const float val = v.data[(static_cast<std::int64_t>(z) * H + y) * W + x];
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
  const float scale = hi > lo ? 255.0f / (hi - lo) : 0.0f;
  std::vector<std::uint8_t> px(static_cast<size_t>(H) * static_cast<size_t>(W));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const float val = v.data[(static_cast<std::int64_t>(z) * H + y) * W + x];
      px[static_cast<size_t>(y) * static_cast<size_t>(W) + static_cast<size_t>(x)] =
          static_cast<std::uint8_t>(scale * (val - lo) + 0.5f);
    }
  if (width) *width = W;
  if (height) *height = H;
  return px;
}

void write_slice_png(const Volume& v, const std::filesystem::path& path) {
  int w = 0, h = 0;
  auto px = mid_axial_slice_u8(v, &w, &h);
  write_png_gray(path, w, h, px);
}

}  // namespace mgan::montage
