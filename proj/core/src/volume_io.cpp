#include "mgan/volume_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace mgan {

namespace {

// NIfTI-1 datatype codes
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

template <typename T>
void put(std::vector<char>& buf, std::size_t offset, T value) {
  std::memcpy(buf.data() + offset, &value, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<size_t>(size));
  in.read(buf.data(), size);
  if (!in) throw IoFailure("short read from " + path.string());
  return buf;
}

Volume read_mgv1(const std::vector<char>& buf, const std::filesystem::path& path) {
  if (buf.size() < 16) throw MalformedHeader("MGV1 header truncated in " + path.string());
  std::array<std::uint32_t, 3> dims;
  for (int i = 0; i < 3; ++i) dims[static_cast<size_t>(i)] = get<std::uint32_t>(buf, 4 + 4 * static_cast<size_t>(i));
  VolumeHeader hdr;
  for (int i = 0; i < 3; ++i) {
    if (dims[static_cast<size_t>(i)] == 0 || dims[static_cast<size_t>(i)] > (1u << 24))
      throw MalformedHeader("MGV1 dims out of range");
    hdr.dims[static_cast<size_t>(i)] = static_cast<int>(dims[static_cast<size_t>(i)]);
  }
  hdr.dtype = "float32";
  hdr.check_payload(buf.size() - 16);
  Volume v;
  v.data = Tensor({hdr.dims[0], hdr.dims[1], hdr.dims[2]});
  std::memcpy(v.data.data(), buf.data() + 16, static_cast<size_t>(v.data.numel()) * sizeof(float));
  v.validate();
  return v;
}

Volume read_nifti(const std::vector<char>& buf, const std::filesystem::path& path) {
  if (buf.size() < 352) throw MalformedHeader("NIfTI header truncated in " + path.string());
  if (get<std::int32_t>(buf, 0) != 348) throw MalformedHeader("sizeof_hdr != 348 (wrong format or byte order)");
  if (std::memcmp(buf.data() + 344, "n+1\0", 4) != 0)
    throw MalformedHeader("magic is not 'n+1' single-file NIfTI");

  std::array<std::int16_t, 8> dim;
  for (int i = 0; i < 8; ++i) dim[static_cast<size_t>(i)] = get<std::int16_t>(buf, 40 + 2 * static_cast<size_t>(i));
  if (dim[0] < 1 || dim[0] > 7) throw MalformedHeader("dim[0] out of range");
  for (int i = 4; i <= dim[0]; ++i)
    if (dim[static_cast<size_t>(i)] > 1) throw UnsupportedDtype("only 3D volumes supported");
  const int nx = dim[1], ny = dim[0] >= 2 ? dim[2] : 1, nz = dim[0] >= 3 ? dim[3] : 1;
  if (nx < 1 || ny < 1 || nz < 1) throw MalformedHeader("non-positive dims");

  const std::int16_t datatype = get<std::int16_t>(buf, 70);
  VolumeHeader hdr;
  hdr.dims = {nz, ny, nx};
  switch (datatype) {
    case kDtUint8: hdr.dtype = "uint8"; break;
    case kDtInt16: hdr.dtype = "int16"; break;
    case kDtFloat32: hdr.dtype = "float32"; break;
    default: throw UnsupportedDtype("NIfTI datatype code " + std::to_string(datatype));
  }
  hdr.spacing = {get<float>(buf, 76 + 3 * 4), get<float>(buf, 76 + 2 * 4), get<float>(buf, 76 + 1 * 4)};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      hdr.affine[static_cast<size_t>(4 * r + c)] = get<float>(buf, 280 + 16 * static_cast<size_t>(r) + 4 * static_cast<size_t>(c));
  hdr.affine[15] = 1.0f;

  const float vox_offset = get<float>(buf, 108);
  if (vox_offset < 352.0f) throw MalformedHeader("vox_offset < 352");
  const auto offset = static_cast<std::size_t>(vox_offset);
  if (buf.size() < offset) throw PayloadSizeMismatch("file shorter than vox_offset");
  hdr.check_payload(buf.size() - offset);

  float slope = get<float>(buf, 112), inter = get<float>(buf, 116);
  if (slope == 0.0f) {
    slope = 1.0f;
    inter = 0.0f;
  }

  Volume v;
  v.data = Tensor({nz, ny, nx});
  const char* p = buf.data() + offset;
  const std::int64_t n = v.data.numel();
  switch (datatype) {
    case kDtFloat32: {
      std::memcpy(v.data.data(), p, static_cast<size_t>(n) * 4);
      break;
    }
    case kDtInt16: {
      for (std::int64_t i = 0; i < n; ++i) {
        std::int16_t s;
        std::memcpy(&s, p + 2 * i, 2);
        v.data[i] = static_cast<float>(s);
      }
      break;
    }
    case kDtUint8: {
      for (std::int64_t i = 0; i < n; ++i)
        v.data[i] = static_cast<float>(static_cast<unsigned char>(p[i]));
      break;
    }
    default: throw UnsupportedDtype("unreachable");
  }
  if (slope != 1.0f || inter != 0.0f)
    for (std::int64_t i = 0; i < n; ++i) v.data[i] = v.data[i] * slope + inter;
  v.spacing = hdr.spacing;
  v.validate();
  return v;
}

void write_mgv1(const Volume& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write("MGV1", 4);
  for (int i = 0; i < 3; ++i) {
    const std::uint32_t d = static_cast<std::uint32_t>(v.data.dim(i));
    out.write(reinterpret_cast<const char*>(&d), 4);
  }
  out.write(reinterpret_cast<const char*>(v.data.data()), static_cast<std::streamsize>(v.data.numel() * 4));
  if (!out) throw IoFailure("short write to " + path.string());
}

void write_nifti(const Volume& v, const std::filesystem::path& path) {
  std::vector<char> buf(352, 0);
  put<std::int32_t>(buf, 0, 348);
  put<char>(buf, 38, 'r');  // regular
  put<std::int16_t>(buf, 40 + 0, 3);
  put<std::int16_t>(buf, 40 + 2, static_cast<std::int16_t>(v.data.dim(2)));  // nx = W
  put<std::int16_t>(buf, 40 + 4, static_cast<std::int16_t>(v.data.dim(1)));  // ny = H
  put<std::int16_t>(buf, 40 + 6, static_cast<std::int16_t>(v.data.dim(0)));  // nz = D
  for (int i = 4; i < 8; ++i) put<std::int16_t>(buf, 40 + 2 * static_cast<size_t>(i), 1);
  put<std::int16_t>(buf, 70, kDtFloat32);
  put<std::int16_t>(buf, 72, 32);  // bitpix
  put<float>(buf, 76, 1.0f);
  put<float>(buf, 76 + 4, v.spacing[2]);
  put<float>(buf, 76 + 8, v.spacing[1]);
  put<float>(buf, 76 + 12, v.spacing[0]);
  put<float>(buf, 108, 352.0f);  // vox_offset
  put<float>(buf, 112, 0.0f);    // scl_slope: none
  put<std::int16_t>(buf, 254, 1);  // sform_code: scanner
  put<float>(buf, 280, v.spacing[2]);       // srow_x
  put<float>(buf, 296 + 4, v.spacing[1]);   // srow_y
  put<float>(buf, 312 + 8, v.spacing[0]);   // srow_z
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  // bytes 348..352: extension flag, all zero

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.write(reinterpret_cast<const char*>(v.data.data()), static_cast<std::streamsize>(v.data.numel() * 4));
  if (!out) throw IoFailure("short write to " + path.string());
}

}  // namespace

std::size_t VolumeHeader::dtype_size() const {
  if (dtype == "float32") return 4;
  if (dtype == "int16") return 2;
  if (dtype == "uint8") return 1;
  throw UnsupportedDtype("dtype tag " + dtype);
}

void VolumeHeader::check_payload(std::size_t payload_bytes) const {
  std::size_t expect = dtype_size();
  for (int d : dims) expect *= static_cast<std::size_t>(d);
  if (payload_bytes != expect)
    throw PayloadSizeMismatch("payload is " + std::to_string(payload_bytes) + " bytes, header implies " +
                              std::to_string(expect));
}

Volume read_volume(const std::filesystem::path& path) {
  std::vector<char> buf = read_file(path);
  if (buf.size() >= 4 && std::memcmp(buf.data(), "MGV1", 4) == 0) return read_mgv1(buf, path);
  return read_nifti(buf, path);
}

void write_volume(const Volume& v, const std::filesystem::path& path) {
  v.validate();
  if (path.extension() == ".nii")
    write_nifti(v, path);
  else
    write_mgv1(v, path);
}

}  // namespace mgan
