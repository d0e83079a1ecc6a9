#include "anisr/data/nifti.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <zlib.h>

#include "anisr/core/error.hpp"

namespace anisr::data {

namespace {

struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");
static_assert(offsetof(Nifti1Header, dim) == 40);
static_assert(offsetof(Nifti1Header, pixdim) == 76);
static_assert(offsetof(Nifti1Header, qform_code) == 252);
static_assert(offsetof(Nifti1Header, magic) == 344);

enum : std::int16_t {
  dt_uint8 = 2, dt_int16 = 4, dt_int32 = 8, dt_float32 = 16, dt_float64 = 64,
  dt_int8 = 256, dt_uint16 = 512, dt_uint32 = 768,
};

struct GzFile {
  gzFile handle = nullptr;
  ~GzFile() {
    if (handle != nullptr) gzclose(handle);
  }
};

template <class T>
void swap_bytes(T& v) {
  auto* p = reinterpret_cast<unsigned char*>(&v);
  std::reverse(p, p + sizeof(T));
}

void swap_header(Nifti1Header& h) {
  swap_bytes(h.sizeof_hdr);
  for (auto& d : h.dim) swap_bytes(d);
  swap_bytes(h.datatype);
  swap_bytes(h.bitpix);
  for (auto& p : h.pixdim) swap_bytes(p);
  swap_bytes(h.vox_offset);
  swap_bytes(h.scl_slope);
  swap_bytes(h.scl_inter);
  swap_bytes(h.qform_code);
  swap_bytes(h.sform_code);
  swap_bytes(h.quatern_b);
  swap_bytes(h.quatern_c);
  swap_bytes(h.quatern_d);
  swap_bytes(h.qoffset_x);
  swap_bytes(h.qoffset_y);
  swap_bytes(h.qoffset_z);
  for (int i = 0; i < 4; ++i) {
    swap_bytes(h.srow_x[i]);
    swap_bytes(h.srow_y[i]);
    swap_bytes(h.srow_z[i]);
  }
}

template <class T>
void convert(const std::vector<unsigned char>& raw, bool swap, std::vector<double>& out) {
  const std::size_t n = raw.size() / sizeof(T);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
    if (swap) swap_bytes(v);
    out[i] = static_cast<double>(v);
  }
}

Eigen::Matrix4d affine_from_header(const Nifti1Header& h, const std::array<double, 3>& spacing) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  if (h.sform_code > 0) {
    for (int c = 0; c < 4; ++c) {
      m(0, c) = h.srow_x[c];
      m(1, c) = h.srow_y[c];
      m(2, c) = h.srow_z[c];
    }
    return m;
  }
  if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    Eigen::Matrix3d r;
    r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
        2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
        2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    m.block<3, 1>(0, 0) = r.col(0) * spacing[0];
    m.block<3, 1>(0, 1) = r.col(1) * spacing[1];
    m.block<3, 1>(0, 2) = r.col(2) * spacing[2] * qfac;
    m(0, 3) = h.qoffset_x;
    m(1, 3) = h.qoffset_y;
    m(2, 3) = h.qoffset_z;
    return m;
  }
  for (int a = 0; a < 3; ++a) m(a, a) = spacing[static_cast<std::size_t>(a)];
  return m;
}

}  // namespace

std::array<Plane, 3> orientation_from_affine(const Eigen::Matrix4d& affine) {
  // World axis w (0 = L-R, 1 = A-P, 2 = S-I) is the normal of plane `normal_plane[w]`.
  constexpr std::array<Plane, 3> normal_plane{Plane::sagittal, Plane::coronal, Plane::axial};
  Eigen::Matrix3d cosines;
  for (int a = 0; a < 3; ++a) {
    const Eigen::Vector3d col = affine.block<3, 1>(0, a);
    const double n = col.norm();
    cosines.col(a) = n > 0 ? Eigen::Vector3d(col.cwiseAbs() / n) : Eigen::Vector3d::Zero();
  }
  std::array<int, 3> perm{0, 1, 2};  // perm[a] = world axis assigned to voxel axis a
  std::array<int, 3> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int a = 0; a < 3; ++a) score += cosines(perm[static_cast<std::size_t>(a)], a);
    if (score > best_score + 1e-12) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {normal_plane[static_cast<std::size_t>(best[0])], normal_plane[static_cast<std::size_t>(best[1])],
          normal_plane[static_cast<std::size_t>(best[2])]};
}

Volume load_volume(const std::filesystem::path& path) {
  GzFile f;
  f.handle = gzopen(path.string().c_str(), "rb");
  if (f.handle == nullptr) throw DataError("cannot open volume '" + path.string() + "'");
  Nifti1Header h{};
  if (gzread(f.handle, &h, sizeof(h)) != static_cast<int>(sizeof(h))) {
    throw DataError("'" + path.string() + "' is too short for a NIfTI-1 header");
  }
  bool swap = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    swap = true;
    if (h.sizeof_hdr != 348) throw DataError("'" + path.string() + "' is not a NIfTI-1 file");
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0 && std::memcmp(h.magic, "ni1", 4) != 0) {
    throw DataError("'" + path.string() + "' has no NIfTI-1 magic");
  }
  if (std::memcmp(h.magic, "ni1", 4) == 0) throw DataError("split header/image NIfTI pairs are not supported");

  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7) throw DataError("'" + path.string() + "' has an invalid dimension count");
  for (int d = 4; d <= ndim; ++d) {
    if (h.dim[d] > 1) throw DataError("'" + path.string() + "' has a non-3D payload");
  }
  VoxelGrid::Dims dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  for (int a = 0; a < 3; ++a) {
    const bool present = a + 1 <= ndim;
    const int extent = present ? h.dim[a + 1] : 1;
    if (extent < 1) throw DataError("'" + path.string() + "' has a non-positive dimension");
    dims[static_cast<std::size_t>(a)] = static_cast<std::size_t>(extent);
    const double s = h.pixdim[a + 1];
    if (present && extent > 1 && (!(s > 0.0) || !std::isfinite(s))) {
      throw DataError("'" + path.string() + "' is missing voxel spacing along axis " + std::to_string(a));
    }
    spacing[static_cast<std::size_t>(a)] = s > 0.0 && std::isfinite(s) ? s : 1.0;
  }

  const std::size_t count = dims[0] * dims[1] * dims[2];
  std::size_t width = 0;
  switch (h.datatype) {
    case dt_uint8: case dt_int8: width = 1; break;
    case dt_int16: case dt_uint16: width = 2; break;
    case dt_int32: case dt_uint32: case dt_float32: width = 4; break;
    case dt_float64: width = 8; break;
    default: throw DataError("'" + path.string() + "' uses unsupported datatype " + std::to_string(h.datatype));
  }
  const auto offset = static_cast<z_off_t>(std::max(352.0f, h.vox_offset));
  if (gzseek(f.handle, offset, SEEK_SET) != offset) throw DataError("cannot seek to voxel data in '" + path.string() + "'");
  std::vector<unsigned char> raw(count * width);
  std::size_t got = 0;
  while (got < raw.size()) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(raw.size() - got, 1u << 30));
    const int r = gzread(f.handle, raw.data() + got, chunk);
    if (r <= 0) throw DataError("'" + path.string() + "' is truncated");
    got += static_cast<std::size_t>(r);
  }

  std::vector<double> values;
  switch (h.datatype) {
    case dt_uint8: convert<std::uint8_t>(raw, swap, values); break;
    case dt_int8: convert<std::int8_t>(raw, swap, values); break;
    case dt_int16: convert<std::int16_t>(raw, swap, values); break;
    case dt_uint16: convert<std::uint16_t>(raw, swap, values); break;
    case dt_int32: convert<std::int32_t>(raw, swap, values); break;
    case dt_uint32: convert<std::uint32_t>(raw, swap, values); break;
    case dt_float32: convert<float>(raw, swap, values); break;
    case dt_float64: convert<double>(raw, swap, values); break;
    default: break;
  }
  if (h.scl_slope != 0.0f && std::isfinite(h.scl_slope) && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
    for (double& v : values) v = v * h.scl_slope + h.scl_inter;
  }

  Volume vol;
  vol.voxels = VoxelGrid(dims);
  vol.voxels.values() = std::move(values);
  vol.spacing = spacing;
  vol.affine = affine_from_header(h, spacing);
  vol.orientation = orientation_from_affine(vol.affine);
  return vol;
}

void save_volume(const Volume& vol, const std::filesystem::path& path) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int a = 0; a < 3; ++a) {
    if (vol.voxels.dim(a) > 32767) throw DataError("volume dimension exceeds the NIfTI-1 limit");
    h.dim[a + 1] = static_cast<std::int16_t>(vol.voxels.dim(a));
    h.pixdim[a + 1] = static_cast<float>(vol.spacing[static_cast<std::size_t>(a)]);
  }
  for (int d = 4; d < 8; ++d) h.dim[d] = 1;
  h.pixdim[0] = 1.0f;
  h.datatype = dt_float32;
  h.bitpix = 32;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2;  // millimetres
  h.sform_code = 2;
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(vol.affine(0, c));
    h.srow_y[c] = static_cast<float>(vol.affine(1, c));
    h.srow_z[c] = static_cast<float>(vol.affine(2, c));
  }
  std::memcpy(h.magic, "n+1", 4);

  const std::string name = path.string();
  const bool compress = name.size() > 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
  GzFile f;
  f.handle = gzopen(name.c_str(), compress ? "wb6" : "wbT");
  if (f.handle == nullptr) throw DataError("cannot write volume '" + name + "'");
  const char extension[4] = {0, 0, 0, 0};
  std::vector<float> payload(vol.voxels.values().begin(), vol.voxels.values().end());
  bool ok = gzwrite(f.handle, &h, sizeof(h)) == static_cast<int>(sizeof(h));
  ok = ok && gzwrite(f.handle, extension, 4) == 4;
  std::size_t written = 0;
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  const std::size_t total = payload.size() * sizeof(float);
  while (ok && written < total) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(total - written, 1u << 30));
    ok = gzwrite(f.handle, bytes + written, chunk) == static_cast<int>(chunk);
    written += chunk;
  }
  if (!ok) throw DataError("failed writing volume '" + name + "'");
  const int rc = gzclose(f.handle);
  f.handle = nullptr;
  if (rc != Z_OK) throw DataError("failed closing volume '" + name + "'");
}

}  // namespace anisr::data
