#include "egomo/container.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "egomo/errors.hpp"

namespace egomo::container {

namespace fs = std::filesystem;
using nlohmann::json;

bool Container::has_blob(const std::string& name) const {
  for (const Blob& b : blobs)
    if (b.name == name) return true;
  return false;
}

const Blob& Container::blob(const std::string& name) const {
  for (const Blob& b : blobs)
    if (b.name == name) return b;
  throw Error(ErrorKind::shape, "container: missing blob '" + name + "'");
}

void Container::add_blob(const std::string& name, const Eigen::MatrixXd& data,
                         bool f64) {
  require(!has_blob(name), ErrorKind::invalid_argument,
          "container: duplicate blob '" + name + "'");
  blobs.push_back({name, data, f64});
}

Eigen::MatrixXd quantize_f4(const Eigen::MatrixXd& m) {
  return m.cast<float>().cast<double>();
}

namespace {

std::vector<char> blob_bytes(const Blob& b) {
  size_t count = static_cast<size_t>(b.data.rows()) * b.data.cols();
  std::vector<char> out(count * (b.f64 ? 8 : 4));
  size_t i = 0;
  for (Eigen::Index r = 0; r < b.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.data.cols(); ++c, ++i) {
      if (b.f64) {
        double v = b.data(r, c);
        std::memcpy(out.data() + 8 * i, &v, 8);
      } else {
        float v = static_cast<float>(b.data(r, c));
        std::memcpy(out.data() + 4 * i, &v, 4);
      }
    }
  }
  return out;
}

std::uint32_t crc_of(const std::vector<char>& bytes, size_t offset,
                     size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + offset),
              static_cast<uInt>(len));
  return static_cast<std::uint32_t>(crc);
}

const json& field(const json& j, const char* key, const char* where) {
  auto it = j.find(key);
  require(it != j.end(), ErrorKind::integrity,
          std::string("container: manifest missing '") + key + "' in " +
              where);
  return *it;
}

}  // namespace

void save_container(const std::string& path, const Container& c) {
  require(!c.kind.empty(), ErrorKind::invalid_argument,
          "save_container: empty kind");
  std::error_code ec;
  fs::create_directories(path, ec);
  require(!ec, ErrorKind::io, "save_container: cannot create " + path);

  std::vector<char> data;
  json table = json::array();
  for (const Blob& b : c.blobs) {
    std::vector<char> bytes = blob_bytes(b);
    json entry;
    entry["name"] = b.name;
    entry["rows"] = b.data.rows();
    entry["cols"] = b.data.cols();
    entry["dtype"] = b.f64 ? "f8" : "f4";
    entry["offset"] = data.size();
    entry["bytes"] = bytes.size();
    entry["crc32"] = crc_of(bytes, 0, bytes.size());
    table.push_back(entry);
    data.insert(data.end(), bytes.begin(), bytes.end());
  }
  json manifest;
  manifest["container_version"] = kVersion;
  manifest["kind"] = c.kind;
  manifest["meta"] = c.meta;
  manifest["blobs"] = table;

  {
    std::ofstream f(fs::path(path) / "data.bin", std::ios::binary);
    require(f.good(), ErrorKind::io, "save_container: cannot write data.bin");
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    require(f.good(), ErrorKind::io, "save_container: write failed");
  }
  {
    std::ofstream f(fs::path(path) / "manifest.json");
    require(f.good(), ErrorKind::io,
            "save_container: cannot write manifest.json");
    f << manifest.dump(2) << "\n";
    require(f.good(), ErrorKind::io, "save_container: write failed");
  }
}

Container load_container(const std::string& path) {
  fs::path dir(path);
  std::ifstream mf(dir / "manifest.json");
  require(mf.good(), ErrorKind::io,
          "load_container: cannot open " + path + "/manifest.json");
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::integrity,
                std::string("load_container: manifest unreadable: ") +
                    e.what());
  }
  require(manifest.is_object(), ErrorKind::integrity,
          "load_container: manifest is not an object");
  const json& ver = field(manifest, "container_version", "root");
  require(ver.is_number_integer(), ErrorKind::integrity,
          "load_container: bad version field");
  require(ver.get<int>() == kVersion, ErrorKind::version,
          "load_container: container version " +
              std::to_string(ver.get<int>()) + ", expected " +
              std::to_string(kVersion));

  Container c;
  c.kind = field(manifest, "kind", "root").get<std::string>();
  c.meta = field(manifest, "meta", "root");

  std::ifstream df(dir / "data.bin", std::ios::binary);
  require(df.good(), ErrorKind::io,
          "load_container: cannot open " + path + "/data.bin");
  std::vector<char> data((std::istreambuf_iterator<char>(df)),
                         std::istreambuf_iterator<char>());

  const json& table = field(manifest, "blobs", "root");
  require(table.is_array(), ErrorKind::integrity,
          "load_container: blob table is not an array");
  size_t expect_offset = 0;
  for (const json& entry : table) {
    Blob b;
    b.name = field(entry, "name", "blob").get<std::string>();
    Eigen::Index rows = field(entry, "rows", b.name.c_str()).get<Eigen::Index>();
    Eigen::Index cols = field(entry, "cols", b.name.c_str()).get<Eigen::Index>();
    std::string dtype = field(entry, "dtype", b.name.c_str()).get<std::string>();
    size_t offset = field(entry, "offset", b.name.c_str()).get<size_t>();
    size_t bytes = field(entry, "bytes", b.name.c_str()).get<size_t>();
    std::uint32_t crc = field(entry, "crc32", b.name.c_str()).get<std::uint32_t>();

    require(dtype == "f4" || dtype == "f8", ErrorKind::integrity,
            "load_container: unknown dtype for '" + b.name + "'");
    b.f64 = dtype == "f8";
    require(rows >= 0 && cols >= 0, ErrorKind::shape,
            "load_container: negative shape for '" + b.name + "'");
    size_t count = static_cast<size_t>(rows) * static_cast<size_t>(cols);
    require(bytes == count * (b.f64 ? 8 : 4), ErrorKind::shape,
            "load_container: blob '" + b.name +
                "' byte count disagrees with its shape");
    require(offset == expect_offset, ErrorKind::shape,
            "load_container: blob '" + b.name + "' offset out of order");
    require(offset + bytes <= data.size(), ErrorKind::shape,
            "load_container: blob '" + b.name + "' exceeds data.bin");
    require(crc_of(data, offset, bytes) == crc, ErrorKind::integrity,
            "load_container: checksum failure in blob '" + b.name + "'");

    b.data.resize(rows, cols);
    size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index cc = 0; cc < cols; ++cc, ++i) {
        if (b.f64) {
          double v;
          std::memcpy(&v, data.data() + offset + 8 * i, 8);
          b.data(r, cc) = v;
        } else {
          float v;
          std::memcpy(&v, data.data() + offset + 4 * i, 4);
          b.data(r, cc) = v;
        }
      }
    }
    expect_offset = offset + bytes;
    c.blobs.push_back(std::move(b));
  }
  require(expect_offset == data.size(), ErrorKind::shape,
          "load_container: data.bin larger than the blob table describes");
  return c;
}

Eigen::MatrixXd pack_positions(const std::vector<geom3d::Vec3>& p) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(p.size()), 3);
  for (size_t i = 0; i < p.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = p[i].transpose();
  return m;
}

Eigen::MatrixXd pack_rotations(const std::vector<geom3d::Mat3>& r) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), 9);
  for (size_t i = 0; i < r.size(); ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        m(static_cast<Eigen::Index>(i), 3 * a + b) = r[i](a, b);
  return m;
}

std::vector<geom3d::Vec3> unpack_positions(const Eigen::MatrixXd& m) {
  require(m.cols() == 3, ErrorKind::shape,
          "unpack_positions: blob must have 3 columns");
  std::vector<geom3d::Vec3> p(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) p[i] = m.row(i).transpose();
  return p;
}

std::vector<geom3d::Mat3> unpack_rotations(const Eigen::MatrixXd& m) {
  require(m.cols() == 9, ErrorKind::shape,
          "unpack_rotations: blob must have 9 columns");
  std::vector<geom3d::Mat3> r(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) r[i](a, b) = m(i, 3 * a + b);
  return r;
}

void save_trajectory(const std::string& path, const TrajectoryInput& input) {
  input.traj.validate();
  Container c;
  c.kind = "trajectory";
  c.meta["frame_rate"] = input.traj.frame_rate;
  c.meta["feature_seed"] = input.feature_seed;
  c.add_blob("positions", pack_positions(input.traj.positions), true);
  c.add_blob("rotations", pack_rotations(input.traj.rotations), true);
  c.add_blob("o_start", input.o_start, true);
  save_container(path, c);
}

TrajectoryInput load_trajectory(const std::string& path) {
  Container c = load_container(path);
  require(c.kind == "trajectory", ErrorKind::shape,
          "load_trajectory: container kind is '" + c.kind + "'");
  TrajectoryInput input;
  input.traj.positions = unpack_positions(c.blob("positions").data);
  input.traj.rotations = unpack_rotations(c.blob("rotations").data);
  input.traj.frame_rate = field(c.meta, "frame_rate", "meta").get<double>();
  input.feature_seed =
      field(c.meta, "feature_seed", "meta").get<std::uint64_t>();
  const Eigen::MatrixXd& os = c.blob("o_start").data;
  require(os.rows() == 3 && os.cols() == 3, ErrorKind::shape,
          "load_trajectory: o_start must be 3 x 3");
  input.o_start = os;
  require(input.traj.positions.size() == input.traj.rotations.size(),
          ErrorKind::shape,
          "load_trajectory: position and rotation counts differ");
  return input;
}

}  // namespace egomo::container
