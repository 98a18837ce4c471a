#include "spadcam/histogram_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace spadcam {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'H', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                       static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("cube file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw IoError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

}  // namespace

void write_cube(std::ostream& os, const HistogramCube& cube) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kVersion);
  put_u32(os, to_u32(cube.shape.rows, "rows"));
  put_u32(os, to_u32(cube.shape.cols, "cols"));
  put_u32(os, to_u32(cube.bins, "bins"));
  const auto& data = cube.counts.data();
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 4));
  } else {
    for (std::uint32_t v : data) put_u32(os, v);
  }
  if (!os) throw IoError("failed writing cube");
}

HistogramCube read_cube(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) throw IoError("not a histogram cube (bad magic)");
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) throw IoError("unsupported cube version " + std::to_string(version));
  const std::uint32_t rows = get_u32(is), cols = get_u32(is), bins = get_u32(is);
  if (rows == 0 || cols == 0 || bins == 0) throw IoError("cube header has a zero dimension");
  HistogramCube cube(GridShape(rows, cols), bins);
  auto& data = cube.counts.data();
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 4)))
      throw IoError("cube file truncated");
  } else {
    for (auto& v : data) v = get_u32(is);
  }
  return cube;
}

void write_cube(const std::filesystem::path& path, const HistogramCube& cube) {
  auto os = open_out(path, std::ios::binary);
  write_cube(os, cube);
}

HistogramCube read_cube(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  return read_cube(is);
}

void write_cube_csv(const std::filesystem::path& path, const HistogramCube& cube) {
  auto os = open_out(path);
  os << "pixel";
  for (std::size_t j = 1; j <= cube.bins; ++j) os << ",bin_" << j;
  os << '\n';
  for (std::size_t i = 0; i < cube.counts.rows(); ++i) {
    os << i + 1;
    for (std::uint32_t c : cube.counts.row(i)) os << ',' << c;
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

void write_scene(const std::filesystem::path& path, const SceneModel& scene) {
  scene.validate();
  auto os = open_out(path);
  os << "# spadcam scene v1\n";
  os << "rows " << scene.shape.rows << "\ncols " << scene.shape.cols << '\n';
  os << "pixel reflectivity depth_m\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < scene.shape.size(); ++i)
    os << i + 1 << ' ' << scene.reflectivity[i] << ' ' << scene.depth[i] << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

SceneModel read_scene(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::size_t rows = 0, cols = 0;
  SceneModel scene;
  bool header_done = false;
  std::size_t expected_pixel = 1;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!header_done) {
      std::string key;
      ls >> key;
      if (key == "rows") {
        ls >> rows;
      } else if (key == "cols") {
        ls >> cols;
      } else if (key == "pixel") {
        if (rows == 0 || cols == 0) throw IoError(path.string() + ": rows/cols missing before the pixel table");
        scene.shape = GridShape(rows, cols);
        scene.reflectivity.reserve(scene.shape.size());
        scene.depth.reserve(scene.shape.size());
        header_done = true;
      } else {
        throw IoError(path.string() + ": unexpected header key '" + key + "'");
      }
      if (!ls && !header_done) throw IoError(path.string() + ": malformed header line");
      continue;
    }
    std::size_t pixel = 0;
    double kappa = 0.0, z = 0.0;
    if (!(ls >> pixel >> kappa >> z)) throw IoError(path.string() + ": malformed pixel line '" + line + "'");
    if (pixel != expected_pixel++) throw IoError(path.string() + ": pixels must be listed in order");
    scene.reflectivity.push_back(kappa);
    scene.depth.push_back(z);
  }
  if (!header_done) throw IoError(path.string() + ": missing scene header");
  if (scene.reflectivity.size() != scene.shape.size()) throw IoError(path.string() + ": pixel count does not match rows*cols");
  scene.validate();
  return scene;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix<double>& m, const std::string& header) {
  auto os = open_out(path);
  if (!header.empty()) os << header << '\n';
  os << std::setprecision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace spadcam
