#include "h2nmf/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "h2nmf/error.hpp"

namespace h2nmf::io {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::size_t parse_size(std::string_view v, const std::string& key) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(ErrorCode::kParse, "bad cube header field " + key);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

const Geometry& require_geometry(const std::optional<Geometry>& g, std::size_t count) {
  if (!g) fail(ErrorCode::kNoGeometry, "no image geometry");
  if (g->pixels() != count) fail(ErrorCode::kSizeMismatch, "value count does not match image geometry");
  return *g;
}

std::size_t clamp_negatives(Matrix& m) {
  const auto count = static_cast<std::size_t>((m.array() < 0.0).count());
  if (count) m = m.cwiseMax(0.0);
  return count;
}

}  // namespace

LoadResult load_cube(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto eol1 = bytes.find('\n');
  if (eol1 == std::string::npos || std::string_view(bytes).substr(0, eol1) != kCubeMagic)
    fail(ErrorCode::kBadMagic, "not an H2NMF-CUBE/1 file: " + path.string());
  const auto eol2 = bytes.find('\n', eol1 + 1);
  if (eol2 == std::string::npos) fail(ErrorCode::kTruncatedPayload, "truncated payload: missing header line");

  std::size_t bands = 0, width = 0, height = 0;
  bool have_bands = false, have_width = false, have_height = false;
  std::istringstream header(bytes.substr(eol1 + 1, eol2 - eol1 - 1));
  for (std::string tok; header >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, "bad cube header token " + tok);
    const std::string key = tok.substr(0, eq);
    const std::string_view value = std::string_view(tok).substr(eq + 1);
    if (key == "bands") { bands = parse_size(value, key); have_bands = true; }
    else if (key == "width") { width = parse_size(value, key); have_width = true; }
    else if (key == "height") { height = parse_size(value, key); have_height = true; }
    else if (key == "dtype") { if (value != "float32") fail(ErrorCode::kParse, "unsupported dtype"); }
    else if (key == "order") { if (value != "le") fail(ErrorCode::kParse, "unsupported byte order"); }
    else if (key == "layout") { if (value != "bip") fail(ErrorCode::kParse, "unsupported layout"); }
    else fail(ErrorCode::kParse, "unknown cube header key " + key);
  }
  if (!have_bands || !have_width || !have_height) fail(ErrorCode::kParse, "incomplete cube header");
  if (bands == 0 || width == 0 || height == 0) fail(ErrorCode::kSizeMismatch, "cube dimensions must be positive");

  const std::size_t n = width * height;
  const std::size_t expected = bands * n * sizeof(float);
  const std::size_t payload = bytes.size() - (eol2 + 1);
  if (payload < expected) fail(ErrorCode::kTruncatedPayload, "truncated payload");
  if (payload > expected) fail(ErrorCode::kSizeMismatch, "payload longer than the header declares");

  LoadResult out;
  out.data.values.resize(static_cast<Eigen::Index>(bands), static_cast<Eigen::Index>(n));
  out.data.geometry = Geometry{width, height};
  const char* p = bytes.data() + eol2 + 1;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < bands; ++i, p += 4) {
      std::uint32_t raw;
      std::memcpy(&raw, p, 4);
      raw = to_little(raw);
      float f;
      std::memcpy(&f, &raw, 4);
      out.data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f;
    }
  }
  out.clamped = clamp_negatives(out.data.values);
  return out;
}

void save_cube(const std::filesystem::path& path, const Matrix& m, const Geometry& geometry) {
  if (m.rows() < 1 || geometry.pixels() < 1) fail(ErrorCode::kSizeMismatch, "cube dimensions must be positive");
  if (geometry.pixels() != static_cast<std::size_t>(m.cols()))
    fail(ErrorCode::kSizeMismatch, "width * height must equal the number of columns");
  std::string bytes;
  bytes += kCubeMagic;
  bytes += "\nbands=" + std::to_string(m.rows()) + " width=" + std::to_string(geometry.width) +
           " height=" + std::to_string(geometry.height) + " dtype=float32 order=le layout=bip\n";
  const std::size_t offset = bytes.size();
  bytes.resize(offset + static_cast<std::size_t>(m.size()) * 4);
  char* p = bytes.data() + offset;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i, p += 4) {
      const float f = static_cast<float>(m(i, j));
      std::uint32_t raw;
      std::memcpy(&raw, &f, 4);
      raw = to_little(raw);
      std::memcpy(p, &raw, 4);
    }
  }
  write_file(path, bytes);
}

LoadResult load_matrix_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        fail(ErrorCode::kParse, "non-numeric cell '" + std::string(cell) + "' on line " + std::to_string(line_no));
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::kParse, "ragged rows: line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::kParse, "empty matrix file " + path.string());

  LoadResult out;
  out.data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  out.clamped = clamp_negatives(out.data.values);
  return out;
}

LoadResult load_any(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string head(kCubeMagic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  if (in.gcount() == static_cast<std::streamsize>(head.size()) && head == kCubeMagic) return load_cube(path);
  return load_matrix_csv(path);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
  write_file(path, out.str());
}

const std::array<Rgb, 16>& palette() {
  static const std::array<Rgb, 16> colors{{
      {0, 0, 0},       {230, 25, 75},   {60, 180, 75},   {255, 225, 25},
      {0, 130, 200},   {245, 130, 48},  {145, 30, 180},  {70, 240, 240},
      {240, 50, 230},  {210, 245, 60},  {250, 190, 212}, {0, 128, 128},
      {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0},
  }};
  return colors;
}

std::string encode_ppm(std::span<const int> labels, const Geometry& geometry) {
  if (geometry.pixels() != labels.size()) fail(ErrorCode::kSizeMismatch, "label count does not match image geometry");
  std::string out = "P6\n" + std::to_string(geometry.width) + " " + std::to_string(geometry.height) + "\n255\n";
  out.reserve(out.size() + 3 * labels.size());
  for (int label : labels) {
    const Rgb& c = palette()[static_cast<std::size_t>(((label % 16) + 16) % 16)];
    out.push_back(static_cast<char>(c.r));
    out.push_back(static_cast<char>(c.g));
    out.push_back(static_cast<char>(c.b));
  }
  return out;
}

std::string encode_pgm(std::span<const double> values, const Geometry& geometry, double* lo_out, double* hi_out) {
  if (geometry.pixels() != values.size()) fail(ErrorCode::kSizeMismatch, "value count does not match image geometry");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = values.empty() ? 0.0 : *lo_it;
  const double hi = values.empty() ? 0.0 : *hi_it;
  std::string out = "P5\n" + std::to_string(geometry.width) + " " + std::to_string(geometry.height) + "\n255\n";
  out.reserve(out.size() + values.size());
  for (double v : values) {
    const long level = hi > lo ? std::lround(255.0 * (v - lo) / (hi - lo)) : 128;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0L, 255L))));
  }
  if (lo_out) *lo_out = lo;
  if (hi_out) *hi_out = hi;
  return out;
}

void cluster_map_image(std::span<const int> labels, const std::optional<Geometry>& geometry,
                       const std::filesystem::path& path) {
  write_file(path, encode_ppm(labels, require_geometry(geometry, labels.size())));
}

void abundance_image(std::span<const double> values, const std::optional<Geometry>& geometry,
                     const std::filesystem::path& path) {
  double lo = 0.0, hi = 0.0;
  const std::string pgm = encode_pgm(values, require_geometry(geometry, values.size()), &lo, &hi);
  write_file(path, pgm);
  std::ostringstream side;
  side << std::setprecision(17) << "min=" << lo << "\nmax=" << hi << "\n";
  std::filesystem::path sidecar = path;
  sidecar += ".txt";
  write_file(sidecar, side.str());
}

void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels) {
  std::string out = "pixel,label\n";
  for (std::size_t j = 0; j < labels.size(); ++j) out += std::to_string(j) + "," + std::to_string(labels[j]) + "\n";
  write_file(path, out);
}

void write_endmembers_csv(const std::filesystem::path& path, const Matrix& signatures,
                          std::span<const std::size_t> ids) {
  if (ids.size() != static_cast<std::size_t>(signatures.cols()))
    fail(ErrorCode::kInvalidArgument, "one id per endmember required");
  std::ostringstream out;
  for (std::size_t k = 0; k < ids.size(); ++k) out << (k ? "," : "") << "cluster_" << ids[k];
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < signatures.rows(); ++i) {
    for (Eigen::Index k = 0; k < signatures.cols(); ++k) out << (k ? "," : "") << signatures(i, k);
    out << '\n';
  }
  write_file(path, out.str());
}

}  // namespace h2nmf::io
