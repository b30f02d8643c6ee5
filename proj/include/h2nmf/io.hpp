#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2nmf/matrix.hpp"

namespace h2nmf::io {

// Binary cube layout:
//   line 1: "H2NMF-CUBE/1"
//   line 2: "bands=<m> width=<w> height=<h> dtype=float32 order=le layout=bip"
//   payload: w*h pixels in row-major image order, each pixel's m bands
//            contiguous, little-endian IEEE-754 float32.
inline constexpr std::string_view kCubeMagic = "H2NMF-CUBE/1";

struct LoadResult {
  DataMatrix data;
  std::size_t clamped = 0;  // negative entries set to zero
};

LoadResult load_cube(const std::filesystem::path& path);
void save_cube(const std::filesystem::path& path, const Matrix& m, const Geometry& geometry);

// Rectangular numeric CSV, one band per row and one pixel per column.
LoadResult load_matrix_csv(const std::filesystem::path& path);

// Cube by magic, CSV otherwise.
LoadResult load_any(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// Fixed 16-color palette shared with the explorer frontend.
struct Rgb {
  unsigned char r, g, b;
};
const std::array<Rgb, 16>& palette();

// Binary PPM (P6); label k is drawn with palette()[k mod 16].
void cluster_map_image(std::span<const int> labels, const std::optional<Geometry>& geometry,
                       const std::filesystem::path& path);

// Binary PGM (P5) of values min-max scaled to 0..255 (all-equal values map to
// 128). The bounds go to "<path>.txt" as "min=<v>\nmax=<v>\n".
void abundance_image(std::span<const double> values, const std::optional<Geometry>& geometry,
                     const std::filesystem::path& path);

// In-memory encoders used by the writers above and by the session service.
std::string encode_ppm(std::span<const int> labels, const Geometry& geometry);
std::string encode_pgm(std::span<const double> values, const Geometry& geometry, double* lo = nullptr,
                       double* hi = nullptr);

// "pixel,label" rows, 0-based pixel index.
void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels);

// One column per endmember under a header row of cluster ids.
void write_endmembers_csv(const std::filesystem::path& path, const Matrix& signatures,
                          std::span<const std::size_t> ids);

}  // namespace h2nmf::io
