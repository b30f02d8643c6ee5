#include <doctest.h>

#include <cstring>

#include "h2nmf/error.hpp"
#include "h2nmf/io.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace h2nmf;
using testutil::read_bytes;
using testutil::write_bytes;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("cube round trip is exact for float32 values") {
  testutil::TempDir dir;
  std::mt19937_64 rng(91);
  Matrix m = oracle::uniform(rng, 7, 12, 0.0, 100.0);
  m = m.cast<float>().cast<double>();
  io::save_cube(dir / "a.cube", m, Geometry{4, 3});
  const io::LoadResult r = io::load_cube(dir / "a.cube");
  CHECK(r.clamped == 0);
  CHECK((r.data.values.array() == m.array()).all());
  REQUIRE(r.data.geometry);
  CHECK(*r.data.geometry == Geometry{4, 3});
  const std::string bytes = read_bytes(dir / "a.cube");
  CHECK(bytes.rfind("H2NMF-CUBE/1\nbands=7 width=4 height=3 dtype=float32 order=le layout=bip\n", 0) == 0);

  io::save_cube(dir / "b.cube", Matrix::Constant(1, 1, 0.5), Geometry{1, 1});
  const auto one = io::load_any(dir / "b.cube");
  CHECK(one.data.values.rows() == 1);
  CHECK(one.data.values(0, 0) == 0.5);
}

TEST_CASE("cube payload bytes are little-endian float32 in pixel-interleaved order") {
  testutil::TempDir dir;
  Matrix m(2, 2);
  m << 1.0, 3.0, 2.0, 4.0;
  io::save_cube(dir / "c.cube", m, Geometry{2, 1});
  const std::string bytes = read_bytes(dir / "c.cube");
  const std::string payload = bytes.substr(bytes.size() - 16);
  const float expect[4] = {1.0f, 2.0f, 3.0f, 4.0f};
  for (int k = 0; k < 4; ++k) {
    const auto* b = reinterpret_cast<const unsigned char*>(payload.data() + 4 * k);
    const std::uint32_t raw = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    float f;
    std::memcpy(&f, &raw, 4);
    CHECK(f == expect[k]);
  }
}

TEST_CASE("cube failures") {
  testutil::TempDir dir;
  io::save_cube(dir / "ok.cube", Matrix::Ones(3, 4), Geometry{2, 2});
  const std::string good = read_bytes(dir / "ok.cube");

  write_bytes(dir / "short.cube", good.substr(0, good.size() - 3));
  CHECK(code_of([&] { io::load_cube(dir / "short.cube"); }) == ErrorCode::kTruncatedPayload);
  write_bytes(dir / "long.cube", good + "xxxx");
  CHECK(code_of([&] { io::load_cube(dir / "long.cube"); }) == ErrorCode::kSizeMismatch);
  write_bytes(dir / "magic.cube", "H2NMF-CUBE/2\n" + good.substr(13));
  CHECK(code_of([&] { io::load_cube(dir / "magic.cube"); }) == ErrorCode::kBadMagic);
  write_bytes(dir / "hdr.cube", "H2NMF-CUBE/1\nbands=3 width=2");
  CHECK(code_of([&] { io::load_cube(dir / "hdr.cube"); }) == ErrorCode::kTruncatedPayload);
  write_bytes(dir / "dtype.cube", "H2NMF-CUBE/1\nbands=1 width=1 height=1 dtype=float64\n12345678");
  CHECK(code_of([&] { io::load_cube(dir / "dtype.cube"); }) == ErrorCode::kParse);
  CHECK(code_of([&] { io::load_cube(dir / "missing.cube"); }) == ErrorCode::kIo);
  CHECK(code_of([&] { io::save_cube(dir / "x.cube", Matrix::Ones(2, 5), Geometry{2, 2}); }) ==
        ErrorCode::kSizeMismatch);
}

TEST_CASE("negative values are clamped and counted") {
  testutil::TempDir dir;
  Matrix m(2, 2);
  m << -1.0, 2.0, 3.0, -0.5;
  io::save_cube(dir / "n.cube", m, Geometry{2, 1});
  const auto r = io::load_cube(dir / "n.cube");
  CHECK(r.clamped == 2);
  CHECK(r.data.values.minCoeff() == 0.0);
  write_bytes(dir / "n.csv", "1,-2\n-3,-4\n");
  CHECK(io::load_matrix_csv(dir / "n.csv").clamped == 3);
}

TEST_CASE("matrix CSV") {
  testutil::TempDir dir;
  write_bytes(dir / "a.csv", "1,2,3\n4, 5.5 ,6e-1\n\n");
  const auto r = io::load_any(dir / "a.csv");
  Matrix expect(2, 3);
  expect << 1, 2, 3, 4, 5.5, 0.6;
  CHECK(r.data.values == expect);
  CHECK_FALSE(r.data.geometry);

  write_bytes(dir / "ragged.csv", "1,2\n3\n");
  CHECK(code_of([&] { io::load_matrix_csv(dir / "ragged.csv"); }) == ErrorCode::kParse);
  write_bytes(dir / "text.csv", "1,two\n");
  CHECK(code_of([&] { io::load_matrix_csv(dir / "text.csv"); }) == ErrorCode::kParse);
  write_bytes(dir / "empty.csv", "");
  CHECK(code_of([&] { io::load_matrix_csv(dir / "empty.csv"); }) == ErrorCode::kParse);

  std::mt19937_64 rng(92);
  const Matrix m = oracle::uniform(rng, 4, 6);
  io::write_matrix_csv(dir / "rt.csv", m);
  CHECK((io::load_matrix_csv(dir / "rt.csv").data.values.array() == m.array()).all());
}

TEST_CASE("cluster map image") {
  testutil::TempDir dir;
  const std::vector<int> same(6, 2);
  io::cluster_map_image(same, Geometry{3, 2}, dir / "same.ppm");
  const std::string a = read_bytes(dir / "same.ppm");
  REQUIRE(a.rfind("P6\n3 2\n255\n", 0) == 0);
  const std::string px = a.substr(a.size() - 18);
  const auto c = io::palette()[2];
  for (int k = 0; k < 6; ++k) {
    CHECK(static_cast<unsigned char>(px[3 * k]) == c.r);
    CHECK(static_cast<unsigned char>(px[3 * k + 1]) == c.g);
    CHECK(static_cast<unsigned char>(px[3 * k + 2]) == c.b);
  }

  const std::vector<int> checker{1, 2, 2, 1};
  const std::string enc = io::encode_ppm(checker, Geometry{2, 2});
  const std::string body = enc.substr(enc.size() - 12);
  CHECK(body.substr(0, 3) == body.substr(9, 3));
  CHECK(body.substr(3, 3) == body.substr(6, 3));
  CHECK(body.substr(0, 3) != body.substr(3, 3));
  CHECK(io::encode_ppm(checker, Geometry{2, 2}) == enc);
  // Labels wrap around the 16-entry palette.
  CHECK(io::encode_ppm(std::vector<int>{17}, Geometry{1, 1}) == io::encode_ppm(std::vector<int>{1}, Geometry{1, 1}));

  CHECK(code_of([&] { io::cluster_map_image(same, std::nullopt, dir / "x.ppm"); }) == ErrorCode::kNoGeometry);
  CHECK(code_of([&] { io::cluster_map_image(same, Geometry{2, 2}, dir / "x.ppm"); }) == ErrorCode::kSizeMismatch);
}

TEST_CASE("abundance image scaling and sidecar") {
  testutil::TempDir dir;
  const std::vector<double> v{0.0, 0.5, 1.0, 2.0};
  io::abundance_image(v, Geometry{2, 2}, dir / "a.pgm");
  const std::string a = read_bytes(dir / "a.pgm");
  REQUIRE(a.rfind("P5\n2 2\n255\n", 0) == 0);
  const std::string px = a.substr(a.size() - 4);
  CHECK(static_cast<unsigned char>(px[0]) == 0);
  CHECK(static_cast<unsigned char>(px[3]) == 255);
  CHECK(static_cast<unsigned char>(px[1]) < static_cast<unsigned char>(px[2]));
  const std::string side = read_bytes(std::filesystem::path(dir / "a.pgm").string() + ".txt");
  CHECK(side.rfind("min=0\nmax=2\n", 0) == 0);

  const std::vector<double> flat(4, 0.3);
  double lo = 0, hi = 0;
  const std::string f = io::encode_pgm(flat, Geometry{4, 1}, &lo, &hi);
  for (char ch : f.substr(f.size() - 4)) CHECK(static_cast<unsigned char>(ch) == 128);
  CHECK(lo == 0.3);
  CHECK(hi == 0.3);
  CHECK(code_of([&] { io::abundance_image(v, std::nullopt, dir / "b.pgm"); }) == ErrorCode::kNoGeometry);
}

TEST_CASE("label and endmember CSV writers") {
  testutil::TempDir dir;
  io::write_labels_csv(dir / "l.csv", std::vector<int>{3, 1});
  CHECK(read_bytes(dir / "l.csv") == "pixel,label\n0,3\n1,1\n");
  Matrix s(2, 2);
  s << 1, 2, 3, 4;
  io::write_endmembers_csv(dir / "e.csv", s, std::vector<std::size_t>{5, 9});
  const std::string e = read_bytes(dir / "e.csv");
  CHECK(e == "cluster_5,cluster_9\n1,2\n3,4\n");
}
