#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "msface/error.hpp"
#include "msface/imaging.hpp"
#include "support.hpp"

using namespace msface;
using msface::testing::TempDir;
using msface::testing::write_text;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an msface::Error");
  return ErrorCode::InvalidArgument;
}

Image quantized_image(std::size_t w, std::size_t h, unsigned seed) {
  std::mt19937 rng(seed);
  Matrix m(w, h);
  for (double& v : m.values()) v = static_cast<double>(rng() % 256) / 255.0;
  return Image(m);
}

// Keys cubic kernel, a = -0.5.
double keys(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

// Direct 4x4-neighbourhood evaluation per output pixel.
double bicubic_oracle(const Matrix& src, std::size_t out_w, std::size_t out_h, std::size_t x,
                      std::size_t y) {
  const double sx = (static_cast<double>(x) + 0.5) * static_cast<double>(src.width()) /
                        static_cast<double>(out_w) - 0.5;
  const double sy = (static_cast<double>(y) + 0.5) * static_cast<double>(src.height()) /
                        static_cast<double>(out_h) - 0.5;
  const auto fx = static_cast<long>(std::floor(sx));
  const auto fy = static_cast<long>(std::floor(sy));
  double acc = 0.0;
  for (long j = fy - 1; j <= fy + 2; ++j) {
    for (long i = fx - 1; i <= fx + 2; ++i) {
      const auto ci = static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(src.width()) - 1));
      const auto cj = static_cast<std::size_t>(std::clamp<long>(j, 0, static_cast<long>(src.height()) - 1));
      acc += keys(sx - static_cast<double>(i)) * keys(sy - static_cast<double>(j)) * src(ci, cj);
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("image construction validates range") {
  CHECK(code_of([] { (void)Image(Matrix(2, 2, 1.5)); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { (void)Image(Matrix(2, 2, std::nan(""))); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { (void)Image(Matrix()); }) == ErrorCode::BadDimension);
  CHECK(code_of([] { (void)Matrix(2, 2, std::vector<double>(3)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("PGM and BMP round trip 8-bit images exactly") {
  TempDir dir("io");
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{7, 5}, {100, 145}, {1, 1}, {3, 9}}) {
    const Image img = quantized_image(w, h, static_cast<unsigned>(w * 31 + h));
    save_pgm(img, dir / "a.pgm");
    save_bmp(img, dir / "a.bmp");
    CHECK(load_pgm(dir / "a.pgm") == img);
    CHECK(load_bmp(dir / "a.bmp") == img);
    CHECK(load_grayscale(dir / "a.bmp") == img);
    CHECK(load_any(dir / "a.pgm") == img);
  }
}

TEST_CASE("writers quantize to the nearest level") {
  TempDir dir("quant");
  save_pgm(Image(Matrix(2, 1, std::vector<double>{0.5, 0.999})), dir / "q.pgm");
  const Image back = load_pgm(dir / "q.pgm");
  CHECK(back(0, 0) == 128.0 / 255.0);
  CHECK(back(1, 0) == 1.0);
}

TEST_CASE("PGM header comments and whitespace are accepted") {
  TempDir dir("pgmc");
  write_text(dir / "c.pgm", std::string("P5\n# comment\n2 # width\n1\n255\n") + '\x00' + '\xff');
  const Image img = load_pgm(dir / "c.pgm");
  CHECK(img.width() == 2);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(1, 0) == 1.0);
}

TEST_CASE("bad or truncated containers are reported") {
  TempDir dir("bad");
  write_text(dir / "p2.pgm", "P2\n2 1\n255\n0 255\n");
  CHECK(code_of([&] { load_pgm(dir / "p2.pgm"); }) == ErrorCode::UnsupportedFormat);
  write_text(dir / "deep.pgm", "P5\n1 1\n65535\n\x01\x02");
  CHECK(code_of([&] { load_pgm(dir / "deep.pgm"); }) == ErrorCode::UnsupportedFormat);
  write_text(dir / "short.pgm", "P5\n4 4\n255\n\x01\x02");
  CHECK(code_of([&] { load_pgm(dir / "short.pgm"); }) == ErrorCode::IoFailure);
  write_text(dir / "short.bmp", "BM1234");
  CHECK(code_of([&] { load_bmp(dir / "short.bmp"); }) == ErrorCode::IoFailure);
  write_text(dir / "junk.img", "hello world, not an image");
  CHECK(code_of([&] { load_grayscale(dir / "junk.img"); }) == ErrorCode::UnsupportedFormat);
  CHECK(code_of([&] { load_pgm(dir / "missing.pgm"); }) == ErrorCode::IoFailure);
}

TEST_CASE("24-bit BMP is unsupported") {
  TempDir dir("bmp24");
  std::string bmp(54 + 4, '\0');
  bmp[0] = 'B';
  bmp[1] = 'M';
  bmp[10] = 54;
  bmp[14] = 40;
  bmp[18] = 1;
  bmp[22] = 1;
  bmp[26] = 1;
  bmp[28] = 24;
  write_text(dir / "rgb.bmp", bmp);
  CHECK(code_of([&] { load_bmp(dir / "rgb.bmp"); }) == ErrorCode::UnsupportedFormat);
}

TEST_CASE("temperature CSV maps per image onto [0,1]") {
  TempDir dir("csv");
  write_text(dir / "t.csv", "30,32\n34,38\n");
  const Image img = load_thermal_matrix(dir / "t.csv");
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(img(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(img(1, 1) == 1.0);

  write_text(dir / "flat.csv", "31.5,31.5\n31.5,31.5\n");
  const Image flat = load_thermal_matrix(dir / "flat.csv");
  for (double v : flat.pixels().values()) CHECK(v == 0.5);
}

TEST_CASE("temperature mapping is invariant to affine unit changes") {
  std::mt19937_64 rng(5);
  const Matrix t = msface::testing::random_matrix(9, 6, rng, 20.0, 40.0);
  Matrix f(t.width(), t.height());
  for (std::size_t i = 0; i < t.size(); ++i) f.values()[i] = t.values()[i] * 1.8 + 32.0;
  const Image a = thermal_to_gray(t);
  const Image b = thermal_to_gray(f);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(a.pixels().values()[i] == doctest::Approx(b.pixels().values()[i]).epsilon(1e-12));
}

TEST_CASE("malformed temperature CSVs are rejected") {
  TempDir dir("csvbad");
  write_text(dir / "ragged.csv", "1,2,3\n4,5\n");
  CHECK(code_of([&] { read_real_csv(dir / "ragged.csv"); }) == ErrorCode::RaggedRows);
  write_text(dir / "text.csv", "1,2\n3,hot\n");
  CHECK(code_of([&] { read_real_csv(dir / "text.csv"); }) == ErrorCode::NonNumericCell);
  write_text(dir / "empty.csv", "");
  CHECK(code_of([&] { read_real_csv(dir / "empty.csv"); }) == ErrorCode::IoFailure);
}

TEST_CASE("thermal matrices survive a save/load cycle to 4 decimals") {
  TempDir dir("csvrt");
  std::mt19937_64 rng(9);
  const Matrix t = msface::testing::random_matrix(5, 4, rng, 25.0, 37.0);
  save_thermal_matrix(t, dir / "t.csv");
  const Matrix back = read_real_csv(dir / "t.csv");
  REQUIRE(back.same_shape(t));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(back.values()[i] - t.values()[i]) <= 5e-5);
}

TEST_CASE("percentile normalization matches a nearest-rank oracle") {
  std::mt19937_64 rng(11);
  for (double frac : {0.0, 0.01, 0.05, 0.2}) {
    const Image img(msface::testing::random_matrix(17, 23, rng));
    std::vector<double> v(img.pixels().values().begin(), img.pixels().values().end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    // smallest value with at least frac * n values at or below it
    std::size_t lo_rank = 1;
    while (static_cast<double>(lo_rank) < frac * static_cast<double>(n) - 1e-9) ++lo_rank;
    std::size_t hi_rank = 1;
    while (static_cast<double>(hi_rank) < (1.0 - frac) * static_cast<double>(n) - 1e-9) ++hi_rank;
    const double lo = v[lo_rank - 1];
    const double hi = v[hi_rank - 1];
    const Image out = normalize_intensity(img, frac);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = img.pixels().values()[i];
      const double expect = (std::min(std::max(x, lo), hi) - lo) / (hi - lo);
      CHECK(out.pixels().values()[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalization saturates the requested tails") {
  Matrix m(100, 1);
  for (std::size_t i = 0; i < 100; ++i) m.values()[i] = static_cast<double>(i) / 99.0;
  const Image out = normalize_intensity(Image(m), 0.05);
  const auto vals = out.pixels().values();
  CHECK(std::count(vals.begin(), vals.end(), 0.0) == 5);
  CHECK(std::count(vals.begin(), vals.end(), 1.0) == 6);
}

TEST_CASE("normalization of a constant image is 0.5 everywhere") {
  const Image out = normalize_intensity(Image(4, 4, 0.3));
  for (double v : out.pixels().values()) CHECK(v == 0.5);
}

TEST_CASE("normalization is invariant to affine intensity changes") {
  std::mt19937_64 rng(3);
  const Matrix m = msface::testing::random_matrix(12, 12, rng);
  Matrix scaled(12, 12);
  for (std::size_t i = 0; i < m.size(); ++i) scaled.values()[i] = 0.1 + 0.5 * m.values()[i];
  const Image a = normalize_intensity(Image(m));
  const Image b = normalize_intensity(Image(scaled));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(a.pixels().values()[i] == doctest::Approx(b.pixels().values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("saturate fraction must lie in [0, 0.5)") {
  const Image img(4, 4, 0.2);
  CHECK(code_of([&] { normalize_intensity(img, 0.5); }) == ErrorCode::BadFraction);
  CHECK(code_of([&] { normalize_intensity(img, -0.1); }) == ErrorCode::BadFraction);
}

TEST_CASE("bicubic resampling matches the direct kernel oracle") {
  std::mt19937_64 rng(21);
  const Matrix src = msface::testing::random_matrix(13, 17, rng);
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{100, 145}, {5, 6}, {13, 17}, {29, 11}}) {
    const Matrix out = resample_bicubic(src, w, h);
    REQUIRE(out.width() == w);
    REQUIRE(out.height() == h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        CHECK(out(x, y) == doctest::Approx(bicubic_oracle(src, w, h, x, y)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("same-size resampling is the identity and constants are preserved") {
  std::mt19937_64 rng(4);
  const Matrix src = msface::testing::random_matrix(8, 9, rng);
  const Matrix same = resample_bicubic(src, 8, 9);
  for (std::size_t i = 0; i < src.size(); ++i) CHECK(same.values()[i] == doctest::Approx(src.values()[i]).epsilon(1e-14));
  const Matrix flat = resample_bicubic(Matrix(6, 6, 0.42), 31, 7);
  for (double v : flat.values()) CHECK(v == doctest::Approx(0.42).epsilon(1e-14));
}

TEST_CASE("resize clamps overshoot to the valid range") {
  Matrix step(8, 8, 0.0);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 4; x < 8; ++x) step(x, y) = 1.0;
  const Matrix raw = resample_bicubic(step, 23, 8);
  CHECK(*std::max_element(raw.values().begin(), raw.values().end()) > 1.0);
  const Image img = resize_bicubic(Image(step), 23, 8);
  for (double v : img.pixels().values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("resampling rejects tiny inputs and empty targets") {
  CHECK(code_of([] { resample_bicubic(Matrix(3, 10), 5, 5); }) == ErrorCode::TooSmall);
  CHECK(code_of([] { resample_bicubic(Matrix(4, 4), 0, 5); }) == ErrorCode::BadDimension);
}
