#include "msface/imaging.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "msface/error.hpp"

namespace msface {

namespace fs = std::filesystem;

Image::Image(Matrix pixels) : pixels_(std::move(pixels)) {
  if (pixels_.empty()) fail(ErrorCode::BadDimension, "image must be at least 1x1");
  for (double v : pixels_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::OutOfRange, "pixel value outside [0,1]: " + std::to_string(v));
    }
  }
}

Image::Image(std::size_t width, std::size_t height, double fill)
    : Image(Matrix(width, height, fill)) {}

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoFailure, "read error on " + path.string());
  return bytes;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string lower_ext(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// PGM header token reader; skips whitespace and '#' comments.
class PgmHeader {
 public:
  PgmHeader(const std::vector<unsigned char>& bytes, const fs::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      tok.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (tok.empty()) fail(ErrorCode::IoFailure, "truncated PGM header in " + path_.string());
    return tok;
  }

  std::size_t number() {
    const std::string tok = token();
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail(ErrorCode::UnsupportedFormat, "bad PGM header field '" + tok + "' in " + path_.string());
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size()) fail(ErrorCode::IoFailure, "truncated PGM file " + path_.string());
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

std::uint32_t le32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint16_t le16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(std::size_t in, std::size_t out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<long>(in) - 1;
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    for (int k = 0; k < 4; ++k) {
      const long idx = static_cast<long>(base) - 1 + k;
      taps[o].index[k] = static_cast<std::size_t>(std::clamp(idx, 0L, last));
      taps[o].weight[k] = cubic_kernel(t - static_cast<double>(k - 1));
    }
  }
  return taps;
}

}  // namespace

Image load_pgm(const fs::path& path) {
  const auto bytes = read_bytes(path);
  PgmHeader header(bytes, path);
  if (bytes.size() < 2 || header.token() != "P5") {
    fail(ErrorCode::UnsupportedFormat, path.string() + " is not a binary PGM (P5)");
  }
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (maxval != 255) {
    fail(ErrorCode::UnsupportedFormat, "only 8-bit PGM (maxval 255) is supported: " + path.string());
  }
  if (width == 0 || height == 0) fail(ErrorCode::UnsupportedFormat, "empty PGM " + path.string());
  const std::size_t offset = header.raster_offset();
  if (bytes.size() < offset + width * height) {
    fail(ErrorCode::IoFailure, "truncated PGM raster in " + path.string());
  }
  Matrix m(width, height);
  for (std::size_t i = 0; i < width * height; ++i) m.values()[i] = bytes[offset + i] / 255.0;
  return Image(std::move(m));
}

Image load_bmp(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 54) fail(ErrorCode::IoFailure, "truncated BMP header in " + path.string());
  if (bytes[0] != 'B' || bytes[1] != 'M') {
    fail(ErrorCode::UnsupportedFormat, path.string() + " is not a BMP file");
  }
  const std::uint32_t data_offset = le32(bytes, 10);
  const std::uint32_t info_size = le32(bytes, 14);
  const auto width = static_cast<std::int32_t>(le32(bytes, 18));
  const auto raw_height = static_cast<std::int32_t>(le32(bytes, 22));
  const std::uint16_t bpp = le16(bytes, 28);
  const std::uint32_t compression = le32(bytes, 30);
  std::uint32_t colors = le32(bytes, 46);
  if (bpp != 8 || compression != 0) {
    fail(ErrorCode::UnsupportedFormat, "only uncompressed 8-bit BMP is supported: " + path.string());
  }
  if (width <= 0 || raw_height == 0) fail(ErrorCode::UnsupportedFormat, "empty BMP " + path.string());
  if (colors == 0) colors = 256;
  const std::size_t palette_at = 14 + info_size;
  if (bytes.size() < palette_at + 4 * colors) {
    fail(ErrorCode::IoFailure, "truncated BMP palette in " + path.string());
  }
  std::array<double, 256> gray{};
  for (std::uint32_t i = 0; i < colors && i < 256; ++i) {
    const std::size_t e = palette_at + 4 * i;
    gray[i] = (bytes[e] + bytes[e + 1] + bytes[e + 2]) / (3.0 * 255.0);
  }
  const bool bottom_up = raw_height > 0;
  const auto w = static_cast<std::size_t>(width);
  const auto h = static_cast<std::size_t>(bottom_up ? raw_height : -static_cast<std::int64_t>(raw_height));
  const std::size_t stride = (w + 3) & ~std::size_t{3};
  if (bytes.size() < data_offset + stride * h) {
    fail(ErrorCode::IoFailure, "truncated BMP raster in " + path.string());
  }
  Matrix m(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t y = bottom_up ? h - 1 - r : r;
    const std::size_t row_at = data_offset + r * stride;
    for (std::size_t x = 0; x < w; ++x) m(x, y) = gray[bytes[row_at + x]];
  }
  return Image(std::move(m));
}

Image load_grayscale(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".bmp") return load_bmp(path);
  // Fall back to sniffing the magic bytes.
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] == 'P' && magic[1] == '5') return load_pgm(path);
  if (magic[0] == 'B' && magic[1] == 'M') return load_bmp(path);
  fail(ErrorCode::UnsupportedFormat, "unrecognised image container: " + path.string());
}

void save_pgm(const Image& img, const fs::path& path) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.pixels().size());
  for (double v : img.pixels().values()) bytes.push_back(quantize(v));
  write_bytes(path, bytes);
}

void save_bmp(const Image& img, const fs::path& path) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const std::size_t stride = (w + 3) & ~std::size_t{3};
  const std::uint32_t offset = 14 + 40 + 256 * 4;
  std::vector<unsigned char> bytes;
  bytes.reserve(offset + stride * h);
  bytes.push_back('B');
  bytes.push_back('M');
  put32(bytes, static_cast<std::uint32_t>(offset + stride * h));
  put32(bytes, 0);
  put32(bytes, offset);
  put32(bytes, 40);
  put32(bytes, static_cast<std::uint32_t>(w));
  put32(bytes, static_cast<std::uint32_t>(h));
  put16(bytes, 1);
  put16(bytes, 8);
  put32(bytes, 0);
  put32(bytes, static_cast<std::uint32_t>(stride * h));
  put32(bytes, 2835);
  put32(bytes, 2835);
  put32(bytes, 256);
  put32(bytes, 0);
  for (int i = 0; i < 256; ++i) {
    const auto c = static_cast<unsigned char>(i);
    bytes.insert(bytes.end(), {c, c, c, 0});
  }
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t y = h - 1 - r;
    for (std::size_t x = 0; x < w; ++x) bytes.push_back(quantize(img(x, y)));
    for (std::size_t x = w; x < stride; ++x) bytes.push_back(0);
  }
  write_bytes(path, bytes);
}

Matrix read_real_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t height = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string_view cell(line.data() + start,
                            (comma == std::string::npos ? line.size() : comma) - start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        fail(ErrorCode::NonNumericCell, path.string() + ":" + std::to_string(line_no) +
                                            ": non-numeric cell '" + std::string(cell) + "'");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (height == 0) {
      width = count;
    } else if (count != width) {
      fail(ErrorCode::RaggedRows, path.string() + ":" + std::to_string(line_no) + ": row has " +
                                      std::to_string(count) + " cells, expected " +
                                      std::to_string(width));
    }
    ++height;
  }
  if (height == 0) fail(ErrorCode::IoFailure, "empty matrix file " + path.string());
  return Matrix(width, height, std::move(values));
}

Image thermal_to_gray(const Matrix& temperatures) {
  if (temperatures.empty()) fail(ErrorCode::BadDimension, "empty temperature matrix");
  const auto [lo, hi] = std::minmax_element(temperatures.values().begin(), temperatures.values().end());
  const double t_min = *lo;
  const double t_max = *hi;
  Matrix out(temperatures.width(), temperatures.height(), 0.5);
  if (t_max > t_min) {
    const double span = t_max - t_min;
    auto src = temperatures.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp((src[i] - t_min) / span, 0.0, 1.0);
  }
  return Image(std::move(out));
}

Image load_thermal_matrix(const fs::path& path) { return thermal_to_gray(read_real_csv(path)); }

void save_thermal_matrix(const Matrix& temperatures, const fs::path& path) {
  std::string text;
  text.reserve(temperatures.size() * 9);
  char buf[32];
  for (std::size_t y = 0; y < temperatures.height(); ++y) {
    for (std::size_t x = 0; x < temperatures.width(); ++x) {
      if (x) text.push_back(',');
      const int n = std::snprintf(buf, sizeof buf, "%.4f", temperatures(x, y));
      text.append(buf, static_cast<std::size_t>(n));
    }
    text.push_back('\n');
  }
  write_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

Image load_any(const fs::path& path) {
  if (lower_ext(path) == ".csv") return load_thermal_matrix(path);
  return load_grayscale(path);
}

Image normalize_intensity(const Image& img, double saturate_fraction) {
  if (!(saturate_fraction >= 0.0 && saturate_fraction < 0.5)) {
    fail(ErrorCode::BadFraction, "saturate fraction must lie in [0, 0.5), got " +
                                     std::to_string(saturate_fraction));
  }
  std::vector<double> sorted(img.pixels().values().begin(), img.pixels().values().end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Nearest rank, 1-based: ceil(q * n), at least 1. The small offset keeps
  // exact products such as 0.01 * 200 from rounding up a rank.
  const auto rank = [&](double q) {
    const double r = std::ceil(q * n - 1e-9);
    return static_cast<std::size_t>(std::clamp(r, 1.0, n)) - 1;
  };
  const double p_lo = sorted[rank(saturate_fraction)];
  const double p_hi = sorted[rank(1.0 - saturate_fraction)];
  Matrix out(img.width(), img.height(), 0.5);
  if (p_hi > p_lo) {
    const double span = p_hi - p_lo;
    auto src = img.pixels().values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = (std::clamp(src[i], p_lo, p_hi) - p_lo) / span;
    }
  }
  return Image(std::move(out));
}

Matrix resample_bicubic(const Matrix& src, std::size_t out_w, std::size_t out_h) {
  if (src.width() < 4 || src.height() < 4) {
    fail(ErrorCode::TooSmall, "bicubic resize needs at least 4x4 input, got " +
                                  std::to_string(src.width()) + "x" + std::to_string(src.height()));
  }
  if (out_w == 0 || out_h == 0) fail(ErrorCode::BadDimension, "resize target must be non-empty");
  const auto htaps = make_taps(src.width(), out_w);
  const auto vtaps = make_taps(src.height(), out_h);

  Matrix rows(out_w, src.height());
  for (std::size_t y = 0; y < src.height(); ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      const Taps& t = htaps[x];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * src(t.index[k], y);
      rows(x, y) = acc;
    }
  }
  Matrix out(out_w, out_h);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Taps& t = vtaps[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * rows(x, t.index[k]);
      out(x, y) = acc;
    }
  }
  return out;
}

Image resize_bicubic(const Image& img, std::size_t out_w, std::size_t out_h) {
  Matrix out = resample_bicubic(img.pixels(), out_w, out_h);
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return Image(std::move(out));
}

}  // namespace msface
