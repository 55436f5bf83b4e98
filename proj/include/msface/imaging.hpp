#pragma once

#include <filesystem>
#include <span>

#include "msface/matrix.hpp"

namespace msface {

// Grayscale intensity image with every pixel in [0,1].
class Image {
 public:
  Image() = default;
  // Throws OutOfRange if any pixel lies outside [0,1] or is not finite, and
  // BadDimension if the matrix is empty.
  explicit Image(Matrix pixels);
  Image(std::size_t width, std::size_t height, double fill);

  std::size_t width() const noexcept { return pixels_.width(); }
  std::size_t height() const noexcept { return pixels_.height(); }
  double operator()(std::size_t x, std::size_t y) const { return pixels_(x, y); }
  const Matrix& pixels() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Matrix pixels_;
};

inline constexpr std::size_t kCanonicalWidth = 100;
inline constexpr std::size_t kCanonicalHeight = 145;

// 8-bit grayscale loaders. Binary PGM (P5, maxval 255) and uncompressed 8-bit
// palettized BMP are accepted; v maps to v/255.
Image load_grayscale(const std::filesystem::path& path);
Image load_pgm(const std::filesystem::path& path);
Image load_bmp(const std::filesystem::path& path);

// Writers quantize each pixel to round(255 * v).
void save_pgm(const Image& img, const std::filesystem::path& path);
void save_bmp(const Image& img, const std::filesystem::path& path);

// Comma-separated temperature matrix, one scanline per row. The result is the
// per-image min-max mapping of the temperatures; a constant matrix maps to 0.5.
Image load_thermal_matrix(const std::filesystem::path& path);
Matrix read_real_csv(const std::filesystem::path& path);
Image thermal_to_gray(const Matrix& temperatures);
void save_thermal_matrix(const Matrix& temperatures, const std::filesystem::path& path);

// Dispatches on extension: .pgm/.bmp -> load_grayscale, .csv -> thermal.
Image load_any(const std::filesystem::path& path);

// Percentile contrast stretch. The nearest-rank percentiles at
// saturate_fraction and 1 - saturate_fraction become 0 and 1; values outside
// are clamped. A degenerate range yields a constant 0.5 image.
Image normalize_intensity(const Image& img, double saturate_fraction = 0.01);

// Separable cubic convolution (a = -0.5) with edge clamping and pixel-centre
// alignment. resample_bicubic returns the raw interpolated values;
// resize_bicubic additionally clamps to [0,1].
Matrix resample_bicubic(const Matrix& src, std::size_t out_w, std::size_t out_h);
Image resize_bicubic(const Image& img, std::size_t out_w = kCanonicalWidth,
                     std::size_t out_h = kCanonicalHeight);

}  // namespace msface
