#pragma once

#include <filesystem>

#include "msface/imaging.hpp"
#include "msface/matrix.hpp"

namespace msface {

// Orthonormal DCT-II coefficients laid out on the source grid: coefficient
// (u, v) sits at column u (horizontal frequency, axis length = width) and
// row v (vertical frequency, axis length = height). (0,0) is DC.
class CoefMatrix {
 public:
  CoefMatrix() = default;
  explicit CoefMatrix(Matrix values) : values_(std::move(values)) {}

  std::size_t width() const noexcept { return values_.width(); }
  std::size_t height() const noexcept { return values_.height(); }
  double operator()(std::size_t u, std::size_t v) const { return values_(u, v); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

CoefMatrix dct2_forward(const Matrix& signal);
inline CoefMatrix dct2_forward(const Image& img) { return dct2_forward(img.pixels()); }

Matrix dct2_inverse(const CoefMatrix& coefs);

// Debug dump, one row of coefficients per line.
void save_coefficients_csv(const CoefMatrix& coefs, const std::filesystem::path& path);

}  // namespace msface
