#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace msface {

// Row-major real matrix. x indexes columns (0..width-1), y indexes rows
// (0..height-1).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {}
  Matrix(std::size_t width, std::size_t height, std::vector<double> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  double operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<const double> row(std::size_t y) const {
    return std::span<const double>(data_).subspan(y * width_, width_);
  }

  bool same_shape(const Matrix& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

}  // namespace msface
