#include "msface/transform.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "msface/error.hpp"

namespace msface {

namespace {

// basis[k * n + m] = c_k * sqrt(2/n) * cos((2m+1) k pi / 2n)
using Basis = std::vector<double>;

std::shared_ptr<const Basis> dct_basis(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const Basis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    auto basis = std::make_shared<Basis>(n * n);
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double ck = k == 0 ? std::numbers::sqrt2 / 2.0 : 1.0;
      for (std::size_t m = 0; m < n; ++m) {
        (*basis)[k * n + m] =
            ck * scale *
            std::cos(static_cast<double>((2 * m + 1) * k) * std::numbers::pi / (2.0 * static_cast<double>(n)));
      }
    }
    slot = std::move(basis);
  }
  return slot;
}

// Applies basis (forward) or its transpose (inverse) along both axes.
Matrix separable(const Matrix& in, bool inverse) {
  const std::size_t w = in.width();
  const std::size_t h = in.height();
  const auto bw = dct_basis(w);
  const auto bh = dct_basis(h);

  Matrix rows(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto src = in.row(y);
    for (std::size_t k = 0; k < w; ++k) {
      double acc = 0.0;
      if (inverse) {
        for (std::size_t m = 0; m < w; ++m) acc += (*bw)[m * w + k] * src[m];
      } else {
        const double* b = bw->data() + k * w;
        for (std::size_t m = 0; m < w; ++m) acc += b[m] * src[m];
      }
      rows(k, y) = acc;
    }
  }

  Matrix out(w, h);
  std::vector<double> column(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) column[y] = rows(x, y);
    for (std::size_t l = 0; l < h; ++l) {
      double acc = 0.0;
      if (inverse) {
        for (std::size_t n = 0; n < h; ++n) acc += (*bh)[n * h + l] * column[n];
      } else {
        const double* b = bh->data() + l * h;
        for (std::size_t n = 0; n < h; ++n) acc += b[n] * column[n];
      }
      out(x, l) = acc;
    }
  }
  return out;
}

}  // namespace

CoefMatrix dct2_forward(const Matrix& signal) {
  if (signal.empty()) fail(ErrorCode::BadDimension, "DCT input must be non-empty");
  return CoefMatrix(separable(signal, false));
}

Matrix dct2_inverse(const CoefMatrix& coefs) {
  if (coefs.values().empty()) fail(ErrorCode::BadDimension, "DCT input must be non-empty");
  return separable(coefs.values(), true);
}

void save_coefficients_csv(const CoefMatrix& coefs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  char buf[40];
  for (std::size_t v = 0; v < coefs.height(); ++v) {
    for (std::size_t u = 0; u < coefs.width(); ++u) {
      std::snprintf(buf, sizeof buf, "%.17g", coefs(u, v));
      if (u) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

}  // namespace msface
