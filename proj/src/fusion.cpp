#include "msface/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "msface/error.hpp"

namespace msface {

namespace {

void check_aligned(std::span<const DistanceTable> tables) {
  for (std::size_t i = 1; i < tables.size(); ++i) {
    if (tables[i].rows() != tables[0].rows() || tables[i].cols() != tables[0].cols()) {
      fail(ErrorCode::ShapeMismatch, "distance tables differ in shape");
    }
    if (!tables[i].aligned_with(tables[0])) {
      fail(ErrorCode::LabelMismatch, "distance tables differ in probe or template labels");
    }
  }
}

// Identification over a dense row-major buffer laid out like a table.
std::size_t correct_on(const DistanceTable& layout, const std::vector<double>& fused,
                       std::span<const int> truth) {
  const std::size_t cols = layout.cols();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < layout.rows(); ++r) {
    const double* row = fused.data() + r * cols;
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      const auto& l = layout.templates[c];
      const auto& bl = layout.templates[best];
      if (row[c] < row[best] ||
          (row[c] == row[best] && (l.person < bl.person || (l.person == bl.person && l.index < bl.index)))) {
        best = c;
      }
    }
    correct += layout.templates[best].person == truth[r] ? 1 : 0;
  }
  return correct;
}

double as_rate(std::size_t correct, std::size_t total) {
  return std::round(10000.0 * static_cast<double>(correct) / static_cast<double>(total)) / 100.0;
}

void check_truth(const DistanceTable& t, std::span<const int> truth) {
  if (truth.size() != t.rows()) {
    fail(ErrorCode::LengthMismatch, "truth has " + std::to_string(truth.size()) +
                                        " labels for " + std::to_string(t.rows()) + " probes");
  }
  if (t.rows() == 0 || t.cols() == 0) fail(ErrorCode::Empty, "distance table is empty");
}

}  // namespace

DistanceTable fuse_weighted(std::span<const DistanceTable> tables, std::span<const double> weights) {
  if (tables.empty()) fail(ErrorCode::Empty, "no tables to fuse");
  if (weights.size() != tables.size()) {
    fail(ErrorCode::WeightCountMismatch, std::to_string(weights.size()) + " weights for " +
                                             std::to_string(tables.size()) + " tables");
  }
  check_aligned(tables);
  DistanceTable out;
  out.probes = tables[0].probes;
  out.templates = tables[0].templates;
  out.values = Matrix(tables[0].cols(), tables[0].rows());
  auto dst = out.values.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < tables.size(); ++t) acc += weights[t] * tables[t].values.values()[i];
    dst[i] = acc;
  }
  return out;
}

DistanceTable fuse_fixed(std::span<const DistanceTable> tables) {
  if (tables.size() < 2) fail(ErrorCode::InvalidArgument, "fixed fusion needs at least two tables");
  check_aligned(tables);
  DistanceTable out;
  out.probes = tables[0].probes;
  out.templates = tables[0].templates;
  out.values = Matrix(tables[0].cols(), tables[0].rows());
  const auto k = static_cast<double>(tables.size());
  auto dst = out.values.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double acc = 0.0;
    for (const auto& t : tables) acc += t.values.values()[i];
    dst[i] = acc / k;
  }
  return out;
}

DistanceTable normalize_scores(const DistanceTable& table) {
  DistanceTable out = table;
  auto v = out.values.values();
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo;
  const double span = *hi - *lo;
  for (double& x : v) x = span > 0.0 ? (x - min) / span : 0.0;
  return out;
}

std::vector<double> weight_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "grid step must lie in (0, 1]");
  }
  const double count = std::round(1.0 / step);
  if (std::abs(count * step - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidArgument, "grid step must divide 1 evenly");
  }
  const auto n = static_cast<std::size_t>(count);
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) / count;
  return grid;
}

GridResult grid_search_2(const DistanceTable& a, const DistanceTable& b, std::span<const int> truth,
                         double step) {
  const DistanceTable pair[] = {a, b};
  check_aligned(pair);
  check_truth(a, truth);
  GridResult res;
  res.alphas = weight_grid(step);
  const auto va = a.values.values();
  const auto vb = b.values.values();
  std::vector<double> fused(va.size());
  std::size_t best_correct = 0;
  for (std::size_t i = 0; i < res.alphas.size(); ++i) {
    const double alpha = res.alphas[i];
    const double rest = 1.0 - alpha;
    for (std::size_t k = 0; k < fused.size(); ++k) fused[k] = alpha * va[k] + rest * vb[k];
    const std::size_t correct = correct_on(a, fused, truth);
    res.correct.push_back(correct);
    res.rates.push_back(as_rate(correct, truth.size()));
    if (i == 0 || correct > best_correct) {
      best_correct = correct;
      res.best_alpha = alpha;
    }
  }
  res.best_rate = as_rate(best_correct, truth.size());
  res.best_in_simplex = true;
  return res;
}

GridResult grid_search_3(const DistanceTable& a, const DistanceTable& b, const DistanceTable& c,
                         std::span<const int> truth, double step) {
  const DistanceTable triple[] = {a, b, c};
  check_aligned(triple);
  check_truth(a, truth);
  GridResult res;
  res.alphas = weight_grid(step);
  res.betas = res.alphas;
  const auto va = a.values.values();
  const auto vb = b.values.values();
  const auto vc = c.values.values();
  std::vector<double> fused(va.size());
  std::size_t best_correct = 0;
  bool first = true;
  for (double alpha : res.alphas) {
    for (double beta : res.betas) {
      const double gamma = 1.0 - alpha - beta;
      for (std::size_t k = 0; k < fused.size(); ++k) {
        fused[k] = alpha * va[k] + beta * vb[k] + gamma * vc[k];
      }
      const std::size_t correct = correct_on(a, fused, truth);
      res.correct.push_back(correct);
      res.rates.push_back(as_rate(correct, truth.size()));
      if (first || correct > best_correct) {
        first = false;
        best_correct = correct;
        res.best_alpha = alpha;
        res.best_beta = beta;
      }
    }
  }
  res.best_rate = as_rate(best_correct, truth.size());
  res.best_in_simplex = res.best_alpha + res.best_beta <= 1.0 + 1e-12;
  return res;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double to_double(std::string_view s, const std::filesystem::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::NonNumericCell, path.string() + ": non-numeric cell '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void export_contour(const GridResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  if (!result.three_way()) {
    out << "alpha,rate\n";
    for (std::size_t i = 0; i < result.alphas.size(); ++i) {
      out << fmt("%.4g", result.alphas[i]) << ',' << format_rate(result.rates[i]) << '\n';
    }
  } else {
    out << "alpha\\beta";
    for (double b : result.betas) out << ',' << fmt("%.4g", b);
    out << '\n';
    for (std::size_t i = 0; i < result.alphas.size(); ++i) {
      out << fmt("%.4g", result.alphas[i]);
      for (std::size_t j = 0; j < result.betas.size(); ++j) out << ',' << format_rate(result.rate(i, j));
      out << '\n';
    }
  }
  out << "# best alpha=" << fmt("%.4g", result.best_alpha) << " beta=" << fmt("%.4g", result.best_beta)
      << " rate=" << format_rate(result.best_rate) << " simplex=" << (result.best_in_simplex ? 1 : 0)
      << '\n';
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

GridResult import_contour(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IoFailure, "empty contour file " + path.string());
  GridResult res;
  const auto header = cells_of(line);
  const bool three = !header.empty() && header[0] == "alpha\\beta";
  if (three) {
    for (std::size_t j = 1; j < header.size(); ++j) res.betas.push_back(to_double(header[j], path));
  } else if (header != std::vector<std::string>{"alpha", "rate"}) {
    fail(ErrorCode::UnsupportedFormat, path.string() + ": unrecognised contour header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# best", 0) == 0) {
      std::istringstream ss(line.substr(7));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "alpha") res.best_alpha = to_double(val, path);
        if (key == "beta") res.best_beta = to_double(val, path);
        if (key == "rate") res.best_rate = to_double(val, path);
        if (key == "simplex") res.best_in_simplex = val == "1";
      }
      continue;
    }
    const auto cells = cells_of(line);
    const std::size_t expect = three ? res.betas.size() + 1 : 2;
    if (cells.size() != expect) fail(ErrorCode::RaggedRows, path.string() + ": ragged contour row");
    res.alphas.push_back(to_double(cells[0], path));
    for (std::size_t j = 1; j < cells.size(); ++j) res.rates.push_back(to_double(cells[j], path));
  }
  return res;
}

}  // namespace msface
