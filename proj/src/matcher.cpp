#include "msface/matcher.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "msface/error.hpp"

namespace msface {

double fractional_distance(std::span<const double> x, std::span<const double> y, double p) {
  if (x.size() != y.size()) {
    fail(ErrorCode::DimensionMismatch, "feature dimensions differ: " + std::to_string(x.size()) +
                                           " vs " + std::to_string(y.size()));
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    fail(ErrorCode::BadExponent, "distance exponent must be positive, got " + std::to_string(p));
  }
  double sum = 0.0;
  if (p == 0.5) {
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::sqrt(std::abs(x[i] - y[i]));
    return sum * sum;
  }
  if (p == 1.0) {
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - y[i]);
    return sum;
  }
  if (p == 2.0) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      sum += d * d;
    }
    return std::sqrt(sum);
  }
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::pow(std::abs(x[i] - y[i]), p);
  return std::pow(sum, 1.0 / p);
}

void Gallery::add(int person, FeatureVector features) {
  if (!templates_.empty() && features.dimension() != dimension()) {
    fail(ErrorCode::DimensionMismatch, "template dimension " + std::to_string(features.dimension()) +
                                           " differs from gallery dimension " +
                                           std::to_string(dimension()));
  }
  int index = 0;
  for (const auto& l : labels_) index += l.person == person ? 1 : 0;
  labels_.push_back({person, index});
  templates_.push_back(std::move(features));
}

DistanceTable score_probes(std::span<const FeatureVector> probes,
                           std::span<const std::string> probe_labels, const Gallery& gallery,
                           double p) {
  if (probes.size() != probe_labels.size()) {
    fail(ErrorCode::LengthMismatch, "probe and label counts differ");
  }
  DistanceTable table;
  table.probes.assign(probe_labels.begin(), probe_labels.end());
  table.templates = gallery.labels();
  table.values = Matrix(gallery.size(), probes.size());
  for (std::size_t r = 0; r < probes.size(); ++r) {
    for (std::size_t c = 0; c < gallery.size(); ++c) {
      table.values(c, r) = fractional_distance(probes[r].values, gallery.templates()[c].values, p);
    }
  }
  return table;
}

std::vector<int> identify(const DistanceTable& table) {
  if (table.rows() == 0 || table.cols() == 0) fail(ErrorCode::Empty, "distance table is empty");
  std::vector<int> out(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < table.cols(); ++c) {
      const double d = table.at(r, c);
      const double bd = table.at(r, best);
      const auto& l = table.templates[c];
      const auto& bl = table.templates[best];
      if (d < bd || (d == bd && (l.person < bl.person || (l.person == bl.person && l.index < bl.index)))) {
        best = c;
      }
    }
    out[r] = table.templates[best].person;
  }
  return out;
}

std::size_t count_correct(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    fail(ErrorCode::LengthMismatch, "prediction and truth counts differ: " +
                                        std::to_string(predicted.size()) + " vs " +
                                        std::to_string(truth.size()));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return correct;
}

double identification_rate(std::span<const int> predicted, std::span<const int> truth) {
  const std::size_t correct = count_correct(predicted, truth);
  if (truth.empty()) fail(ErrorCode::Empty, "no probes to score");
  return std::round(10000.0 * static_cast<double>(correct) / static_cast<double>(truth.size())) / 100.0;
}

std::string format_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::NonNumericCell, where + ": non-numeric cell '" + s + "'");
  }
  return v;
}

}  // namespace

void save_distance_table(const DistanceTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out << "probe";
  for (const auto& t : table.templates) out << ',' << t.person << ':' << t.index;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.probes[r];
    for (std::size_t c = 0; c < table.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", table.at(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

DistanceTable load_distance_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IoFailure, "empty distance table " + where);
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "probe") {
    fail(ErrorCode::UnsupportedFormat, where + ": header must start with 'probe'");
  }
  DistanceTable table;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto colon = header[i].find(':');
    if (colon == std::string::npos) {
      fail(ErrorCode::UnsupportedFormat, where + ": bad template label '" + header[i] + "'");
    }
    table.templates.push_back({parse_number<int>(header[i].substr(0, colon), where),
                               parse_number<int>(header[i].substr(colon + 1), where)});
  }
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      fail(ErrorCode::RaggedRows, where + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " cells");
    }
    table.probes.push_back(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) values.push_back(parse_number<double>(cells[i], where));
  }
  table.values = Matrix(table.templates.size(), table.probes.size(), std::move(values));
  return table;
}

void save_truth(std::span<const std::string> probes, std::span<const int> persons,
                const std::filesystem::path& path) {
  if (probes.size() != persons.size()) fail(ErrorCode::LengthMismatch, "probe and truth counts differ");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out << "probe,person\n";
  for (std::size_t i = 0; i < probes.size(); ++i) out << probes[i] << ',' << persons[i] << '\n';
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

std::vector<int> load_truth(const std::filesystem::path& path, const DistanceTable& table) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::map<std::string, int> truth;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) fail(ErrorCode::RaggedRows, path.string() + ": expected probe,person");
    truth[cells[0]] = parse_number<int>(cells[1], path.string());
  }
  std::vector<int> out;
  out.reserve(table.rows());
  for (const auto& probe : table.probes) {
    auto it = truth.find(probe);
    if (it == truth.end()) fail(ErrorCode::LabelMismatch, "no truth label for probe " + probe);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace msface
