#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "msface/features.hpp"
#include "msface/matrix.hpp"

namespace msface {

inline constexpr double kDefaultExponent = 0.5;

// (sum_i |x_i - y_i|^p)^(1/p)
double fractional_distance(std::span<const double> x, std::span<const double> y,
                           double p = kDefaultExponent);

struct TemplateLabel {
  int person = 0;
  int index = 0;  // position among this person's templates
  friend bool operator==(const TemplateLabel&, const TemplateLabel&) = default;
};

class Gallery {
 public:
  Gallery() = default;
  void add(int person, FeatureVector features);

  const std::vector<FeatureVector>& templates() const noexcept { return templates_; }
  const std::vector<TemplateLabel>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return templates_.size(); }
  std::size_t dimension() const noexcept { return templates_.empty() ? 0 : templates_[0].dimension(); }

 private:
  std::vector<FeatureVector> templates_;
  std::vector<TemplateLabel> labels_;
};

// Probe x template distances. values(column, row) with row = probe and
// column = template.
struct DistanceTable {
  std::vector<std::string> probes;
  std::vector<TemplateLabel> templates;
  Matrix values;

  std::size_t rows() const noexcept { return probes.size(); }
  std::size_t cols() const noexcept { return templates.size(); }
  double at(std::size_t probe, std::size_t tmpl) const { return values(tmpl, probe); }
  bool aligned_with(const DistanceTable& other) const {
    return probes == other.probes && templates == other.templates;
  }
};

DistanceTable score_probes(std::span<const FeatureVector> probes,
                           std::span<const std::string> probe_labels, const Gallery& gallery,
                           double p = kDefaultExponent);

// Nearest template per probe; ties go to the lower person id, then the lower
// template index.
std::vector<int> identify(const DistanceTable& table);

// Percentage of matches, rounded to two decimals.
double identification_rate(std::span<const int> predicted, std::span<const int> truth);
std::size_t count_correct(std::span<const int> predicted, std::span<const int> truth);

// CSV with header "probe,<person>:<index>,..." and one row per probe; values
// are written with 17 significant digits so a round trip is exact.
void save_distance_table(const DistanceTable& table, const std::filesystem::path& path);
DistanceTable load_distance_table(const std::filesystem::path& path);

// Truth labels: "probe,person".
void save_truth(std::span<const std::string> probes, std::span<const int> persons,
                const std::filesystem::path& path);
std::vector<int> load_truth(const std::filesystem::path& path, const DistanceTable& table);

std::string format_rate(double rate);  // "89.76"

}  // namespace msface
