#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msface/dataset.hpp"
#include "msface/transform.hpp"

namespace msface {

// Per-frequency statistics over a training set of DCT coefficient matrices.
// All arrays are laid out on the coefficient grid (index v * width + u).
struct FrequencyStats {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> persons;          // ascending person ids
  std::vector<int> images_per_person;
  std::vector<double> mean;          // m
  std::vector<std::vector<double>> person_mean;      // m_p, indexed like persons
  std::vector<std::vector<double>> person_variance;  // sigma_p^2 (divisor F_p)
  std::vector<double> variance;      // sigma^2 over the whole training set
  std::vector<double> intra;         // sum over persons of sigma_p^2
  std::vector<double> inter;         // equal to variance

  std::size_t person_count() const noexcept { return persons.size(); }
};

struct TrainingSample {
  int person = 0;
  const CoefMatrix* coefs = nullptr;
};

// Population variances throughout. The global mean is formed as the
// count-weighted mean of the person means, which equals the plain mean of all
// samples and keeps the balanced-data identity m == (1/P) sum m_p exact.
FrequencyStats compute_statistics(std::span<const TrainingSample> train);
FrequencyStats compute_statistics(std::span<const std::pair<int, CoefMatrix>> train);

enum class FisherVariant {
  VarianceRatio,  // inter / (intra + eps)
  Literal,        // |m_intra - m_inter| / sqrt(intra + inter + eps)
};

inline constexpr double kFisherEpsilon = 1e-12;

std::string_view to_string(FisherVariant v) noexcept;
FisherVariant parse_fisher_variant(std::string_view name);

struct DiscriminabilityMap {
  std::size_t width = 0;
  std::size_t height = 0;
  FisherVariant variant = FisherVariant::VarianceRatio;
  std::vector<double> score;  // index v * width + u

  double at(std::size_t u, std::size_t v) const { return score[v * width + u]; }
};

DiscriminabilityMap fisher_map(const FrequencyStats& stats,
                               FisherVariant variant = FisherVariant::VarianceRatio);

struct SelectionMask {
  enum class Mode { Square, TopK };

  std::size_t width = 0;   // coefficient grid the mask applies to
  std::size_t height = 0;
  Mode mode = Mode::Square;
  std::size_t size = 0;    // N for square, K for top-K
  std::vector<FreqPos> positions;

  std::size_t dimension() const noexcept { return positions.size(); }
  std::string descriptor() const;  // "square:20" or "topk:64"
  bool contains(FreqPos p) const;
};

// N x N upper-left block in row-major order (v outer, u inner).
SelectionMask square_mask(std::size_t n, std::size_t width, std::size_t height);
// K highest scores; ties go to the lower u + v, then the lower u.
SelectionMask top_k_mask(const DiscriminabilityMap& map, std::size_t k);

struct FeatureVector {
  std::vector<double> values;
  std::string provenance;  // mask descriptor

  std::size_t dimension() const noexcept { return values.size(); }
};

FeatureVector extract_features(const CoefMatrix& coefs, const SelectionMask& mask);

// CSV exports for inspection: "u,v,score" and "rank,u,v".
void export_map_csv(const DiscriminabilityMap& map, const std::filesystem::path& path);
void export_mask_csv(const SelectionMask& mask, const std::filesystem::path& path);

}  // namespace msface
