#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "msface/matcher.hpp"

namespace msface {

// Entrywise mean of aligned tables.
DistanceTable fuse_fixed(std::span<const DistanceTable> tables);
// Entrywise sum of weights[i] * tables[i].
DistanceTable fuse_weighted(std::span<const DistanceTable> tables, std::span<const double> weights);

// Per-table min-max mapping of all entries onto [0,1]; a constant table maps
// to zeros.
DistanceTable normalize_scores(const DistanceTable& table);

// Identification-rate surface over the inclusive weight grid {0, step, ..., 1}.
// Two tables: rates[i] at alpha_i, the second table weighted 1 - alpha.
// Three tables: rates[i * n + j] at (alpha_i, beta_j), the third table
// weighted 1 - alpha - beta, which may be negative.
struct GridResult {
  std::vector<double> alphas;
  std::vector<double> betas;  // empty for a two-way search
  std::vector<double> rates;
  std::vector<std::size_t> correct;
  double best_alpha = 0.0;
  double best_beta = 0.0;
  double best_rate = 0.0;
  bool best_in_simplex = true;  // alpha + beta <= 1

  bool three_way() const noexcept { return !betas.empty(); }
  double rate(std::size_t ia, std::size_t ib = 0) const {
    return rates[ia * (betas.empty() ? 1 : betas.size()) + ib];
  }
};

// Grid points i / round(1 / step), so both endpoints are exact.
std::vector<double> weight_grid(double step);

GridResult grid_search_2(const DistanceTable& a, const DistanceTable& b, std::span<const int> truth,
                         double step = 0.01);
GridResult grid_search_3(const DistanceTable& a, const DistanceTable& b, const DistanceTable& c,
                         std::span<const int> truth, double step = 0.01);

// Two-way: "alpha,rate" rows. Three-way: header "alpha\beta,<betas...>",
// one row per alpha. Both end with a "# best alpha=... beta=... rate=...
// simplex=..." line.
void export_contour(const GridResult& result, const std::filesystem::path& path);
GridResult import_contour(const std::filesystem::path& path);

}  // namespace msface
