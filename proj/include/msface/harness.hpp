#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "msface/dataset.hpp"
#include "msface/features.hpp"
#include "msface/fusion.hpp"
#include "msface/matcher.hpp"

namespace msface {

using Logger = std::function<void(const std::string&)>;

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

// Plain-text "key = value" configuration. Only known keys are accepted, and
// every error message names the offending key.
class Config {
 public:
  Config();

  static const std::vector<ConfigKey>& known_keys();
  static bool is_known(std::string_view key);

  void set(std::string_view key, std::string_view value);
  void load(const std::filesystem::path& path);
  const std::string& get(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

enum class MaskMode { Square, TopK };
enum class FusionRule { Fixed, Grid };

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path out;
  bool strict = false;
  std::optional<int> expected_persons;

  std::vector<Sensor> sensors;
  std::set<int> train_sessions;
  std::vector<int> test_sessions;
  std::vector<Illumination> train_illuminations;
  std::vector<Illumination> test_illuminations;
  std::vector<bool> normalization;  // Table 3 "Normalization NO/YES" axis
  double saturate_fraction = 0.01;
  std::size_t resize_width = kCanonicalWidth;
  std::size_t resize_height = kCanonicalHeight;

  MaskMode mask = MaskMode::Square;
  std::size_t window = 20;
  std::size_t top_k = 400;
  FisherVariant variant = FisherVariant::VarianceRatio;
  std::size_t n_min = 1;
  std::size_t n_max = 30;
  double p = kDefaultExponent;

  std::vector<std::vector<Sensor>> combinations;
  FusionRule fusion = FusionRule::Fixed;
  double grid_step = 0.01;
  bool score_normalization = false;
  bool save_tables = false;
  bool contours = true;

  std::filesystem::path table_a, table_b, table_c, truth;

  SynthParams synth;

  // Throws BadConfig naming the key whose value is invalid.
  static ExperimentConfig from(const Config& config);
};

// One train/test pipeline run.
struct Cell {
  Sensor sensor = Sensor::VIS;
  bool normalize = false;
  Illumination train_illumination = Illumination::NA;
  Illumination test_illumination = Illumination::NA;
  int test_session = 3;
};

std::string cell_tag(const Cell& cell);  // e.g. "VIS_norm-no_NA-IR_S3"

struct CellResult {
  DistanceTable table;
  std::vector<int> truth;
  std::size_t coefficients = 0;
  double rate = 0.0;
};

struct ResultRow {
  std::string sensors;  // "VIS" or "VIS&NIR&TH"
  bool normalized = false;
  Illumination train_illumination = Illumination::NA;
  std::string train_sessions;  // "1&2"
  Illumination test_illumination = Illumination::NA;
  int test_session = 3;
  std::size_t coefficients = 0;
  std::optional<double> rate;          // empty when the cell could not be run
  std::optional<double> trained_rate;  // grid-searched, test-optimized
  std::optional<double> best_alpha;
  std::optional<double> best_beta;
  std::optional<bool> best_in_simplex;
};

// Loads, preprocesses and transforms catalog images on demand, memoizing the
// retained coefficient block per (file, normalization).
class Pipeline {
 public:
  Pipeline(ExperimentConfig config, Catalog catalog);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const ExperimentConfig& config() const noexcept { return config_; }
  const Catalog& catalog() const noexcept { return catalog_; }

  // Coefficients of one image after load, resize, optional normalization and
  // DCT, cropped to the retained block.
  const CoefMatrix& coefficients(const CatalogEntry& entry, bool normalize);

  // Builds the mask from training data (square window or top-K) and scores
  // every test probe against the gallery.
  CellResult evaluate(const Cell& cell);
  CellResult evaluate(const Cell& cell, MaskMode mode, std::size_t size);

  // (N, rate) for N in [n_min, n_max]; top-K mode uses K = N * N.
  std::vector<std::pair<std::size_t, double>> sweep(const Cell& cell, std::size_t n_min,
                                                    std::size_t n_max);

  void clear_cache();

 private:
  struct Prepared;
  Prepared prepare(const Cell& cell);

  ExperimentConfig config_;
  Catalog catalog_;
  std::size_t keep_width_;
  std::size_t keep_height_;
  std::map<std::pair<std::string, bool>, CoefMatrix> cache_;
};

std::vector<std::pair<std::size_t, double>> sweep_window_sizes(Pipeline& pipeline, const Cell& cell,
                                                               std::size_t n_min, std::size_t n_max);
std::vector<ResultRow> run_mismatch_matrix(Pipeline& pipeline, const Logger& log = {});
std::vector<ResultRow> run_fusion_matrix(Pipeline& pipeline, const Logger& log = {});

// Table-shaped writers.
void write_result_rows(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
void write_mismatch_table(const std::vector<ResultRow>& rows, const ExperimentConfig& config,
                          const std::filesystem::path& path);
void write_fusion_table(const std::vector<ResultRow>& rows, const ExperimentConfig& config,
                        const std::filesystem::path& path);

std::uint64_t fnv1a64_file(const std::filesystem::path& path);

// Runs one CLI subcommand (synth, scan, extract, sweep, mismatch, fuse, grid)
// end to end, writing its CSVs and run_manifest.txt under the output
// directory. Progress and warnings go to log.
void run_command(std::string_view command, const Config& config, const Logger& log = {});

const std::vector<std::string_view>& command_names();

}  // namespace msface
