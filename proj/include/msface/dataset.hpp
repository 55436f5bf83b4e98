#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "msface/imaging.hpp"

namespace msface {

enum class Sensor : std::uint8_t { VIS = 0, NIR = 1, TH = 2 };
enum class Illumination : std::uint8_t { NA = 0, IR = 1, AR = 2 };

inline constexpr std::array<Sensor, 3> kSensors{Sensor::VIS, Sensor::NIR, Sensor::TH};
inline constexpr std::array<Illumination, 3> kIlluminations{Illumination::NA, Illumination::IR,
                                                             Illumination::AR};

inline constexpr int kStrictPersons = 41;
inline constexpr int kRelaxedPersons = 99;
inline constexpr int kSessions = 4;
inline constexpr int kSamples = 5;

std::string_view sensor_name(Sensor s) noexcept;              // "VIS", "NIR", "TH"
std::string_view illumination_name(Illumination i) noexcept;  // "NA", "IR", "AR"
char sensor_letter(Sensor s) noexcept;                        // 'C', 'I', 'T'
Sensor parse_sensor(std::string_view name);
Illumination parse_illumination(std::string_view name);

// One capture in the database, addressed by its 8-character file code
// "PPSsLIIn": person, session, sensor letter, illumination, sample.
struct SampleKey {
  int person = 1;
  int session = 1;
  Sensor sensor = Sensor::VIS;
  Illumination illumination = Illumination::NA;
  int sample = 1;

  auto operator<=>(const SampleKey&) const = default;
};

SampleKey parse_sample_code(std::string_view code, bool strict = true);
std::string format_sample_code(const SampleKey& key);

// Sensor-independent probe label, e.g. "07S3NA1". Identical across sensors
// so that per-sensor distance tables line up row by row.
std::string probe_label(const SampleKey& key);

struct CatalogEntry {
  SampleKey key;
  std::filesystem::path path;
};

class Catalog {
 public:
  Catalog() = default;
  // Entries are sorted by code; throws DuplicateKey on a repeated code.
  Catalog(std::vector<CatalogEntry> entries, int person_count);

  const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  int person_count() const noexcept { return person_count_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const CatalogEntry* find(const SampleKey& key) const;

  // Keys of the full person_count x 4 x 3 x 3 x 5 grid absent from the catalog.
  std::vector<SampleKey> missing() const;
  bool complete() const { return missing().empty(); }

 private:
  std::vector<CatalogEntry> entries_;
  int person_count_ = 0;
};

// Collects every file below root whose stem parses as a sample code and whose
// extension is .pgm, .bmp or .csv. person_count is the highest person id found
// (or 41 in strict mode when nothing is found) unless expected_persons is set.
Catalog scan_dataset(const std::filesystem::path& root, bool strict = true,
                     std::optional<int> expected_persons = std::nullopt);

// Columns: code, person, session, sensor, illumination, sample, path. Paths
// are written relative to base when it is non-empty.
void export_catalog_csv(const Catalog& catalog, const std::filesystem::path& path,
                        const std::filesystem::path& base = {});

struct SplitSpec {
  std::set<int> train_sessions{1, 2};
  int test_session = 3;
  Illumination train_illumination = Illumination::NA;
  Illumination test_illumination = Illumination::NA;
  Sensor sensor = Sensor::VIS;

  // Throws InvalidSplit when the test session is also a training session or a
  // session id is outside 1..4.
  void validate() const;
};

struct LabeledSample {
  int person = 0;
  const CatalogEntry* entry = nullptr;
};

struct Split {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  // Training images per person (F). Zero when persons differ.
  int gallery_size = 0;
};

// Entries are returned in catalog (code) order. Throws EmptySplit if a person
// present for the sensor ends up with no training or no test images.
Split make_split(const Catalog& catalog, const SplitSpec& spec);

struct IlluminationEffect {
  double gain = 1.0;
  double offset = 0.0;
  double noise = 0.0;
};

struct FreqPos {
  std::size_t u = 0;  // horizontal frequency
  std::size_t v = 0;  // vertical frequency
  auto operator<=>(const FreqPos&) const = default;
};

enum class ImageFormat { Pgm, Bmp };

struct SynthParams {
  int person_count = 10;
  int sessions = kSessions;
  int samples = kSamples;
  std::size_t width = kCanonicalWidth;
  std::size_t height = kCanonicalHeight;
  std::array<double, 3> within_noise{0.02, 0.02, 0.02};  // per sensor
  // effect[sensor][illumination]; identity unless set
  std::array<std::array<IlluminationEffect, 3>, 3> illumination{};
  std::vector<FreqPos> planted_band;
  // Coefficient amplitude carrying identity inside the planted band.
  double planted_amplitude = 2.0;
  // Samples of sessions 3 and 4 that are replaced by uniform noise, per
  // sensor. Disjoint sets across sensors give complementary classifiers.
  std::array<std::set<int>, 3> occluded_samples{};
  ImageFormat image_format = ImageFormat::Pgm;
  std::uint64_t seed = 1;

  // Throws BadConfig on negative noise scales, images under 8x8 or bad counts.
  void validate() const;
};

// Default illumination behaviour: VIS darkens under IR, NIR darkens under NA
// and AR, TH is unaffected.
std::array<std::array<IlluminationEffect, 3>, 3> default_illumination_effects();
// Default effects with VIS under IR replaced by a full blackout (gain 0).
std::array<std::array<IlluminationEffect, 3>, 3> vis_ir_blackout_effects();
// Identity for every sensor and illumination.
std::array<std::array<IlluminationEffect, 3>, 3> identity_illumination_effects();

// VIS and NIR samples as intensities in [0,1] before 8-bit quantization.
Image synthesize_image(const SynthParams& params, const SampleKey& key);
// TH samples as a temperature matrix in degrees Celsius.
Matrix synthesize_temperatures(const SynthParams& params, const SampleKey& key);

// Relative path "<PP>/S<s>/<code>.<ext>" of a generated sample.
std::filesystem::path synthetic_relative_path(const SynthParams& params, const SampleKey& key);

// Writes the full grid under out and returns the resulting catalog.
Catalog generate_synthetic(const SynthParams& params, const std::filesystem::path& out);

}  // namespace msface
