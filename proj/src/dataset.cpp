#include "msface/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "msface/error.hpp"
#include "random.hpp"

namespace msface {

namespace fs = std::filesystem;

std::string_view sensor_name(Sensor s) noexcept {
  switch (s) {
    case Sensor::VIS: return "VIS";
    case Sensor::NIR: return "NIR";
    case Sensor::TH: return "TH";
  }
  return "?";
}

std::string_view illumination_name(Illumination i) noexcept {
  switch (i) {
    case Illumination::NA: return "NA";
    case Illumination::IR: return "IR";
    case Illumination::AR: return "AR";
  }
  return "?";
}

char sensor_letter(Sensor s) noexcept {
  switch (s) {
    case Sensor::VIS: return 'C';
    case Sensor::NIR: return 'I';
    case Sensor::TH: return 'T';
  }
  return '?';
}

Sensor parse_sensor(std::string_view name) {
  if (name == "VIS" || name == "C") return Sensor::VIS;
  if (name == "NIR" || name == "I") return Sensor::NIR;
  if (name == "TH" || name == "T") return Sensor::TH;
  fail(ErrorCode::InvalidArgument, "unknown sensor '" + std::string(name) + "'");
}

Illumination parse_illumination(std::string_view name) {
  if (name == "NA") return Illumination::NA;
  if (name == "IR") return Illumination::IR;
  if (name == "AR") return Illumination::AR;
  fail(ErrorCode::InvalidArgument, "unknown illumination '" + std::string(name) + "'");
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

SampleKey parse_sample_code(std::string_view code, bool strict) {
  const auto malformed = [&](const char* why) {
    fail(ErrorCode::MalformedCode, "malformed sample code '" + std::string(code) + "': " + why);
  };
  if (code.size() != 8) malformed("expected 8 characters");
  if (!is_digit(code[0]) || !is_digit(code[1])) malformed("person id must be two digits");
  if (code[2] != 'S' || !is_digit(code[3])) malformed("session must be S<digit>");
  if (!is_digit(code[7])) malformed("sample must be a digit");

  SampleKey key;
  key.person = (code[0] - '0') * 10 + (code[1] - '0');
  key.session = code[3] - '0';
  switch (code[4]) {
    case 'C': key.sensor = Sensor::VIS; break;
    case 'I': key.sensor = Sensor::NIR; break;
    case 'T': key.sensor = Sensor::TH; break;
    default: malformed("sensor letter must be C, I or T");
  }
  const std::string_view illum = code.substr(5, 2);
  if (illum == "NA") {
    key.illumination = Illumination::NA;
  } else if (illum == "IR") {
    key.illumination = Illumination::IR;
  } else if (illum == "AR") {
    key.illumination = Illumination::AR;
  } else {
    malformed("illumination must be NA, IR or AR");
  }
  key.sample = code[7] - '0';

  const int max_person = strict ? kStrictPersons : kRelaxedPersons;
  if (key.person < 1 || key.person > max_person || key.session < 1 || key.session > kSessions ||
      key.sample < 1 || key.sample > kSamples) {
    fail(ErrorCode::OutOfRange, "sample code '" + std::string(code) + "' is out of range");
  }
  return key;
}

std::string format_sample_code(const SampleKey& key) {
  std::string code(8, '0');
  code[0] = static_cast<char>('0' + key.person / 10);
  code[1] = static_cast<char>('0' + key.person % 10);
  code[2] = 'S';
  code[3] = static_cast<char>('0' + key.session);
  code[4] = sensor_letter(key.sensor);
  const std::string_view illum = illumination_name(key.illumination);
  code[5] = illum[0];
  code[6] = illum[1];
  code[7] = static_cast<char>('0' + key.sample);
  return code;
}

std::string probe_label(const SampleKey& key) {
  std::string code = format_sample_code(key);
  code.erase(4, 1);
  return code;
}

Catalog::Catalog(std::vector<CatalogEntry> entries, int person_count)
    : entries_(std::move(entries)), person_count_(person_count) {
  std::sort(entries_.begin(), entries_.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
    const std::string ca = format_sample_code(a.key);
    const std::string cb = format_sample_code(b.key);
    return ca != cb ? ca < cb : a.path < b.path;
  });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].key == entries_[i - 1].key) {
      fail(ErrorCode::DuplicateKey, "duplicate sample code " + format_sample_code(entries_[i].key) +
                                        ": " + entries_[i - 1].path.string() + " and " +
                                        entries_[i].path.string());
    }
  }
}

const CatalogEntry* Catalog::find(const SampleKey& key) const {
  const std::string code = format_sample_code(key);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), code,
                             [](const CatalogEntry& e, const std::string& c) {
                               return format_sample_code(e.key) < c;
                             });
  if (it != entries_.end() && it->key == key) return &*it;
  return nullptr;
}

std::vector<SampleKey> Catalog::missing() const {
  std::vector<SampleKey> out;
  for (int person = 1; person <= person_count_; ++person) {
    for (int session = 1; session <= kSessions; ++session) {
      for (Sensor sensor : {Sensor::VIS, Sensor::NIR, Sensor::TH}) {
        for (Illumination illum : kIlluminations) {
          for (int sample = 1; sample <= kSamples; ++sample) {
            const SampleKey key{person, session, sensor, illum, sample};
            if (find(key) == nullptr) out.push_back(key);
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const SampleKey& a, const SampleKey& b) {
    return format_sample_code(a) < format_sample_code(b);
  });
  return out;
}

Catalog scan_dataset(const fs::path& root, bool strict, std::optional<int> expected_persons) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorCode::IoFailure, "dataset root is not a readable directory: " + root.string());
  }
  std::vector<CatalogEntry> entries;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot read " + root.string() + ": " + ec.message());
  for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) fail(ErrorCode::IoFailure, "directory traversal failed: " + ec.message());
    if (!it->is_regular_file(ec)) continue;
    std::string ext = it->path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext != ".pgm" && ext != ".bmp" && ext != ".csv") continue;
    const std::string stem = it->path().stem().string();
    try {
      entries.push_back({parse_sample_code(stem, strict), it->path()});
    } catch (const Error&) {
      // Files that are not sample codes are not part of the database.
    }
  }
  int persons = 0;
  for (const auto& e : entries) persons = std::max(persons, e.key.person);
  if (expected_persons) {
    persons = *expected_persons;
  } else if (entries.empty() && strict) {
    persons = kStrictPersons;
  }
  return Catalog(std::move(entries), persons);
}

void export_catalog_csv(const Catalog& catalog, const fs::path& path, const fs::path& base) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out << "code,person,session,sensor,illumination,sample,path\n";
  for (const auto& e : catalog.entries()) {
    out << format_sample_code(e.key) << ',' << e.key.person << ',' << e.key.session << ','
        << sensor_name(e.key.sensor) << ',' << illumination_name(e.key.illumination) << ','
        << e.key.sample << ','
        << (base.empty() ? e.path : e.path.lexically_relative(base)).generic_string() << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

void SplitSpec::validate() const {
  if (train_sessions.empty()) fail(ErrorCode::InvalidSplit, "no training sessions");
  for (int s : train_sessions) {
    if (s < 1 || s > kSessions) fail(ErrorCode::InvalidSplit, "training session out of range");
  }
  if (test_session < 1 || test_session > kSessions) {
    fail(ErrorCode::InvalidSplit, "test session out of range");
  }
  if (train_sessions.contains(test_session)) {
    fail(ErrorCode::InvalidSplit,
         "test session " + std::to_string(test_session) + " is also a training session");
  }
}

Split make_split(const Catalog& catalog, const SplitSpec& spec) {
  spec.validate();
  Split split;
  std::map<int, std::pair<int, int>> counts;  // person -> (train, test)
  for (const auto& e : catalog.entries()) {
    if (e.key.sensor != spec.sensor) continue;
    counts.try_emplace(e.key.person, 0, 0);
    if (spec.train_sessions.contains(e.key.session) &&
        e.key.illumination == spec.train_illumination) {
      split.train.push_back({e.key.person, &e});
      ++counts[e.key.person].first;
    } else if (e.key.session == spec.test_session &&
               e.key.illumination == spec.test_illumination) {
      split.test.push_back({e.key.person, &e});
      ++counts[e.key.person].second;
    }
  }
  if (counts.empty()) {
    fail(ErrorCode::EmptySplit,
         "catalog has no " + std::string(sensor_name(spec.sensor)) + " samples");
  }
  int gallery = -1;
  for (const auto& [person, c] : counts) {
    if (c.first == 0 || c.second == 0) {
      fail(ErrorCode::EmptySplit, "person " + std::to_string(person) + " has " +
                                      std::to_string(c.first) + " training and " +
                                      std::to_string(c.second) + " test images");
    }
    gallery = gallery < 0 || gallery == c.first ? c.first : 0;
  }
  split.gallery_size = gallery;
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthParams::validate() const {
  const auto bad = [](const std::string& what) { fail(ErrorCode::BadConfig, what); };
  if (person_count < 1 || person_count > kRelaxedPersons) bad("persons must lie in 1..99");
  if (sessions < 1 || sessions > kSessions) bad("sessions must lie in 1..4");
  if (samples < 1 || samples > kSamples) bad("samples must lie in 1..5");
  if (width < 8 || height < 8) bad("synthetic images must be at least 8x8");
  for (double n : within_noise) {
    if (!(n >= 0.0)) bad("within-class noise must be >= 0");
  }
  for (const auto& per_sensor : illumination) {
    for (const auto& e : per_sensor) {
      if (!(e.noise >= 0.0)) bad("illumination noise must be >= 0");
      if (!std::isfinite(e.gain) || !std::isfinite(e.offset)) bad("illumination effect must be finite");
    }
  }
  for (const auto& p : planted_band) {
    if (p.u >= width || p.v >= height) bad("planted frequency outside the image grid");
  }
  for (const auto& set : occluded_samples) {
    for (int s : set) {
      if (s < 1 || s > kSamples) bad("occluded sample index must lie in 1..5");
    }
  }
}

std::array<std::array<IlluminationEffect, 3>, 3> identity_illumination_effects() { return {}; }

std::array<std::array<IlluminationEffect, 3>, 3> default_illumination_effects() {
  std::array<std::array<IlluminationEffect, 3>, 3> fx{};
  // [sensor][illumination], illumination order NA, IR, AR
  fx[0] = {IlluminationEffect{1.0, 0.0, 0.0}, IlluminationEffect{0.3, 0.0, 0.02},
           IlluminationEffect{0.9, 0.06, 0.0}};
  fx[1] = {IlluminationEffect{0.6, 0.05, 0.02}, IlluminationEffect{1.0, 0.0, 0.0},
           IlluminationEffect{0.7, 0.05, 0.01}};
  return fx;
}

std::array<std::array<IlluminationEffect, 3>, 3> vis_ir_blackout_effects() {
  auto fx = default_illumination_effects();
  fx[0][1] = IlluminationEffect{0.0, 0.0, 0.0};
  return fx;
}

namespace {

constexpr std::size_t kPatternBand = 16;
constexpr double kBaseLevel = 0.5;
constexpr double kPatternStd = 0.12;

enum class Stream : std::uint64_t { Pattern = 1, Common, Planted, Pixel, Occlusion };

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0, std::uint64_t d = 0,
                          std::uint64_t e = 0) {
  std::uint64_t h = detail::mix64(seed ^ 0x6d73666163650000ULL);
  for (std::uint64_t v : {static_cast<std::uint64_t>(stream), a, b, c, d, e}) {
    h = detail::mix64(h ^ (v + 0x9e3779b97f4a7c15ULL));
  }
  return h;
}

double basis_value(std::size_t n, std::size_t k, std::size_t m) {
  const double ck = k == 0 ? std::numbers::sqrt2 / 2.0 : 1.0;
  return ck * std::sqrt(2.0 / static_cast<double>(n)) *
         std::cos(static_cast<double>((2 * m + 1) * k) * std::numbers::pi /
                  (2.0 * static_cast<double>(n)));
}

// Image with the given DCT coefficients (all others zero), evaluated
// separably: one pass per distinct vertical frequency.
Matrix sparse_idct(const std::vector<std::pair<FreqPos, double>>& coefs, std::size_t w,
                   std::size_t h) {
  std::map<std::size_t, std::vector<double>> rows;  // v -> row profile over x
  for (const auto& [pos, c] : coefs) {
    auto& r = rows[pos.v];
    if (r.empty()) r.assign(w, 0.0);
    for (std::size_t x = 0; x < w; ++x) r[x] += c * basis_value(w, pos.u, x);
  }
  Matrix out(w, h);
  for (const auto& [v, r] : rows) {
    for (std::size_t y = 0; y < h; ++y) {
      const double bv = basis_value(h, v, y);
      for (std::size_t x = 0; x < w; ++x) out(x, y) += bv * r[x];
    }
  }
  return out;
}

// Smooth zero-mean pattern with low-frequency content, scaled to unit pixel
// standard deviation.
Matrix smooth_pattern(std::uint64_t seed, std::size_t w, std::size_t h) {
  detail::Rng rng(seed);
  std::vector<std::pair<FreqPos, double>> coefs;
  for (std::size_t v = 0; v < std::min(kPatternBand, h); ++v) {
    for (std::size_t u = 0; u < std::min(kPatternBand, w); ++u) {
      if (u == 0 && v == 0) continue;
      coefs.push_back({{u, v}, rng.normal() / (1.0 + static_cast<double>(u + v))});
    }
  }
  Matrix m = sparse_idct(coefs, w, h);
  double energy = 0.0;
  for (double x : m.values()) energy += x * x;
  const double sd = std::sqrt(energy / static_cast<double>(m.size()));
  if (sd > 0.0) {
    for (double& x : m.values()) x /= sd;
  }
  return m;
}

// Noise-free appearance of a person for one sensor, before illumination.
Matrix person_base(const SynthParams& p, int person, Sensor sensor) {
  const auto s = static_cast<std::uint64_t>(sensor);
  if (p.planted_band.empty()) {
    Matrix m = smooth_pattern(stream_seed(p.seed, Stream::Pattern, s, static_cast<std::uint64_t>(person)),
                              p.width, p.height);
    for (double& x : m.values()) x = kBaseLevel + kPatternStd * x;
    return m;
  }
  // Identity lives only in the planted frequencies; everything else is
  // shared by all persons.
  Matrix m = smooth_pattern(stream_seed(p.seed, Stream::Common, s), p.width, p.height);
  for (double& x : m.values()) x = kBaseLevel + kPatternStd * x;
  detail::Rng rng(stream_seed(p.seed, Stream::Planted, s, static_cast<std::uint64_t>(person)));
  std::vector<std::pair<FreqPos, double>> coefs;
  for (const auto& pos : p.planted_band) coefs.push_back({pos, p.planted_amplitude * rng.normal()});
  const Matrix identity = sparse_idct(coefs, p.width, p.height);
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] += identity.values()[i];
  return m;
}

Matrix render(const SynthParams& p, const SampleKey& key, const Matrix& base) {
  const auto s = static_cast<std::size_t>(key.sensor);
  const auto seed_of = [&](Stream stream) {
    return stream_seed(p.seed, stream, static_cast<std::uint64_t>(key.person),
                       static_cast<std::uint64_t>(key.session), s,
                       static_cast<std::uint64_t>(key.illumination),
                       static_cast<std::uint64_t>(key.sample));
  };
  Matrix out(p.width, p.height);
  if (key.session >= 3 && p.occluded_samples[s].contains(key.sample)) {
    detail::Rng rng(seed_of(Stream::Occlusion));
    for (double& x : out.values()) x = rng.uniform();
    return out;
  }
  const IlluminationEffect fx = p.illumination[s][static_cast<std::size_t>(key.illumination)];
  const double sigma = p.within_noise[s] + fx.noise;
  detail::Rng rng(seed_of(Stream::Pixel));
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = fx.gain * base.values()[i] + fx.offset;
    if (sigma > 0.0) x += sigma * rng.normal();
    out.values()[i] = std::clamp(x, 0.0, 1.0);
  }
  return out;
}

Matrix to_temperatures(const Matrix& intensities) {
  Matrix t(intensities.width(), intensities.height());
  for (std::size_t i = 0; i < t.size(); ++i) t.values()[i] = 28.0 + 10.0 * intensities.values()[i];
  return t;
}

}  // namespace

Image synthesize_image(const SynthParams& params, const SampleKey& key) {
  params.validate();
  return Image(render(params, key, person_base(params, key.person, key.sensor)));
}

Matrix synthesize_temperatures(const SynthParams& params, const SampleKey& key) {
  return to_temperatures(synthesize_image(params, key).pixels());
}

fs::path synthetic_relative_path(const SynthParams& params, const SampleKey& key) {
  const std::string code = format_sample_code(key);
  std::string ext = ".csv";
  if (key.sensor != Sensor::TH) ext = params.image_format == ImageFormat::Bmp ? ".bmp" : ".pgm";
  return fs::path(code.substr(0, 2)) / ("S" + std::to_string(key.session)) / (code + ext);
}

Catalog generate_synthetic(const SynthParams& params, const fs::path& out) {
  params.validate();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out.string() + ": " + ec.message());
  std::vector<CatalogEntry> entries;
  for (int person = 1; person <= params.person_count; ++person) {
    for (Sensor sensor : kSensors) {
      const Matrix base = person_base(params, person, sensor);
      for (int session = 1; session <= params.sessions; ++session) {
        fs::create_directories(out / synthetic_relative_path(params, {person, session, sensor}).parent_path(), ec);
        if (ec) fail(ErrorCode::IoFailure, "cannot create directory: " + ec.message());
        for (Illumination illum : kIlluminations) {
          for (int sample = 1; sample <= params.samples; ++sample) {
            const SampleKey key{person, session, sensor, illum, sample};
            const fs::path path = out / synthetic_relative_path(params, key);
            const Matrix pixels = render(params, key, base);
            if (sensor == Sensor::TH) {
              save_thermal_matrix(to_temperatures(pixels), path);
            } else if (params.image_format == ImageFormat::Bmp) {
              save_bmp(Image(pixels), path);
            } else {
              save_pgm(Image(pixels), path);
            }
            entries.push_back({key, path});
          }
        }
      }
    }
  }
  return Catalog(std::move(entries), params.person_count);
}

}  // namespace msface
