#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "msface/dataset.hpp"
#include "msface/error.hpp"
#include "msface/imaging.hpp"
#include "support.hpp"

using namespace msface;
using msface::testing::TempDir;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an msface::Error");
  return ErrorCode::InvalidArgument;
}

void touch(const std::filesystem::path& p) {
  std::filesystem::create_directories(p.parent_path());
  msface::testing::write_text(p, "x");
}

}  // namespace

TEST_CASE("sample codes parse field by field") {
  const SampleKey k = parse_sample_code("07S3INA2");
  CHECK(k.person == 7);
  CHECK(k.session == 3);
  CHECK(k.sensor == Sensor::NIR);
  CHECK(k.illumination == Illumination::NA);
  CHECK(k.sample == 2);
  CHECK(format_sample_code(k) == "07S3INA2");

  CHECK(parse_sample_code("41S4TAR5").sensor == Sensor::TH);
  CHECK(parse_sample_code("01S1CIR1").illumination == Illumination::IR);
}

TEST_CASE("malformed codes are rejected with MalformedCode") {
  for (const char* bad : {"", "07S3INA", "07S3INA21", "7AS3INA2", "07X3INA2", "07S3XNA2", "07S3INX2",
                          "07S3INAx", "07SxINA2", "07s3INA2"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_sample_code(bad); }) == ErrorCode::MalformedCode);
  }
}

TEST_CASE("out-of-range fields are rejected with OutOfRange") {
  for (const char* bad : {"00S1CNA1", "42S1CNA1", "07S0CNA1", "07S5CNA1", "07S1CNA0", "07S1CNA6"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_sample_code(bad); }) == ErrorCode::OutOfRange);
  }
  CHECK(parse_sample_code("42S1CNA1", false).person == 42);
  CHECK(parse_sample_code("99S1CNA1", false).person == 99);
  CHECK(code_of([] { parse_sample_code("00S1CNA1", false); }) == ErrorCode::OutOfRange);
}

TEST_CASE("probe labels drop only the sensor letter") {
  SampleKey k = parse_sample_code("07S3CNA1");
  CHECK(probe_label(k) == "07S3NA1");
  k.sensor = Sensor::TH;
  CHECK(probe_label(k) == "07S3NA1");
}

TEST_CASE("sensor and illumination names round trip") {
  for (Sensor s : kSensors) CHECK(parse_sensor(sensor_name(s)) == s);
  for (Illumination i : kIlluminations) CHECK(parse_illumination(illumination_name(i)) == i);
  CHECK(parse_sensor("I") == Sensor::NIR);
  CHECK(code_of([] { parse_sensor("UV"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("catalog rejects duplicate codes") {
  const SampleKey k = parse_sample_code("01S1CNA1");
  std::vector<CatalogEntry> entries{{k, "a/01S1CNA1.pgm"}, {k, "b/01S1CNA1.bmp"}};
  CHECK(code_of([&] { (void)Catalog(entries, 1); }) == ErrorCode::DuplicateKey);
}

TEST_CASE("scan collects sample files, skips others and reports gaps") {
  TempDir dir("scan");
  touch(dir / "01/S1/01S1CNA1.pgm");
  touch(dir / "01/S1/01S1INA1.BMP");
  touch(dir / "02/S3/02S3TAR5.csv");
  touch(dir / "02/S3/notes.txt");
  touch(dir / "02/S3/readme.csv");
  touch(dir / "02/S3/02S3TAR4.txt");

  const Catalog cat = scan_dataset(dir.path());
  REQUIRE(cat.size() == 3);
  CHECK(cat.person_count() == 2);
  CHECK(format_sample_code(cat.entries()[0].key) == "01S1CNA1");
  CHECK(format_sample_code(cat.entries()[2].key) == "02S3TAR5");
  CHECK(cat.find(parse_sample_code("01S1INA1")) != nullptr);
  CHECK(cat.find(parse_sample_code("01S1INA2")) == nullptr);
  CHECK(cat.missing().size() == 2u * 4 * 3 * 3 * 5 - 3);
  CHECK_FALSE(cat.complete());

  CHECK(scan_dataset(dir.path(), true, 5).missing().size() == 5u * 180 - 3);
}

TEST_CASE("scan in strict mode ignores out-of-range persons") {
  TempDir dir("strict");
  touch(dir / "50S1CNA1.pgm");
  touch(dir / "01S1CNA1.pgm");
  CHECK(scan_dataset(dir.path(), true).size() == 1);
  CHECK(scan_dataset(dir.path(), false).size() == 2);
  CHECK(scan_dataset(dir.path(), false).person_count() == 50);
}

TEST_CASE("scan of an empty strict directory expects the full database") {
  TempDir dir("empty");
  const Catalog cat = scan_dataset(dir.path());
  CHECK(cat.person_count() == kStrictPersons);
  CHECK(cat.missing().size() == 7380);
}

TEST_CASE("scan of a missing directory is an IO failure") {
  CHECK(code_of([] { scan_dataset("/nonexistent/msface/root"); }) == ErrorCode::IoFailure);
}

TEST_CASE("catalog CSV lists relative paths") {
  TempDir dir("catcsv");
  touch(dir / "01/S1/01S1CNA1.pgm");
  const Catalog cat = scan_dataset(dir.path());
  export_catalog_csv(cat, dir / "catalog.csv", dir.path());
  CHECK(msface::testing::slurp(dir / "catalog.csv") ==
        "code,person,session,sensor,illumination,sample,path\n01S1CNA1,1,1,VIS,NA,1,01/S1/01S1CNA1.pgm\n");
}

namespace {

Catalog full_grid(int persons) {
  std::vector<CatalogEntry> entries;
  for (int p = 1; p <= persons; ++p)
    for (int s = 1; s <= kSessions; ++s)
      for (Sensor sensor : kSensors)
        for (Illumination i : kIlluminations)
          for (int n = 1; n <= kSamples; ++n) {
            const SampleKey k{p, s, sensor, i, n};
            entries.push_back({k, format_sample_code(k)});
          }
  return Catalog(std::move(entries), persons);
}

}  // namespace

TEST_CASE("split follows the session and illumination protocol") {
  const Catalog cat = full_grid(3);
  SplitSpec spec;
  spec.sensor = Sensor::NIR;
  spec.train_illumination = Illumination::IR;
  spec.test_illumination = Illumination::AR;
  spec.test_session = 4;
  const Split split = make_split(cat, spec);
  CHECK(split.train.size() == 3u * 2 * 5);
  CHECK(split.test.size() == 3u * 5);
  CHECK(split.gallery_size == 10);
  for (const auto& s : split.train) {
    CHECK(s.entry->key.sensor == Sensor::NIR);
    CHECK(s.entry->key.illumination == Illumination::IR);
    CHECK(s.entry->key.session <= 2);
    CHECK(s.person == s.entry->key.person);
  }
  for (const auto& s : split.test) {
    CHECK(s.entry->key.session == 4);
    CHECK(s.entry->key.illumination == Illumination::AR);
  }
}

TEST_CASE("split rejects overlapping sessions and empty partitions") {
  const Catalog cat = full_grid(2);
  SplitSpec spec;
  spec.test_session = 2;
  CHECK(code_of([&] { make_split(cat, spec); }) == ErrorCode::InvalidSplit);
  spec.test_session = 5;
  CHECK(code_of([&] { make_split(cat, spec); }) == ErrorCode::InvalidSplit);

  std::vector<CatalogEntry> entries;
  for (const auto& e : cat.entries()) {
    if (!(e.key.person == 2 && e.key.session == 3)) entries.push_back(e);
  }
  const Catalog holes(entries, 2);
  spec.test_session = 3;
  CHECK(code_of([&] { make_split(holes, spec); }) == ErrorCode::EmptySplit);
  CHECK(code_of([&] { make_split(Catalog{}, SplitSpec{}); }) == ErrorCode::EmptySplit);
}

TEST_CASE("synthetic samples are deterministic and independent of generation order") {
  SynthParams p;
  p.person_count = 3;
  p.width = 24;
  p.height = 32;
  p.illumination = default_illumination_effects();
  const SampleKey k{2, 3, Sensor::VIS, Illumination::AR, 4};
  const Image a = synthesize_image(p, k);
  synthesize_image(p, SampleKey{1, 1, Sensor::NIR, Illumination::NA, 1});
  CHECK(synthesize_image(p, k) == a);
  p.seed = 2;
  CHECK_FALSE(synthesize_image(p, k) == a);
}

TEST_CASE("zero-noise identity synthesis repeats each person exactly") {
  SynthParams p;
  p.person_count = 2;
  p.width = 20;
  p.height = 28;
  p.within_noise = {0.0, 0.0, 0.0};
  p.illumination = identity_illumination_effects();
  const Image ref = synthesize_image(p, {1, 1, Sensor::VIS, Illumination::NA, 1});
  CHECK(synthesize_image(p, {1, 4, Sensor::VIS, Illumination::AR, 5}) == ref);
  CHECK_FALSE(synthesize_image(p, {2, 1, Sensor::VIS, Illumination::NA, 1}) == ref);
}

TEST_CASE("blackout effect darkens only VIS under IR") {
  SynthParams p;
  p.person_count = 1;
  p.width = 16;
  p.height = 16;
  p.within_noise = {0.0, 0.0, 0.0};
  p.illumination = vis_ir_blackout_effects();
  const Image dark = synthesize_image(p, {1, 1, Sensor::VIS, Illumination::IR, 1});
  for (double v : dark.pixels().values()) CHECK(v == 0.0);
  const Image nir = synthesize_image(p, {1, 1, Sensor::NIR, Illumination::IR, 1});
  double sum = 0.0;
  for (double v : nir.pixels().values()) sum += v;
  CHECK(sum > 0.0);
}

TEST_CASE("occluded test samples become noise only in late sessions") {
  SynthParams p;
  p.person_count = 1;
  p.width = 16;
  p.height = 16;
  p.within_noise = {0.0, 0.0, 0.0};
  p.illumination = identity_illumination_effects();
  p.occluded_samples[0] = {1};
  const Image clean = synthesize_image(p, {1, 1, Sensor::VIS, Illumination::NA, 1});
  CHECK(synthesize_image(p, {1, 2, Sensor::VIS, Illumination::NA, 1}) == clean);
  CHECK_FALSE(synthesize_image(p, {1, 3, Sensor::VIS, Illumination::NA, 1}) == clean);
  CHECK(synthesize_image(p, {1, 3, Sensor::VIS, Illumination::NA, 2}) == clean);
}

TEST_CASE("generated dataset is complete and rescannable") {
  TempDir dir("gen");
  SynthParams p;
  p.person_count = 2;
  p.width = 16;
  p.height = 20;
  p.image_format = ImageFormat::Bmp;
  const Catalog gen = generate_synthetic(p, dir.path());
  CHECK(gen.size() == 2u * 180);
  CHECK(gen.complete());
  const Catalog scanned = scan_dataset(dir.path());
  CHECK(scanned.size() == gen.size());
  CHECK(scanned.complete());
  CHECK(std::filesystem::exists(dir / "02/S4/02S4TAR5.csv"));
  CHECK(std::filesystem::exists(dir / "01/S1/01S1CNA1.bmp"));
  const Image th = load_any(dir / "02/S4/02S4TAR5.csv");
  CHECK(th.width() == 16);
  CHECK(th.height() == 20);
}

TEST_CASE("invalid synthetic parameters raise BadConfig") {
  SynthParams p;
  p.person_count = 0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::BadConfig);
  p = SynthParams{};
  p.within_noise[1] = -0.1;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::BadConfig);
  p = SynthParams{};
  p.width = 4;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::BadConfig);
}
