#include "msface/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "msface/error.hpp"
#include "msface/imaging.hpp"
#include "msface/transform.hpp"

namespace msface {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

const std::vector<ConfigKey>& Config::known_keys() {
  static const std::vector<ConfigKey> keys = {
      {"dataset", "data", "dataset root directory"},
      {"out", "out", "output directory"},
      {"strict", "false", "accept only person ids 01-41"},
      {"expected_persons", "", "persons in the complete grid (default: highest id found)"},
      {"sensors", "VIS,NIR,TH", "sensors to evaluate"},
      {"train_sessions", "1,2", "training sessions"},
      {"test_sessions", "3,4", "test sessions, each evaluated separately"},
      {"train_illuminations", "NA,IR,AR", "training illuminations"},
      {"test_illuminations", "NA,IR,AR", "test illuminations"},
      {"normalization", "no,yes", "intensity normalization settings to run"},
      {"saturate_fraction", "0.01", "fraction saturated at each end by normalization"},
      {"resize", "100x145", "pipeline image size WxH"},
      {"mask", "square", "coefficient selection: square or topk"},
      {"window", "20", "square window size N"},
      {"topk", "400", "number of coefficients for topk selection"},
      {"variant", "variance-ratio", "discriminability: variance-ratio or literal"},
      {"n_min", "1", "smallest window in a sweep"},
      {"n_max", "30", "largest window in a sweep"},
      {"p", "0.5", "fractional distance exponent"},
      {"combinations", "VIS&NIR,VIS&TH,NIR&TH,VIS&NIR&TH", "sensor combinations to fuse"},
      {"fusion", "fixed", "fusion rule: fixed or grid"},
      {"grid_step", "0.01", "weight grid increment"},
      {"score_normalization", "none", "per-table score normalization: none or minmax"},
      {"save_tables", "false", "write every distance table and its truth labels"},
      {"contours", "true", "write contour CSVs for grid fusion"},
      {"table_a", "", "grid: first distance table CSV"},
      {"table_b", "", "grid: second distance table CSV"},
      {"table_c", "", "grid: optional third distance table CSV"},
      {"truth", "", "grid: truth label CSV"},
      {"seed", "1", "synthetic data seed"},
      {"persons", "10", "synthetic person count"},
      {"sessions", "4", "synthetic session count"},
      {"samples", "5", "synthetic samples per condition"},
      {"width", "100", "synthetic image width"},
      {"height", "145", "synthetic image height"},
      {"within_noise", "0.02", "within-class pixel noise, one value or VIS,NIR,TH"},
      {"illumination_model", "default", "default, identity or vis_ir_blackout"},
      {"planted_band", "", "identity frequencies u:v;u:v (empty: whole low band)"},
      {"planted_amplitude", "2.0", "identity coefficient amplitude in the planted band"},
      {"occlusion", "none", "none or complementary (per-sensor noise-replaced test samples)"},
      {"image_format", "pgm", "synthetic VIS/NIR container: pgm or bmp"},
  };
  return keys;
}

bool Config::is_known(std::string_view key) {
  const auto& keys = known_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
}

Config::Config() {
  for (const auto& k : known_keys()) values_.emplace(std::string(k.name), std::string(k.default_value));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void Config::set(std::string_view key, std::string_view value) {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::BadConfig, "unknown configuration key '" + std::string(key) + "'");
  it->second = trim(value);
}

void Config::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::BadConfig, path.string() + ":" + std::to_string(line_no) +
                                     ": expected 'key = value', got '" + trim(line) + "'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!is_known(key)) {
      fail(ErrorCode::BadConfig, path.string() + ":" + std::to_string(line_no) +
                                     ": unknown configuration key '" + key + "'");
    }
    set(key, std::string_view(line).substr(eq + 1));
  }
}

const std::string& Config::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::BadConfig, "unknown configuration key '" + std::string(key) + "'");
  return it->second;
}

namespace {

std::vector<std::string> split_list(std::string_view s, std::string_view seps = ",") {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find_first_of(seps, start);
    const std::string item = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_num(const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidArgument, "'" + s + "' is not a valid number");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  fail(ErrorCode::InvalidArgument, "'" + s + "' is not a boolean");
}

// Parses one key, rethrowing any failure as BadConfig naming the key.
template <typename F>
auto with_key(const Config& cfg, std::string_view key, F&& parse) {
  const std::string& raw = cfg.get(key);
  try {
    return parse(raw);
  } catch (const Error& e) {
    fail(ErrorCode::BadConfig, "invalid value for key '" + std::string(key) + "': " + e.what());
  }
}

[[noreturn]] void bad_key(std::string_view key, const std::string& why) {
  fail(ErrorCode::BadConfig, "invalid value for key '" + std::string(key) + "': " + why);
}

std::vector<Sensor> parse_sensors(const std::string& s) {
  std::vector<Sensor> out;
  for (const auto& item : split_list(s)) out.push_back(parse_sensor(item));
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty sensor list");
  return out;
}

std::vector<Illumination> parse_illuminations(const std::string& s) {
  std::vector<Illumination> out;
  for (const auto& item : split_list(s)) out.push_back(parse_illumination(item));
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty illumination list");
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(parse_num<int>(item));
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty list");
  return out;
}

std::string combination_name(const std::vector<Sensor>& combo) {
  std::string name;
  for (Sensor s : combo) {
    if (!name.empty()) name += '&';
    name += sensor_name(s);
  }
  return name;
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const Config& cfg) {
  ExperimentConfig c;
  c.dataset = cfg.get("dataset");
  c.out = cfg.get("out");
  if (c.out.empty()) bad_key("out", "output directory must be set");
  c.strict = with_key(cfg, "strict", parse_bool);
  if (!cfg.get("expected_persons").empty()) {
    c.expected_persons = with_key(cfg, "expected_persons", parse_num<int>);
    if (*c.expected_persons < 1 || *c.expected_persons > kRelaxedPersons) {
      bad_key("expected_persons", "must lie in 1..99");
    }
  }
  c.sensors = with_key(cfg, "sensors", parse_sensors);

  const auto train_sessions = with_key(cfg, "train_sessions", parse_ints);
  c.train_sessions = std::set<int>(train_sessions.begin(), train_sessions.end());
  c.test_sessions = with_key(cfg, "test_sessions", parse_ints);
  for (int s : train_sessions) {
    if (s < 1 || s > kSessions) bad_key("train_sessions", "sessions must lie in 1..4");
  }
  for (int s : c.test_sessions) {
    if (s < 1 || s > kSessions) bad_key("test_sessions", "sessions must lie in 1..4");
    if (c.train_sessions.contains(s)) {
      bad_key("test_sessions", "session " + std::to_string(s) + " is also a training session");
    }
  }
  c.train_illuminations = with_key(cfg, "train_illuminations", parse_illuminations);
  c.test_illuminations = with_key(cfg, "test_illuminations", parse_illuminations);
  c.normalization.clear();
  for (const auto& item : split_list(cfg.get("normalization"))) {
    c.normalization.push_back(with_key(cfg, "normalization", [&](const std::string&) { return parse_bool(item); }));
  }
  if (c.normalization.empty()) bad_key("normalization", "empty list");

  c.saturate_fraction = with_key(cfg, "saturate_fraction", parse_num<double>);
  if (!(c.saturate_fraction >= 0.0 && c.saturate_fraction < 0.5)) bad_key("saturate_fraction", "must lie in [0, 0.5)");
  {
    const auto dims = split_list(cfg.get("resize"), "xX");
    if (dims.size() != 2) bad_key("resize", "expected WxH");
    c.resize_width = with_key(cfg, "resize", [&](const std::string&) { return parse_num<std::size_t>(dims[0]); });
    c.resize_height = with_key(cfg, "resize", [&](const std::string&) { return parse_num<std::size_t>(dims[1]); });
    if (c.resize_width == 0 || c.resize_height == 0) bad_key("resize", "dimensions must be positive");
  }

  const std::string& mask = cfg.get("mask");
  if (mask == "square") {
    c.mask = MaskMode::Square;
  } else if (mask == "topk") {
    c.mask = MaskMode::TopK;
  } else {
    bad_key("mask", "expected square or topk");
  }
  c.window = with_key(cfg, "window", parse_num<std::size_t>);
  if (c.window == 0) bad_key("window", "must be positive");
  if (c.mask == MaskMode::Square && c.window > std::min(c.resize_width, c.resize_height)) {
    bad_key("window", "exceeds the image grid");
  }
  c.top_k = with_key(cfg, "topk", parse_num<std::size_t>);
  if (c.top_k == 0) bad_key("topk", "must be positive");
  if (c.mask == MaskMode::TopK && c.top_k > c.resize_width * c.resize_height) {
    bad_key("topk", "exceeds the number of coefficients");
  }
  c.variant = with_key(cfg, "variant", [](const std::string& s) { return parse_fisher_variant(s); });
  c.n_min = with_key(cfg, "n_min", parse_num<std::size_t>);
  c.n_max = with_key(cfg, "n_max", parse_num<std::size_t>);
  if (c.n_min == 0) bad_key("n_min", "window sizes start at 1");
  if (c.n_max < c.n_min) bad_key("n_max", "must be >= n_min");
  c.p = with_key(cfg, "p", parse_num<double>);
  if (!(c.p > 0.0)) bad_key("p", "distance exponent must be positive");

  for (const auto& combo : split_list(cfg.get("combinations"))) {
    std::vector<Sensor> sensors;
    for (const auto& s : split_list(combo, "&+")) {
      sensors.push_back(with_key(cfg, "combinations", [&](const std::string&) { return parse_sensor(s); }));
    }
    if (sensors.size() < 2 || sensors.size() > 3) bad_key("combinations", "each combination needs 2 or 3 sensors");
    c.combinations.push_back(std::move(sensors));
  }
  const std::string& fusion = cfg.get("fusion");
  if (fusion == "fixed") {
    c.fusion = FusionRule::Fixed;
  } else if (fusion == "grid" || fusion == "trained") {
    c.fusion = FusionRule::Grid;
  } else {
    bad_key("fusion", "expected fixed or grid");
  }
  c.grid_step = with_key(cfg, "grid_step", parse_num<double>);
  with_key(cfg, "grid_step", [&](const std::string&) { return weight_grid(c.grid_step).size(); });
  const std::string& sn = cfg.get("score_normalization");
  if (sn != "none" && sn != "minmax") bad_key("score_normalization", "expected none or minmax");
  c.score_normalization = sn == "minmax";
  c.save_tables = with_key(cfg, "save_tables", parse_bool);
  c.contours = with_key(cfg, "contours", parse_bool);
  c.table_a = cfg.get("table_a");
  c.table_b = cfg.get("table_b");
  c.table_c = cfg.get("table_c");
  c.truth = cfg.get("truth");

  SynthParams& sp = c.synth;
  sp.seed = with_key(cfg, "seed", parse_num<std::uint64_t>);
  sp.person_count = with_key(cfg, "persons", parse_num<int>);
  sp.sessions = with_key(cfg, "sessions", parse_num<int>);
  sp.samples = with_key(cfg, "samples", parse_num<int>);
  sp.width = with_key(cfg, "width", parse_num<std::size_t>);
  sp.height = with_key(cfg, "height", parse_num<std::size_t>);
  if (sp.person_count < 1 || sp.person_count > kRelaxedPersons) bad_key("persons", "must lie in 1..99");
  if (sp.sessions < 1 || sp.sessions > kSessions) bad_key("sessions", "must lie in 1..4");
  if (sp.samples < 1 || sp.samples > kSamples) bad_key("samples", "must lie in 1..5");
  if (sp.width < 8) bad_key("width", "synthetic images must be at least 8 pixels wide");
  if (sp.height < 8) bad_key("height", "synthetic images must be at least 8 pixels high");
  {
    std::vector<double> noise;
    for (const auto& item : split_list(cfg.get("within_noise"))) {
      noise.push_back(with_key(cfg, "within_noise", [&](const std::string&) { return parse_num<double>(item); }));
    }
    if (noise.size() == 1) {
      sp.within_noise = {noise[0], noise[0], noise[0]};
    } else if (noise.size() == 3) {
      sp.within_noise = {noise[0], noise[1], noise[2]};
    } else {
      bad_key("within_noise", "expected one value or three (VIS,NIR,TH)");
    }
    for (double n : sp.within_noise) {
      if (!(n >= 0.0)) bad_key("within_noise", "noise scales must be >= 0");
    }
  }
  const std::string& model = cfg.get("illumination_model");
  if (model == "default") {
    sp.illumination = default_illumination_effects();
  } else if (model == "identity") {
    sp.illumination = identity_illumination_effects();
  } else if (model == "vis_ir_blackout") {
    sp.illumination = vis_ir_blackout_effects();
  } else {
    bad_key("illumination_model", "expected default, identity or vis_ir_blackout");
  }
  for (const auto& item : split_list(cfg.get("planted_band"), ";, ")) {
    const auto uv = split_list(item, ":");
    if (uv.size() != 2) bad_key("planted_band", "expected u:v pairs");
    sp.planted_band.push_back(with_key(cfg, "planted_band", [&](const std::string&) {
      return FreqPos{parse_num<std::size_t>(uv[0]), parse_num<std::size_t>(uv[1])};
    }));
  }
  sp.planted_amplitude = with_key(cfg, "planted_amplitude", parse_num<double>);
  for (const auto& pos : sp.planted_band) {
    if (pos.u >= sp.width || pos.v >= sp.height) bad_key("planted_band", "frequency outside the image grid");
  }
  const std::string& occlusion = cfg.get("occlusion");
  if (occlusion == "complementary") {
    sp.occluded_samples = {std::set<int>{1, 2}, std::set<int>{3, 4}, std::set<int>{5}};
  } else if (occlusion != "none") {
    bad_key("occlusion", "expected none or complementary");
  }
  const std::string& format = cfg.get("image_format");
  if (format == "pgm") {
    sp.image_format = ImageFormat::Pgm;
  } else if (format == "bmp") {
    sp.image_format = ImageFormat::Bmp;
  } else {
    bad_key("image_format", "expected pgm or bmp");
  }
  try {
    sp.validate();
  } catch (const Error& e) {
    fail(ErrorCode::BadConfig, std::string("invalid synthetic parameters: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Pipeline

std::string cell_tag(const Cell& cell) {
  return std::string(sensor_name(cell.sensor)) + "_norm-" + (cell.normalize ? "yes" : "no") + "_" +
         std::string(illumination_name(cell.train_illumination)) + "-" +
         std::string(illumination_name(cell.test_illumination)) + "_S" + std::to_string(cell.test_session);
}

struct Pipeline::Prepared {
  std::vector<TrainingSample> train;
  std::vector<int> test_persons;
  std::vector<std::string> test_labels;
  std::vector<const CoefMatrix*> test_coefs;
};

Pipeline::Pipeline(ExperimentConfig config, Catalog catalog)
    : config_(std::move(config)), catalog_(std::move(catalog)) {
  if (config_.mask == MaskMode::TopK) {
    keep_width_ = config_.resize_width;
    keep_height_ = config_.resize_height;
  } else {
    const std::size_t n = std::max(config_.window, config_.n_max);
    keep_width_ = std::min(n, config_.resize_width);
    keep_height_ = std::min(n, config_.resize_height);
  }
}

Pipeline::~Pipeline() = default;

void Pipeline::clear_cache() { cache_.clear(); }

const CoefMatrix& Pipeline::coefficients(const CatalogEntry& entry, bool normalize) {
  auto key = std::make_pair(entry.path.string(), normalize);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  Image img = load_any(entry.path);
  if (img.width() != config_.resize_width || img.height() != config_.resize_height) {
    img = resize_bicubic(img, config_.resize_width, config_.resize_height);
  }
  if (normalize) img = normalize_intensity(img, config_.saturate_fraction);
  const CoefMatrix full = dct2_forward(img);
  Matrix kept(keep_width_, keep_height_);
  for (std::size_t v = 0; v < keep_height_; ++v) {
    for (std::size_t u = 0; u < keep_width_; ++u) kept(u, v) = full(u, v);
  }
  return cache_.emplace(std::move(key), CoefMatrix(std::move(kept))).first->second;
}

Pipeline::Prepared Pipeline::prepare(const Cell& cell) {
  SplitSpec spec;
  spec.train_sessions = config_.train_sessions;
  spec.test_session = cell.test_session;
  spec.train_illumination = cell.train_illumination;
  spec.test_illumination = cell.test_illumination;
  spec.sensor = cell.sensor;
  const Split split = make_split(catalog_, spec);
  Prepared prep;
  for (const auto& s : split.train) prep.train.push_back({s.person, &coefficients(*s.entry, cell.normalize)});
  for (const auto& s : split.test) {
    prep.test_persons.push_back(s.person);
    prep.test_labels.push_back(probe_label(s.entry->key));
    prep.test_coefs.push_back(&coefficients(*s.entry, cell.normalize));
  }
  return prep;
}

namespace {

CellResult score_cell(const std::vector<TrainingSample>& train, const std::vector<const CoefMatrix*>& test,
                      const std::vector<std::string>& labels, const std::vector<int>& persons,
                      const SelectionMask& mask, double p) {
  Gallery gallery;
  for (const auto& t : train) gallery.add(t.person, extract_features(*t.coefs, mask));
  std::vector<FeatureVector> probes;
  probes.reserve(test.size());
  for (const CoefMatrix* c : test) probes.push_back(extract_features(*c, mask));
  CellResult res;
  res.table = score_probes(probes, labels, gallery, p);
  res.truth = persons;
  res.coefficients = mask.dimension();
  res.rate = identification_rate(identify(res.table), res.truth);
  return res;
}

}  // namespace

CellResult Pipeline::evaluate(const Cell& cell) {
  return evaluate(cell, config_.mask, config_.mask == MaskMode::Square ? config_.window : config_.top_k);
}

CellResult Pipeline::evaluate(const Cell& cell, MaskMode mode, std::size_t size) {
  const Prepared prep = prepare(cell);
  const SelectionMask mask =
      mode == MaskMode::Square
          ? square_mask(size, keep_width_, keep_height_)
          : top_k_mask(fisher_map(compute_statistics(prep.train), config_.variant), size);
  return score_cell(prep.train, prep.test_coefs, prep.test_labels, prep.test_persons, mask, config_.p);
}

std::vector<std::pair<std::size_t, double>> Pipeline::sweep(const Cell& cell, std::size_t n_min,
                                                            std::size_t n_max) {
  if (n_min == 0) fail(ErrorCode::BadDimension, "window size 0 gives an empty feature vector");
  if (n_max < n_min) fail(ErrorCode::BadDimension, "empty window range");
  const Prepared prep = prepare(cell);
  std::optional<DiscriminabilityMap> map;
  if (config_.mask == MaskMode::TopK) map = fisher_map(compute_statistics(prep.train), config_.variant);
  std::vector<std::pair<std::size_t, double>> curve;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    const SelectionMask mask =
        map ? top_k_mask(*map, n * n) : square_mask(n, keep_width_, keep_height_);
    curve.emplace_back(n, score_cell(prep.train, prep.test_coefs, prep.test_labels, prep.test_persons,
                                     mask, config_.p)
                              .rate);
  }
  return curve;
}

std::vector<std::pair<std::size_t, double>> sweep_window_sizes(Pipeline& pipeline, const Cell& cell,
                                                               std::size_t n_min, std::size_t n_max) {
  return pipeline.sweep(cell, n_min, n_max);
}

// ---------------------------------------------------------------------------
// Experiment matrices

namespace {

std::string sessions_label(const std::set<int>& sessions) {
  std::string s;
  for (int v : sessions) {
    if (!s.empty()) s += '&';
    s += std::to_string(v);
  }
  return s;
}

ResultRow base_row(const ExperimentConfig& cfg, const Cell& cell, std::string sensors) {
  ResultRow row;
  row.sensors = std::move(sensors);
  row.normalized = cell.normalize;
  row.train_illumination = cell.train_illumination;
  row.train_sessions = sessions_label(cfg.train_sessions);
  row.test_illumination = cell.test_illumination;
  row.test_session = cell.test_session;
  return row;
}

void save_cell_tables(const ExperimentConfig& cfg, const std::string& tag, const CellResult& res) {
  const fs::path dir = cfg.out / "tables";
  fs::create_directories(dir);
  save_distance_table(res.table, dir / (tag + ".csv"));
  save_truth(res.table.probes, res.truth, dir / (tag + "_truth.csv"));
}

void warn(const Logger& log, const std::string& msg) {
  if (log) log("warning: " + msg);
}

}  // namespace

std::vector<ResultRow> run_mismatch_matrix(Pipeline& pipeline, const Logger& log) {
  const ExperimentConfig& cfg = pipeline.config();
  std::vector<ResultRow> rows;
  for (Sensor sensor : cfg.sensors) {
    for (bool norm : cfg.normalization) {
      for (Illumination train : cfg.train_illuminations) {
        for (Illumination test : cfg.test_illuminations) {
          for (int session : cfg.test_sessions) {
            const Cell cell{sensor, norm, train, test, session};
            ResultRow row = base_row(cfg, cell, std::string(sensor_name(sensor)));
            try {
              const CellResult res = pipeline.evaluate(cell);
              row.rate = res.rate;
              row.coefficients = res.coefficients;
              if (cfg.save_tables) save_cell_tables(cfg, cell_tag(cell), res);
            } catch (const Error& e) {
              if (e.code() != ErrorCode::EmptySplit) throw;
              warn(log, cell_tag(cell) + ": " + e.what() + "; cell reported as NA");
            }
            rows.push_back(std::move(row));
          }
        }
      }
    }
    pipeline.clear_cache();
  }
  return rows;
}

std::vector<ResultRow> run_fusion_matrix(Pipeline& pipeline, const Logger& log) {
  const ExperimentConfig& cfg = pipeline.config();
  std::vector<Sensor> needed;
  for (const auto& combo : cfg.combinations) {
    for (Sensor s : combo) {
      if (std::find(needed.begin(), needed.end(), s) == needed.end()) needed.push_back(s);
    }
  }
  std::sort(needed.begin(), needed.end());

  std::vector<std::vector<ResultRow>> per_combo(cfg.combinations.size());
  for (bool norm : cfg.normalization) {
    for (Illumination train : cfg.train_illuminations) {
      for (Illumination test : cfg.test_illuminations) {
        for (int session : cfg.test_sessions) {
          std::map<Sensor, CellResult> singles;
          for (Sensor s : needed) {
            const Cell cell{s, norm, train, test, session};
            try {
              CellResult res = pipeline.evaluate(cell);
              if (cfg.score_normalization) res.table = normalize_scores(res.table);
              if (cfg.save_tables) save_cell_tables(cfg, cell_tag(cell), res);
              singles.emplace(s, std::move(res));
            } catch (const Error& e) {
              if (e.code() != ErrorCode::EmptySplit) throw;
              warn(log, cell_tag(cell) + ": " + e.what());
            }
          }
          for (std::size_t ci = 0; ci < cfg.combinations.size(); ++ci) {
            const auto& combo = cfg.combinations[ci];
            const std::string name = combination_name(combo);
            const Cell cell{combo.front(), norm, train, test, session};
            ResultRow row = base_row(cfg, cell, name);
            std::vector<DistanceTable> tables;
            for (Sensor s : combo) {
              auto it = singles.find(s);
              if (it == singles.end()) break;
              tables.push_back(it->second.table);
            }
            if (tables.size() != combo.size()) {
              warn(log, name + " " + cell_tag(cell) + ": missing sensor data; cell reported as NA");
              per_combo[ci].push_back(std::move(row));
              continue;
            }
            const CellResult& first = singles.at(combo.front());
            row.coefficients = first.coefficients;
            try {
              row.rate = identification_rate(identify(fuse_fixed(tables)), first.truth);
              if (cfg.fusion == FusionRule::Grid) {
                const GridResult grid =
                    tables.size() == 2 ? grid_search_2(tables[0], tables[1], first.truth, cfg.grid_step)
                                       : grid_search_3(tables[0], tables[1], tables[2], first.truth, cfg.grid_step);
                row.trained_rate = grid.best_rate;
                row.best_alpha = grid.best_alpha;
                if (grid.three_way()) row.best_beta = grid.best_beta;
                row.best_in_simplex = grid.best_in_simplex;
                if (cfg.contours) {
                  const fs::path dir = cfg.out / "contours";
                  fs::create_directories(dir);
                  std::string file = name;
                  std::replace(file.begin(), file.end(), '&', '-');
                  std::string tag = cell_tag(cell);
                  tag = tag.substr(tag.find('_') + 1);
                  export_contour(grid, dir / (file + "_" + tag + ".csv"));
                }
              }
            } catch (const Error& e) {
              if (e.code() != ErrorCode::LabelMismatch && e.code() != ErrorCode::ShapeMismatch) throw;
              warn(log, name + " " + cell_tag(cell) + ": " + e.what() + "; cell reported as NA");
            }
            per_combo[ci].push_back(std::move(row));
          }
        }
      }
    }
  }
  std::vector<ResultRow> rows;
  for (auto& block : per_combo) {
    for (auto& r : block) rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Writers

namespace {

std::string opt_rate(const std::optional<double>& r) { return r ? format_rate(*r) : "NA"; }

std::string opt_weight(const std::optional<double>& w) {
  if (!w) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *w);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  return out;
}

void write_wide(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg, const fs::path& path,
                std::string_view first_column) {
  std::ofstream out = open_out(path);
  out << first_column << ",normalization,train";
  for (Illumination test : cfg.test_illuminations) {
    for (int s : cfg.test_sessions) out << ',' << illumination_name(test) << '_' << s;
  }
  out << '\n';
  // Rows arrive grouped by (sensors, normalization, train illumination) with
  // test illumination and session varying fastest, in config order.
  const std::size_t per_line = cfg.test_illuminations.size() * cfg.test_sessions.size();
  for (std::size_t i = 0; i < rows.size(); i += per_line) {
    const ResultRow& r = rows[i];
    out << r.sensors << ',' << (r.normalized ? "YES" : "NO") << ',' << illumination_name(r.train_illumination)
        << ' ' << r.train_sessions;
    for (std::size_t j = i; j < std::min(i + per_line, rows.size()); ++j) out << ',' << opt_rate(rows[j].rate);
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

}  // namespace

void write_result_rows(const std::vector<ResultRow>& rows, const fs::path& path) {
  const bool trained = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.trained_rate.has_value(); });
  std::ofstream out = open_out(path);
  if (trained) {
    out << "# trained_rate: weights searched on the test cell itself; diagnostic (test-optimized), "
           "not an unbiased accuracy estimate\n";
  }
  out << "sensors,normalization,train_illumination,train_sessions,test_illumination,test_session,coefficients,rate";
  if (trained) out << ",trained_rate_diagnostic_test_optimized,alpha,beta,simplex";
  out << '\n';
  for (const auto& r : rows) {
    out << r.sensors << ',' << (r.normalized ? "YES" : "NO") << ',' << illumination_name(r.train_illumination)
        << ',' << r.train_sessions << ',' << illumination_name(r.test_illumination) << ',' << r.test_session
        << ',' << r.coefficients << ',' << opt_rate(r.rate);
    if (trained) {
      out << ',' << opt_rate(r.trained_rate) << ',' << opt_weight(r.best_alpha) << ','
          << opt_weight(r.best_beta) << ',' << (r.best_in_simplex ? (*r.best_in_simplex ? "1" : "0") : "NA");
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

void write_mismatch_table(const std::vector<ResultRow>& rows, const ExperimentConfig& config, const fs::path& path) {
  write_wide(rows, config, path, "sensor");
}

void write_fusion_table(const std::vector<ResultRow>& rows, const ExperimentConfig& config, const fs::path& path) {
  write_wide(rows, config, path, "sensors");
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Commands

const std::vector<std::string_view>& command_names() {
  static const std::vector<std::string_view> names = {"synth", "scan", "extract", "sweep",
                                                       "mismatch", "fuse", "grid"};
  return names;
}

namespace {

class RunOutputs {
 public:
  explicit RunOutputs(fs::path root) : root_(std::move(root)) {}

  fs::path add(const fs::path& relative) {
    files_.push_back(relative);
    return root_ / relative;
  }

  void write_manifest(std::string_view command, const Config& config) {
    std::sort(files_.begin(), files_.end());
    files_.erase(std::unique(files_.begin(), files_.end()), files_.end());
    std::ofstream out = open_out(root_ / "run_manifest.txt");
    out << "command = " << command << '\n';
    for (const auto& [key, value] : config.values()) {
      if (key == "out") continue;
      out << key << " = " << value << '\n';
    }
    char buf[32];
    for (const auto& f : files_) {
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64_file(root_ / f)));
      out << "artifact " << f.generic_string() << " fnv1a64=" << buf << " bytes=" << fs::file_size(root_ / f)
          << '\n';
    }
    if (!out) fail(ErrorCode::IoFailure, "cannot write run manifest");
  }

 private:
  fs::path root_;
  std::vector<fs::path> files_;
};

void info(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::vector<Cell> cross_cells(const ExperimentConfig& cfg, bool matched_only) {
  std::vector<Cell> cells;
  for (Sensor s : cfg.sensors) {
    for (bool norm : cfg.normalization) {
      for (Illumination train : cfg.train_illuminations) {
        for (Illumination test : cfg.test_illuminations) {
          if (matched_only && test != train) continue;
          for (int session : cfg.test_sessions) cells.push_back({s, norm, train, test, session});
        }
      }
    }
  }
  return cells;
}

Catalog load_catalog(const ExperimentConfig& cfg) {
  return scan_dataset(cfg.dataset, cfg.strict, cfg.expected_persons);
}

void run_synth(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  const Catalog cat = generate_synthetic(cfg.synth, cfg.out);
  for (const auto& e : cat.entries()) outputs.add(e.path.lexically_relative(cfg.out));
  export_catalog_csv(cat, outputs.add("catalog.csv"), cfg.out);
  info(log, "generated " + std::to_string(cat.size()) + " samples for " +
                std::to_string(cfg.synth.person_count) + " persons in " + cfg.out.string());
}

void run_scan(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  const Catalog cat = load_catalog(cfg);
  export_catalog_csv(cat, outputs.add("catalog.csv"), cfg.dataset);
  const auto missing = cat.missing();
  {
    std::ofstream out = open_out(outputs.add("missing.csv"));
    out << "code\n";
    for (const auto& k : missing) out << format_sample_code(k) << '\n';
  }
  info(log, "entries=" + std::to_string(cat.size()) + " persons=" + std::to_string(cat.person_count()) +
                " missing=" + std::to_string(missing.size()) + (missing.empty() ? " (complete)" : ""));
}

void run_extract(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  Pipeline pipeline(cfg, load_catalog(cfg));
  fs::create_directories(cfg.out / "tables");
  std::vector<ResultRow> rows;
  for (const Cell& cell : cross_cells(cfg, false)) {
    ResultRow row = base_row(cfg, cell, std::string(sensor_name(cell.sensor)));
    try {
      const CellResult res = pipeline.evaluate(cell);
      const std::string tag = cell_tag(cell);
      save_distance_table(res.table, outputs.add(fs::path("tables") / (tag + ".csv")));
      save_truth(res.table.probes, res.truth, outputs.add(fs::path("tables") / (tag + "_truth.csv")));
      row.rate = res.rate;
      row.coefficients = res.coefficients;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySplit) throw;
      warn(log, cell_tag(cell) + ": " + e.what() + "; cell reported as NA");
    }
    rows.push_back(std::move(row));
  }
  write_result_rows(rows, outputs.add("extract_rates.csv"));
  info(log, "wrote " + std::to_string(rows.size()) + " distance tables");
}

void run_sweep(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  if (cfg.mask == MaskMode::Square && cfg.n_max > std::min(cfg.resize_width, cfg.resize_height)) {
    bad_key("n_max", "exceeds the image grid");
  }
  if (cfg.mask == MaskMode::TopK && cfg.n_max * cfg.n_max > cfg.resize_width * cfg.resize_height) {
    bad_key("n_max", "n_max squared exceeds the number of coefficients");
  }
  Pipeline pipeline(cfg, load_catalog(cfg));
  fs::create_directories(cfg.out / "sweep");
  std::ofstream summary = open_out(outputs.add("sweep_summary.csv"));
  summary << "sensor,normalization,illumination,test_session,best_n,best_coefficients,best_rate,rate_at_max_n\n";
  for (const Cell& cell : cross_cells(cfg, true)) {
    std::vector<std::pair<std::size_t, double>> curve;
    try {
      curve = pipeline.sweep(cell, cfg.n_min, cfg.n_max);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySplit) throw;
      warn(log, cell_tag(cell) + ": " + e.what() + "; curve reported as NA");
      summary << sensor_name(cell.sensor) << ',' << (cell.normalize ? "YES" : "NO") << ','
              << illumination_name(cell.train_illumination) << ',' << cell.test_session << ",NA,NA,NA,NA\n";
      continue;
    }
    const std::string name = std::string(sensor_name(cell.sensor)) + "_" +
                             std::string(illumination_name(cell.train_illumination)) + "_norm-" +
                             (cell.normalize ? "yes" : "no") + "_S" + std::to_string(cell.test_session) + ".csv";
    std::ofstream out = open_out(outputs.add(fs::path("sweep") / name));
    out << "n,coefficients,rate\n";
    std::size_t best_n = curve.front().first;
    double best = -1.0;
    for (const auto& [n, rate] : curve) {
      out << n << ',' << n * n << ',' << format_rate(rate) << '\n';
      if (rate > best) {
        best = rate;
        best_n = n;
      }
    }
    summary << sensor_name(cell.sensor) << ',' << (cell.normalize ? "YES" : "NO") << ','
            << illumination_name(cell.train_illumination) << ',' << cell.test_session << ',' << best_n << ','
            << best_n * best_n << ',' << format_rate(best) << ',' << format_rate(curve.back().second) << '\n';
    info(log, cell_tag(cell) + ": best N=" + std::to_string(best_n) + " rate=" + format_rate(best));
  }
}

void run_mismatch(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  Pipeline pipeline(cfg, load_catalog(cfg));
  const auto rows = run_mismatch_matrix(pipeline, log);
  write_result_rows(rows, outputs.add("mismatch_results.csv"));
  write_mismatch_table(rows, cfg, outputs.add("table3.csv"));
  if (cfg.save_tables) {
    for (const auto& entry : fs::directory_iterator(cfg.out / "tables")) {
      outputs.add(fs::path("tables") / entry.path().filename());
    }
  }
  info(log, "evaluated " + std::to_string(rows.size()) + " mismatch cells");
}

void run_fuse(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  Pipeline pipeline(cfg, load_catalog(cfg));
  const auto rows = run_fusion_matrix(pipeline, log);
  write_result_rows(rows, outputs.add("fusion_results.csv"));
  write_fusion_table(rows, cfg, outputs.add("table4.csv"));
  for (const char* sub : {"contours", "tables"}) {
    if (!fs::is_directory(cfg.out / sub)) continue;
    if (std::string_view(sub) == "contours" && cfg.fusion != FusionRule::Grid) continue;
    if (std::string_view(sub) == "tables" && !cfg.save_tables) continue;
    for (const auto& entry : fs::directory_iterator(cfg.out / sub)) {
      outputs.add(fs::path(sub) / entry.path().filename());
    }
  }
  info(log, "evaluated " + std::to_string(rows.size()) + " fusion cells");
}

void run_grid(const ExperimentConfig& cfg, RunOutputs& outputs, const Logger& log) {
  if (cfg.table_a.empty()) bad_key("table_a", "grid needs table_a");
  if (cfg.table_b.empty()) bad_key("table_b", "grid needs table_b");
  if (cfg.truth.empty()) bad_key("truth", "grid needs a truth label file");
  std::vector<DistanceTable> tables{load_distance_table(cfg.table_a), load_distance_table(cfg.table_b)};
  if (!cfg.table_c.empty()) tables.push_back(load_distance_table(cfg.table_c));
  if (cfg.score_normalization) {
    for (auto& t : tables) t = normalize_scores(t);
  }
  const std::vector<int> truth = load_truth(cfg.truth, tables[0]);
  const GridResult grid = tables.size() == 2 ? grid_search_2(tables[0], tables[1], truth, cfg.grid_step)
                                             : grid_search_3(tables[0], tables[1], tables[2], truth, cfg.grid_step);
  export_contour(grid, outputs.add(grid.three_way() ? "grid_surface.csv" : "grid_curve.csv"));
  char buf[96];
  std::snprintf(buf, sizeof buf, "best alpha=%.2f beta=%.2f rate=%.2f simplex=%d", grid.best_alpha,
                grid.best_beta, grid.best_rate, grid.best_in_simplex ? 1 : 0);
  info(log, buf);
}

}  // namespace

void run_command(std::string_view command, const Config& config, const Logger& log) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    fail(ErrorCode::InvalidArgument, "unknown command '" + std::string(command) + "'");
  }
  const ExperimentConfig cfg = ExperimentConfig::from(config);
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create output directory " + cfg.out.string() + ": " + ec.message());
  RunOutputs outputs(cfg.out);
  if (command == "synth") run_synth(cfg, outputs, log);
  if (command == "scan") run_scan(cfg, outputs, log);
  if (command == "extract") run_extract(cfg, outputs, log);
  if (command == "sweep") run_sweep(cfg, outputs, log);
  if (command == "mismatch") run_mismatch(cfg, outputs, log);
  if (command == "fuse") run_fuse(cfg, outputs, log);
  if (command == "grid") run_grid(cfg, outputs, log);
  outputs.write_manifest(command, config);
}

}  // namespace msface
