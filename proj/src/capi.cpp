#include "msface/msface.h"

#include <new>
#include <string>

#include "msface/dataset.hpp"
#include "msface/error.hpp"
#include "msface/fusion.hpp"
#include "msface/harness.hpp"
#include "msface/matcher.hpp"

struct msf_config {
  msface::Config config;
};

struct msf_table {
  msface::DistanceTable table;
};

struct msf_grid {
  msface::GridResult result;
};

namespace {

thread_local std::string last_error;

msf_status status_of(msface::ErrorCode code) {
  return static_cast<msf_status>(static_cast<int>(code) + 1);
}

msf_status fail_with(msf_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
msf_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return MSF_OK;
  } catch (const msface::Error& e) {
    return fail_with(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(MSF_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(MSF_INTERNAL, e.what());
  }
}

msf_status null_arg(const char* name) {
  return fail_with(MSF_INVALID_ARGUMENT, std::string("null argument '") + name + "'");
}

}  // namespace

extern "C" {

const char* msf_last_error(void) { return last_error.c_str(); }

const char* msf_status_string(msf_status status) {
  if (status == MSF_OK) return "ok";
  if (status == MSF_INTERNAL) return "internal error";
  if (status < MSF_OK || status > MSF_INTERNAL) return "unknown status";
  static thread_local std::string name;
  name = std::string(msface::to_string(static_cast<msface::ErrorCode>(status - 1)));
  return name.c_str();
}

const char* msf_version(void) { return "0.1.0"; }

msf_status msf_parse_code(const char* code, int strict, msf_sample_key* out) {
  if (!code) return null_arg("code");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto key = msface::parse_sample_code(code, strict != 0);
    *out = {key.person, key.session, static_cast<int>(key.sensor), static_cast<int>(key.illumination),
            key.sample};
  });
}

msf_status msf_format_code(const msf_sample_key* key, char* buffer, size_t size) {
  if (!key) return null_arg("key");
  if (!buffer) return null_arg("buffer");
  if (key->sensor < 0 || key->sensor > 2 || key->illumination < 0 || key->illumination > 2) {
    return fail_with(MSF_OUT_OF_RANGE, "sensor or illumination index out of range");
  }
  return guarded([&] {
    msface::SampleKey k{key->person, key->session, static_cast<msface::Sensor>(key->sensor),
                        static_cast<msface::Illumination>(key->illumination), key->sample};
    const std::string code = msface::format_sample_code(k);
    if (size < code.size() + 1) msface::fail(msface::ErrorCode::InvalidArgument, "buffer too small");
    code.copy(buffer, code.size());
    buffer[code.size()] = '\0';
  });
}

msf_status msf_config_create(msf_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new msf_config{}; });
}

void msf_config_destroy(msf_config* config) { delete config; }

msf_status msf_config_load(msf_config* config, const char* path) {
  if (!config) return null_arg("config");
  if (!path) return null_arg("path");
  return guarded([&] { config->config.load(path); });
}

msf_status msf_config_set(msf_config* config, const char* key, const char* value) {
  if (!config) return null_arg("config");
  if (!key) return null_arg("key");
  if (!value) return null_arg("value");
  return guarded([&] { config->config.set(key, value); });
}

msf_status msf_config_get(const msf_config* config, const char* key, const char** value) {
  if (!config) return null_arg("config");
  if (!key) return null_arg("key");
  if (!value) return null_arg("value");
  return guarded([&] { *value = config->config.get(key).c_str(); });
}

size_t msf_config_key_count(void) { return msface::Config::known_keys().size(); }

const char* msf_config_key_name(size_t index) {
  const auto& keys = msface::Config::known_keys();
  return index < keys.size() ? keys[index].name.data() : nullptr;
}

const char* msf_config_key_default(size_t index) {
  const auto& keys = msface::Config::known_keys();
  return index < keys.size() ? keys[index].default_value.data() : nullptr;
}

const char* msf_config_key_help(size_t index) {
  const auto& keys = msface::Config::known_keys();
  return index < keys.size() ? keys[index].help.data() : nullptr;
}

msf_status msf_run(const msf_config* config, const char* command, msf_log_fn log, void* user) {
  if (!config) return null_arg("config");
  if (!command) return null_arg("command");
  return guarded([&] {
    msface::Logger logger;
    if (log) logger = [log, user](const std::string& msg) { log(msg.c_str(), user); };
    msface::run_command(command, config->config, logger);
  });
}

size_t msf_command_count(void) { return msface::command_names().size(); }

const char* msf_command_name(size_t index) {
  const auto& names = msface::command_names();
  return index < names.size() ? names[index].data() : nullptr;
}

msf_status msf_table_load(const char* path, msf_table** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new msf_table{msface::load_distance_table(path)}; });
}

void msf_table_destroy(msf_table* table) { delete table; }

size_t msf_table_rows(const msf_table* table) { return table ? table->table.rows() : 0; }

size_t msf_table_cols(const msf_table* table) { return table ? table->table.cols() : 0; }

double msf_table_at(const msf_table* table, size_t probe, size_t tmpl) {
  if (!table || probe >= table->table.rows() || tmpl >= table->table.cols()) return 0.0;
  return table->table.at(probe, tmpl);
}

int msf_table_template_person(const msf_table* table, size_t tmpl) {
  if (!table || tmpl >= table->table.cols()) return -1;
  return table->table.templates[tmpl].person;
}

msf_status msf_table_identify(const msf_table* table, int* out, size_t count) {
  if (!table) return null_arg("table");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto predicted = msface::identify(table->table);
    if (count != predicted.size()) {
      msface::fail(msface::ErrorCode::LengthMismatch, "output holds " + std::to_string(count) + " entries for " +
                                                          std::to_string(predicted.size()) + " probes");
    }
    std::copy(predicted.begin(), predicted.end(), out);
  });
}

msf_status msf_table_load_truth(const msf_table* table, const char* path, int* out, size_t count) {
  if (!table) return null_arg("table");
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto truth = msface::load_truth(path, table->table);
    if (count != truth.size()) {
      msface::fail(msface::ErrorCode::LengthMismatch, "output holds " + std::to_string(count) + " entries for " +
                                                          std::to_string(truth.size()) + " probes");
    }
    std::copy(truth.begin(), truth.end(), out);
  });
}

msf_status msf_fractional_distance(const double* x, const double* y, size_t n, double p, double* out) {
  if ((!x || !y) && n > 0) return null_arg("x/y");
  if (!out) return null_arg("out");
  return guarded([&] { *out = msface::fractional_distance({x, n}, {y, n}, p); });
}

msf_status msf_grid_search(const msf_table* const* tables, size_t count, const int* truth, size_t n,
                           double step, msf_grid** out) {
  if (!tables) return null_arg("tables");
  if (!truth && n > 0) return null_arg("truth");
  if (!out) return null_arg("out");
  if (count != 2 && count != 3) return fail_with(MSF_WEIGHT_COUNT_MISMATCH, "grid search needs 2 or 3 tables");
  for (size_t i = 0; i < count; ++i) {
    if (!tables[i]) return null_arg("tables[i]");
  }
  return guarded([&] {
    const std::span<const int> t(truth, n);
    auto* grid = new msf_grid{};
    try {
      grid->result = count == 2 ? msface::grid_search_2(tables[0]->table, tables[1]->table, t, step)
                                : msface::grid_search_3(tables[0]->table, tables[1]->table, tables[2]->table, t, step);
    } catch (...) {
      delete grid;
      throw;
    }
    *out = grid;
  });
}

void msf_grid_destroy(msf_grid* grid) { delete grid; }

double msf_grid_best_alpha(const msf_grid* grid) { return grid ? grid->result.best_alpha : 0.0; }
double msf_grid_best_beta(const msf_grid* grid) { return grid ? grid->result.best_beta : 0.0; }
double msf_grid_best_rate(const msf_grid* grid) { return grid ? grid->result.best_rate : 0.0; }
int msf_grid_best_in_simplex(const msf_grid* grid) { return grid && grid->result.best_in_simplex ? 1 : 0; }
size_t msf_grid_points(const msf_grid* grid) { return grid ? grid->result.alphas.size() : 0; }

double msf_grid_rate(const msf_grid* grid, size_t ia, size_t ib) {
  if (!grid || ia >= grid->result.alphas.size()) return 0.0;
  if (grid->result.three_way() ? ib >= grid->result.betas.size() : ib != 0) return 0.0;
  return grid->result.rate(ia, ib);
}

msf_status msf_grid_export(const msf_grid* grid, const char* path) {
  if (!grid) return null_arg("grid");
  if (!path) return null_arg("path");
  return guarded([&] { msface::export_contour(grid->result, path); });
}

}  // extern "C"
