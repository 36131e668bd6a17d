#include "core/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/text.hpp"

namespace vbp {

namespace {

enum class KeyType { Double, Int, Bool, Enum, DoubleList, IntList, String };

struct SchemaEntry {
  const char* key;
  KeyType type;
  const char* default_value;
  const char* enum_values;  // pipe-separated, Enum only
};

// Single source of truth for every configuration key.
constexpr std::array<SchemaEntry, 36> kSchema = {{
    {"seed", KeyType::Int, "42", nullptr},
    {"target", KeyType::Enum, "both", "both|sbp|dbp"},
    {"fps", KeyType::Double, "30", nullptr},

    {"augment.mask_probability", KeyType::Double, "0.5", nullptr},
    {"augment.max_time_mask_fraction", KeyType::Double, "0.1", nullptr},
    {"augment.max_roi_masked", KeyType::Int, "1", nullptr},

    {"model.stage_blocks", KeyType::IntList, "2,2", nullptr},
    {"model.stage_channels", KeyType::IntList, "16,32", nullptr},
    {"model.hidden", KeyType::Int, "16", nullptr},
    {"model.bidirectional", KeyType::Bool, "1", nullptr},
    {"model.clip_length", KeyType::Int, "150", nullptr},
    {"model.clips", KeyType::Int, "3", nullptr},
    {"model.alpha", KeyType::Double, "0.5", nullptr},
    {"model.beta", KeyType::Double, "0.5", nullptr},
    {"model.class_refs.sbp", KeyType::DoubleList, "100,115,130,150", nullptr},
    {"model.class_refs.dbp", KeyType::DoubleList, "65,75,85,95", nullptr},

    {"groups.sbp", KeyType::DoubleList, "110,120,140", nullptr},
    {"groups.dbp", KeyType::DoubleList, "70,80,90", nullptr},

    {"train.lr", KeyType::Double, "0.001", nullptr},
    {"train.momentum", KeyType::Double, "0.9", nullptr},
    {"train.batch_size", KeyType::Int, "8", nullptr},
    {"train.epochs", KeyType::Int, "20", nullptr},
    {"train.lr_decay", KeyType::Double, "1", nullptr},
    {"train.folds", KeyType::Int, "5", nullptr},

    {"synth.n_samples", KeyType::Int, "100", nullptr},
    {"synth.frames", KeyType::Int, "450", nullptr},
    {"synth.fps", KeyType::Double, "30", nullptr},
    {"synth.freq_lo", KeyType::Double, "0.9", nullptr},
    {"synth.freq_hi", KeyType::Double, "2.4", nullptr},
    {"synth.amp_lo", KeyType::Double, "1", nullptr},
    {"synth.amp_hi", KeyType::Double, "6", nullptr},
    {"synth.noise_sd", KeyType::Double, "0", nullptr},
    // Optional lo:hi:weight bands; empty means uniform over [freq_lo, freq_hi].
    {"synth.freq_bands", KeyType::String, "", nullptr},
    {"synth.law.sbp", KeyType::DoubleList, "60,35,8,10", nullptr},
    {"synth.law.dbp", KeyType::DoubleList, "45,20,4,5", nullptr},
    {"synth.seed", KeyType::Int, "1", nullptr},
}};

const SchemaEntry* find_entry(std::string_view key) {
  for (const auto& e : kSchema) {
    if (key == e.key) return &e;
  }
  return nullptr;
}

std::string canonicalize(const SchemaEntry& entry, std::string_view raw) {
  const std::string value(trim(raw));
  auto fail = [&](const char* what) {
    throw ConfigError(msg("config key '", entry.key, "': ", what, " (got '", value, "')"));
  };
  switch (entry.type) {
    case KeyType::Double: {
      auto v = parse_double(value);
      if (!v) fail("expected a number");
      return format_double(*v);
    }
    case KeyType::Int: {
      auto v = parse_int(value);
      if (!v) fail("expected an integer");
      return format_u64(static_cast<std::uint64_t>(*v));
    }
    case KeyType::Bool: {
      if (value == "1" || value == "true" || value == "on") return "1";
      if (value == "0" || value == "false" || value == "off") return "0";
      fail("expected a boolean");
      return {};
    }
    case KeyType::Enum: {
      for (auto opt : split(entry.enum_values, '|')) {
        if (value == opt) return value;
      }
      fail("not one of the allowed values");
      return {};
    }
    case KeyType::DoubleList: {
      std::string out;
      for (auto part : split(value, ',')) {
        auto v = parse_double(trim(part));
        if (!v) fail("expected a comma-separated list of numbers");
        if (!out.empty()) out += ',';
        out += format_double(*v);
      }
      return out;
    }
    case KeyType::IntList: {
      std::string out;
      for (auto part : split(value, ',')) {
        auto v = parse_int(trim(part));
        if (!v) fail("expected a comma-separated list of integers");
        if (!out.empty()) out += ',';
        out += format_u64(static_cast<std::uint64_t>(*v));
      }
      return out;
    }
    case KeyType::String:
      return value;
  }
  return value;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& e : kSchema) values_[e.key] = e.default_value;
}

namespace {

RunConfig parse_config_stream(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(msg(origin, ":", lineno, ": expected key=value"));
    }
    cfg.set(trim(sv.substr(0, eq)), trim(sv.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(msg("cannot open config file: ", path));
  return parse_config_stream(in, path);
}

RunConfig RunConfig::from_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config_stream(in, "<embedded config>");
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "preset") {
    apply_preset(value);
    return;
  }
  const SchemaEntry* entry = find_entry(key);
  if (!entry) throw ConfigError(msg("unknown config key: '", key, "'"));
  values_[entry->key] = canonicalize(*entry, value);
}

void RunConfig::apply_overrides(const std::vector<std::string>& key_eq_value) {
  for (const auto& kv : key_eq_value) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(msg("override must be key=value: '", kv, "'"));
    }
    set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) throw ConfigError(msg("unknown config key: '", key, "'"));
  return it->second;
}

double RunConfig::get_double(std::string_view key) const {
  auto v = parse_double(get(key));
  if (!v) throw ConfigError(msg("config key '", key, "' is not a number"));
  return *v;
}

std::int64_t RunConfig::get_int(std::string_view key) const {
  auto v = parse_int(get(key));
  if (!v) throw ConfigError(msg("config key '", key, "' is not an integer"));
  return *v;
}

bool RunConfig::get_bool(std::string_view key) const { return get(key) == "1"; }

std::vector<double> RunConfig::get_list(std::string_view key) const {
  std::vector<double> out;
  const std::string& raw = get(key);
  if (raw.empty()) return out;
  for (auto part : split(raw, ',')) {
    auto v = parse_double(part);
    if (!v) throw ConfigError(msg("config key '", key, "' is not a number list"));
    out.push_back(*v);
  }
  return out;
}

std::vector<int> RunConfig::get_int_list(std::string_view key) const {
  std::vector<int> out;
  for (double v : get_list(key)) out.push_back(static_cast<int>(v));
  return out;
}

std::uint64_t RunConfig::seed() const { return static_cast<std::uint64_t>(get_int("seed")); }

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) {  // std::map iterates in sorted key order
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

void RunConfig::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write config file: ", path));
  out << serialize();
}

void RunConfig::apply_preset(std::string_view name) {
  if (name == "tiny") {
    set("model.stage_blocks", "2");
    set("model.stage_channels", "8");
    set("model.hidden", "8");
  } else if (name == "desk") {
    set("model.stage_blocks", "2,2");
    set("model.stage_channels", "16,32");
    set("model.hidden", "16");
  } else if (name == "full") {
    set("model.stage_blocks", "2,2,2,2");
    set("model.stage_channels", "64,128,256,512");
    set("model.hidden", "64");
  } else {
    throw ConfigError(msg("unknown preset: '", name, "' (expected tiny, desk, or full)"));
  }
}

}  // namespace vbp
