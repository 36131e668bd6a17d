#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vbp {

// Flat key=value run configuration with section prefixes (augment.*, model.*,
// groups.*, train.*, synth.*). Every key has a schema entry with a typed
// default; unknown keys are rejected. serialize() is canonical (sorted keys,
// shortest round-trip floats) so embedding it in output artifacts is
// byte-stable.
class RunConfig {
 public:
  RunConfig();  // defaults

  static RunConfig load_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  void set(std::string_view key, std::string_view value);
  void apply_overrides(const std::vector<std::string>& key_eq_value);

  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<double> get_list(std::string_view key) const;
  std::vector<int> get_int_list(std::string_view key) const;
  std::uint64_t seed() const;

  std::string serialize() const;
  void save_file(const std::string& path) const;

  // Model/size presets expand to plain keys ("tiny", "desk", "full").
  void apply_preset(std::string_view name);

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vbp
