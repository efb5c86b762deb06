#pragma once

#include <map>
#include <string>
#include <vector>

#include "season/decode.hpp"
#include "season/model.hpp"
#include "season/train.hpp"

namespace season::config {

// Flat sectioned key-value file:
//   [model]
//   d_model = 128
// '#' starts a comment. Keys are addressed as "section.key".
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key,
                  int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;

  // "section.key=value"; unknown sections/keys are accepted here and
  // validated by the consumer.
  void set(const std::string& dotted_key, const std::string& value);

  std::string serialize() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Effective run settings: config file merged with flag overrides.
struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  decode::DecodeConfig decode;
  int max_src = 512;
  int max_tgt = 128;
  std::vector<double> percentiles = {0.15, 0.50};
  uint64_t seed = 1;

  static RunConfig from_config(const ConfigFile& file);
  // The settings serialized back into file form (written next to outputs
  // for provenance).
  ConfigFile to_config() const;
  void write_effective(const std::string& out_dir) const;
};

std::vector<double> parse_fraction_list(const std::string& csv);
decode::DecodeConfig::Estimation parse_estimation(const std::string& name);

}  // namespace season::config
