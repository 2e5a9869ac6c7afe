#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "feclab/pipeline.hpp"

namespace feclab {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat `key = value` config files: `#` comments, dotted keys for nesting,
// strings optionally quoted, lists in brackets or comma-separated. Every key
// must be consumed by the reader; unknown keys are errors so typos cannot
// silently change an experiment.
class KvConfig {
 public:
  static KvConfig from_file(const std::string& path);
  static KvConfig from_string(const std::string& text, const std::string& origin = "<config>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  int64_t get_int(const std::string& key);
  uint64_t get_u64(const std::string& key);
  double get_double(const std::string& key);
  std::vector<double> get_double_list(const std::string& key);
  // two octal strings, e.g.  ["7", "5"]  or  7,5
  std::array<uint32_t, 2> get_octal_pair(const std::string& key);

  // defaulted variants for optional keys
  std::string get_string_or(const std::string& key, const std::string& fallback);
  int64_t get_int_or(const std::string& key, int64_t fallback);

  void require_all_consumed() const;  // throws on the first unknown key

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool consumed = false;
  };

  Entry& lookup(const std::string& key);

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

TrainConfig train_config_from(KvConfig& kv);
std::string serialize_train_config(const TrainConfig& cfg);

SweepOptions sweep_options_from(KvConfig& kv, uint64_t seed);

// Optional out.* keys; empty string means "use the default under --out".
struct OutputPaths {
  std::string checkpoint, train_log, sweep_csv, sweep_svg, nve_report;
};

OutputPaths output_paths_from(KvConfig& kv);

}  // namespace feclab
