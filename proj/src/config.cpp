#include "feclab/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace feclab {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::string body = trim(raw);
  if (!body.empty() && body.front() == '[' && body.back() == ']')
    body = body.substr(1, body.size() - 2);
  std::vector<std::string> items;
  std::string cur;
  for (char ch : body) {
    if (ch == ',') {
      items.push_back(strip_quotes(trim(cur)));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  const std::string last = strip_quotes(trim(cur));
  if (!last.empty()) items.push_back(last);
  return items;
}

// doubles are printed with enough digits to round-trip exactly
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    // prefer the shortest representation that still round-trips
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[64];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (std::strtod(shorter, nullptr) == v) return shorter;
    }
  }
  return buf;
}

}  // namespace

KvConfig KvConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return from_string(text.str(), path);
}

KvConfig KvConfig::from_string(const std::string& text, const std::string& origin) {
  KvConfig kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.entries_.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.entries_[key] = Entry{value, lineno, false};
  }
  return kv;
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

KvConfig::Entry& KvConfig::lookup(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  it->second.consumed = true;
  return it->second;
}

std::string KvConfig::get_string(const std::string& key) {
  return strip_quotes(lookup(key).value);
}

int64_t KvConfig::get_int(const std::string& key) {
  const Entry& e = lookup(key);
  char* end = nullptr;
  const long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0')
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                      "' is not an integer");
  return v;
}

uint64_t KvConfig::get_u64(const std::string& key) {
  const Entry& e = lookup(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0' || e.value.find('-') != std::string::npos)
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                      "' is not an unsigned integer");
  return v;
}

double KvConfig::get_double(const std::string& key) {
  const Entry& e = lookup(key);
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end == e.value.c_str() || *end != '\0')
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                      "' is not a number");
  return v;
}

std::vector<double> KvConfig::get_double_list(const std::string& key) {
  const Entry& e = lookup(key);
  std::vector<double> out;
  for (const std::string& item : split_list(e.value)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0')
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                        "' has a non-numeric list item '" + item + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                      "' must be a non-empty list");
  return out;
}

std::array<uint32_t, 2> KvConfig::get_octal_pair(const std::string& key) {
  const Entry& e = lookup(key);
  const auto items = split_list(e.value);
  if (items.size() != 2)
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                      "' must list exactly 2 octal generators");
  std::array<uint32_t, 2> out{};
  for (int i = 0; i < 2; ++i) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(items[i].c_str(), &end, 8);
    if (end == items[i].c_str() || *end != '\0')
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": generator '" + items[i] +
                        "' is not an octal number");
    out[i] = static_cast<uint32_t>(v);
  }
  return out;
}

std::string KvConfig::get_string_or(const std::string& key, const std::string& fallback) {
  return has(key) ? get_string(key) : fallback;
}

int64_t KvConfig::get_int_or(const std::string& key, int64_t fallback) {
  return has(key) ? get_int(key) : fallback;
}

void KvConfig::require_all_consumed() const {
  for (const auto& [key, e] : entries_)
    if (!e.consumed)
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");
}

TrainConfig train_config_from(KvConfig& kv) {
  TrainConfig cfg;
  cfg.code.generators = kv.get_octal_pair("code.generators");
  cfg.code.memory = static_cast<int>(kv.get_int("code.memory"));
  cfg.block_length = static_cast<int>(kv.get_int("block_length"));
  cfg.net.depth = static_cast<int>(kv.get_int("net.depth"));
  cfg.net.base_channels = static_cast<int>(kv.get_int("net.base_channels"));
  cfg.loss = kv.get_string("loss");
  cfg.batch_size = static_cast<int>(kv.get_int("batch_size"));
  cfg.num_samples = static_cast<int>(kv.get_int("num_samples"));
  cfg.epochs = static_cast<int>(kv.get_int("epochs"));
  cfg.lr = kv.get_double("lr");
  cfg.snr_min_db = kv.get_double("snr_min_db");
  cfg.snr_max_db = kv.get_double("snr_max_db");
  cfg.seed = kv.get_u64("seed");
  if (cfg.loss == "psnr")
    throw ConfigError("loss 'psnr' is not a training loss; use mse (PSNR is its monotone map)");
  if (cfg.loss != "bce" && cfg.loss != "mse" && cfg.loss != "ssim")
    throw ConfigError("loss must be one of bce, mse, ssim (got '" + cfg.loss + "')");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

std::string serialize_train_config(const TrainConfig& cfg) {
  std::ostringstream os;
  char g0[16], g1[16];
  std::snprintf(g0, sizeof(g0), "%o", cfg.code.generators[0]);
  std::snprintf(g1, sizeof(g1), "%o", cfg.code.generators[1]);
  os << "code.generators = [\"" << g0 << "\", \"" << g1 << "\"]\n";
  os << "code.memory = " << cfg.code.memory << "\n";
  os << "block_length = " << cfg.block_length << "\n";
  os << "net.depth = " << cfg.net.depth << "\n";
  os << "net.base_channels = " << cfg.net.base_channels << "\n";
  os << "loss = " << cfg.loss << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "num_samples = " << cfg.num_samples << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "lr = " << fmt_double(cfg.lr) << "\n";
  os << "snr_min_db = " << fmt_double(cfg.snr_min_db) << "\n";
  os << "snr_max_db = " << fmt_double(cfg.snr_max_db) << "\n";
  os << "seed = " << cfg.seed << "\n";
  return os.str();
}

SweepOptions sweep_options_from(KvConfig& kv, uint64_t seed) {
  SweepOptions opt;
  opt.snr_list_db = kv.get_double_list("sweep.snr_list_db");
  opt.min_bits = kv.get_int("sweep.min_bits");
  opt.min_errors = kv.get_int("sweep.min_errors");
  opt.max_bits = kv.get_int_or("sweep.max_bits", 0);
  opt.seed = seed;
  if (opt.min_bits < 1 || opt.min_errors < 0)
    throw ConfigError("sweep.min_bits must be >= 1 and sweep.min_errors >= 0");
  if (opt.max_bits != 0 && opt.max_bits < opt.min_bits)
    throw ConfigError("sweep.max_bits must be 0 (default) or >= sweep.min_bits");
  return opt;
}

OutputPaths output_paths_from(KvConfig& kv) {
  OutputPaths out;
  out.checkpoint = kv.get_string_or("out.checkpoint", "");
  out.train_log = kv.get_string_or("out.train_log", "");
  out.sweep_csv = kv.get_string_or("out.sweep_csv", "");
  out.sweep_svg = kv.get_string_or("out.sweep_svg", "");
  out.nve_report = kv.get_string_or("out.nve_report", "");
  return out;
}

}  // namespace feclab
