#include <doctest.h>

#include "feclab/config.hpp"

using namespace feclab;

namespace {

const char* kFullConfig = R"(
# toy experiment
code.generators = ["7", "5"]
code.memory = 2
block_length = 49
net.depth = 2
net.base_channels = 8
loss = bce
batch_size = 100
num_samples = 20000
epochs = 30
lr = 0.001
snr_min_db = 0
snr_max_db = 8
seed = 1
sweep.snr_list_db = 0, 2, 4, 6
sweep.min_bits = 100000
sweep.min_errors = 100
)";

}  // namespace

TEST_CASE("full config parses and round-trips") {
  KvConfig kv = KvConfig::from_string(kFullConfig);
  const TrainConfig cfg = train_config_from(kv);
  CHECK(cfg.code.generators == std::array<uint32_t, 2>{07, 05});
  CHECK(cfg.code.memory == 2);
  CHECK(cfg.block_length == 49);
  CHECK(cfg.net.depth == 2);
  CHECK(cfg.net.base_channels == 8);
  CHECK(cfg.loss == "bce");
  CHECK(cfg.lr == 0.001);
  CHECK(cfg.seed == 1);

  const SweepOptions sweep = sweep_options_from(kv, cfg.seed);
  CHECK(sweep.snr_list_db == std::vector<double>{0, 2, 4, 6});
  CHECK(sweep.min_bits == 100000);
  CHECK(sweep.min_errors == 100);
  kv.require_all_consumed();

  // serialize -> parse -> identical config
  KvConfig kv2 = KvConfig::from_string(serialize_train_config(cfg));
  const TrainConfig cfg2 = train_config_from(kv2);
  kv2.require_all_consumed();
  CHECK(cfg2 == cfg);
}

TEST_CASE("doubles round trip through serialization exactly") {
  KvConfig kv = KvConfig::from_string(kFullConfig);
  TrainConfig cfg = train_config_from(kv);
  cfg.lr = 0.0001230000000017;
  cfg.snr_max_db = 7.9999999999999;
  KvConfig kv2 = KvConfig::from_string(serialize_train_config(cfg));
  const TrainConfig cfg2 = train_config_from(kv2);
  CHECK(cfg2.lr == cfg.lr);
  CHECK(cfg2.snr_max_db == cfg.snr_max_db);
}

TEST_CASE("unknown keys are rejected with the line number") {
  KvConfig kv = KvConfig::from_string(std::string(kFullConfig) + "net.dpeth = 2\n", "exp.cfg");
  (void)train_config_from(kv);
  (void)sweep_options_from(kv, 1);
  bool threw = false;
  try {
    kv.require_all_consumed();
  } catch (const ConfigError& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("net.dpeth") != std::string::npos);
    CHECK(msg.find("exp.cfg:") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("missing keys name the key") {
  KvConfig kv = KvConfig::from_string("code.memory = 2\n");
  bool threw = false;
  try {
    (void)train_config_from(kv);
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("code.generators") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("psnr is rejected with a hint, bad losses are rejected") {
  std::string text(kFullConfig);
  const size_t at = text.find("loss = bce");
  text.replace(at, 10, "loss = psnr");
  KvConfig kv = KvConfig::from_string(text);
  bool threw = false;
  try {
    (void)train_config_from(kv);
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("use mse") != std::string::npos);
  }
  CHECK(threw);

  text.replace(at, 11, "loss = nope");
  KvConfig kv2 = KvConfig::from_string(text);
  CHECK_THROWS_AS(train_config_from(kv2), ConfigError);
}

TEST_CASE("generator list accepts bare and quoted octal forms") {
  KvConfig a = KvConfig::from_string("g = [\"133\", \"171\"]\n");
  CHECK(a.get_octal_pair("g") == std::array<uint32_t, 2>{0133, 0171});
  KvConfig b = KvConfig::from_string("g = 7,5\n");
  CHECK(b.get_octal_pair("g") == std::array<uint32_t, 2>{7, 5});
  KvConfig c = KvConfig::from_string("g = [\"9\", \"5\"]\n");
  CHECK_THROWS_AS(c.get_octal_pair("g"), ConfigError);
  KvConfig d = KvConfig::from_string("g = [\"7\"]\n");
  CHECK_THROWS_AS(d.get_octal_pair("g"), ConfigError);
}

TEST_CASE("malformed lines and duplicates are rejected") {
  CHECK_THROWS_AS(KvConfig::from_string("just some words\n"), ConfigError);
  CHECK_THROWS_AS(KvConfig::from_string("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(KvConfig::from_string("= 3\n"), ConfigError);
  // comments and blank lines are fine
  KvConfig kv = KvConfig::from_string("# note\n\na = 1 # trailing\n");
  CHECK(kv.get_int("a") == 1);
}

TEST_CASE("typed getters validate") {
  KvConfig kv = KvConfig::from_string("a = x\nb = 1.5\nc = -3\n");
  CHECK_THROWS_AS(kv.get_int("a"), ConfigError);
  CHECK_THROWS_AS(kv.get_int("b"), ConfigError);
  CHECK_THROWS_AS(kv.get_u64("c"), ConfigError);
  CHECK(kv.get_double("b") == 1.5);
}
