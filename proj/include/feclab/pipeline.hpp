#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "feclab/coding.hpp"
#include "feclab/gridmap.hpp"
#include "feclab/losses.hpp"
#include "feclab/unet.hpp"
#include "feclab/viterbi.hpp"

namespace feclab {

struct TrainConfig {
  CodeSpec code;
  int block_length = 49;  // L info bits per sample
  UNetConfig net;
  std::string loss = "bce";  // bce | mse | ssim
  int batch_size = 100;
  int num_samples = 20000;
  int epochs = 30;
  double lr = 1e-3;  // constant; no schedule
  double snr_min_db = 0.0;
  double snr_max_db = 8.0;
  uint64_t seed = 1;

  void validate() const;
  GridSpec grid() const;
  bool operator==(const TrainConfig&) const = default;
};

struct NamedTensorF {
  std::string name;
  std::vector<int64_t> dims;
  std::vector<float> data;
};

class CheckpointError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Serialized model + optimizer state. save/load round-trips byte-identically
// and resuming from a checkpoint continues training bit-for-bit as if it had
// never stopped (same seed schedule).
struct Checkpoint {
  static constexpr uint32_t kFormatVersion = 1;

  TrainConfig config;
  GridSpec grid;
  int64_t step = 0;  // completed optimizer steps
  std::vector<NamedTensorF> params;
  std::vector<NamedTensorF> adam_m, adam_v;

  int64_t param_count() const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

UNet<float> model_from_checkpoint(const Checkpoint& ck);

// i.i.d. uniform messages, deterministic from seed. Channel noise is not
// part of the dataset; it is drawn fresh per epoch/batch during training.
std::vector<Bits> gen_dataset(const CodeSpec& code, int block_length, int num_samples,
                              uint64_t seed);

// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
// The learning rate stays constant; there is no schedule. Moments are flat
// over the concatenation of the parameter segments.
struct AdamState {
  std::vector<float> m, v;
  int64_t step = 0;
};

void adam_step(const std::vector<std::pair<float*, int64_t>>& params, const float* grads,
               AdamState& st, double lr);

struct EpochLog {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double mean_batch_ber = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Full training loop: per batch draw SNR ~ U[snr_min, snr_max] dB, channel
// each message at that SNR, forward, masked loss, backward, Adam step.
// Deterministic from cfg.seed regardless of thread count. With `resume` the
// run continues at the checkpoint's epoch boundary up to cfg.epochs total.
TrainResult train(const TrainConfig& cfg, const Checkpoint* resume = nullptr,
                  const EpochCallback& on_epoch = nullptr);

enum class DecoderKind { kViterbi, kUnet, kUncoded };

std::string decoder_name(DecoderKind kind);

struct SweepOptions {
  std::vector<double> snr_list_db;
  int64_t min_bits = 100000;
  int64_t min_errors = 100;
  int64_t max_bits = 0;  // 0: defaults to 100 * min_bits
  uint64_t seed = 1;
};

struct SweepPoint {
  double snr_db = 0.0;
  BerReport report;
};

// Monte-Carlo BER sweep. Each point simulates fresh blocks until it has seen
// at least min_bits and either min_errors errors or the bit cap. Every
// (point, block) pair owns a derived RNG stream, so results do not depend on
// scheduling. kUncoded sends raw message bits (rate 1, the Q-function
// baseline); coded decoders run at rate 1/2.
std::vector<SweepPoint> ber_sweep(DecoderKind kind, const CodeSpec& code, int block_length,
                                  const SweepOptions& opt, const UNet<float>* net = nullptr,
                                  const GridSpec* grid = nullptr);

struct LatencyReport {
  double median_single_s = 0.0;  // median over single-block decodes
  double blocks_per_s = 0.0;     // batched throughput, all threads
  int blocks = 0;
};

LatencyReport measure_latency(const std::function<void()>& decode_one_block, int n_blocks);

// CSV emission/parsing; headers are part of the external interface.
inline constexpr const char* kSweepCsvHeader = "decoder,code,snr_db,bits,bit_errors,ber";
inline constexpr const char* kTrainLogCsvHeader = "epoch,mean_loss,mean_batch_ber";

void write_sweep_csv(const std::string& path, const std::string& decoder,
                     const std::string& code_name, const std::vector<SweepPoint>& points);

struct SweepCsvRow {
  std::string decoder, code;
  double snr_db = 0.0;
  int64_t bits = 0, bit_errors = 0;
  double ber = 0.0;
};

std::vector<SweepCsvRow> read_sweep_csv(const std::string& path);

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace feclab
