#include "feclab/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace feclab {

namespace {

// RNG stream tags; every consumer of randomness owns a derived stream so
// thread scheduling can never reorder draws.
constexpr uint64_t kTagDataset = 1;
constexpr uint64_t kTagInit = 2;
constexpr uint64_t kTagSnr = 3;
constexpr uint64_t kTagNoise = 4;
constexpr uint64_t kTagSweep = 5;
constexpr uint64_t kTagOrder = 6;

constexpr int kChunk = 32;  // samples processed in parallel per gradient chunk

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

int make_loss_node(Tape<float>& tape, const std::string& loss, int pred,
                   const Tensor<float>& target, const std::vector<uint8_t>& mask) {
  if (loss == "bce") return bce_loss(tape, pred, target, mask);
  if (loss == "mse") return mse_loss(tape, pred, target, mask);
  if (loss == "ssim") return ssim_loss(tape, pred, target, mask);
  throw std::invalid_argument("unknown loss '" + loss + "'");
}

Tensor<float> to_float_input(const InputGrid& g) {
  Tensor<float> x(g.values.shape);
  for (int64_t i = 0; i < g.values.size(); ++i) x.data[i] = float(g.values.data[i]);
  return x;
}

}  // namespace

void TrainConfig::validate() const {
  code.validate();
  net.validate();
  if (block_length < 1) throw std::invalid_argument("block_length must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (batch_size > num_samples)
    throw std::invalid_argument("batch_size must not exceed num_samples");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (snr_min_db > snr_max_db) throw std::invalid_argument("snr_min_db must be <= snr_max_db");
  if (loss != "bce" && loss != "mse" && loss != "ssim")
    throw std::invalid_argument("loss must be one of bce, mse, ssim");
}

GridSpec TrainConfig::grid() const {
  return grid_spec_for(block_length, code.memory, net.depth);
}

std::vector<Bits> gen_dataset(const CodeSpec& code, int block_length, int num_samples,
                              uint64_t seed) {
  code.validate();
  if (block_length < 1 || num_samples < 1)
    throw std::invalid_argument("gen_dataset: bad sizes");
  Rng rng = Rng::derive(seed, {kTagDataset});
  std::vector<Bits> out(num_samples);
  for (auto& msg : out) {
    msg.resize(block_length);
    for (auto& b : msg) b = uint8_t(rng.next_bit());
  }
  return out;
}

void adam_step(const std::vector<std::pair<float*, int64_t>>& params, const float* grads,
               AdamState& st, double lr) {
  ++st.step;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, double(st.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, double(st.step));
  int64_t off = 0;
  for (const auto& [ptr, count] : params) {
    for (int64_t i = 0; i < count; ++i) {
      const int64_t j = off + i;
      const double g = double(grads[j]);
      const double m = kAdamBeta1 * double(st.m[j]) + (1.0 - kAdamBeta1) * g;
      const double v = kAdamBeta2 * double(st.v[j]) + (1.0 - kAdamBeta2) * g * g;
      st.m[j] = float(m);
      st.v[j] = float(v);
      const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
      ptr[i] = float(double(ptr[i]) - update);
    }
    off += count;
  }
}

namespace {

std::vector<std::pair<float*, int64_t>> param_segments(UNet<float>& net) {
  std::vector<std::pair<float*, int64_t>> segs;
  for (auto& p : net.params()) segs.emplace_back(p.value.data.data(), p.value.size());
  return segs;
}

Checkpoint make_checkpoint(const TrainConfig& cfg, const GridSpec& grid, const UNet<float>& net,
                           const AdamState& adam) {
  Checkpoint ck;
  ck.config = cfg;
  ck.grid = grid;
  ck.step = adam.step;
  int64_t off = 0;
  for (const auto& p : net.params()) {
    NamedTensorF t;
    t.name = p.name;
    t.dims = p.dims;
    t.data = p.value.data;
    ck.params.push_back(t);
    NamedTensorF m = t, v = t;
    std::copy_n(adam.m.begin() + off, p.value.size(), m.data.begin());
    std::copy_n(adam.v.begin() + off, p.value.size(), v.data.begin());
    ck.adam_m.push_back(std::move(m));
    ck.adam_v.push_back(std::move(v));
    off += p.value.size();
  }
  return ck;
}

}  // namespace

UNet<float> model_from_checkpoint(const Checkpoint& ck) {
  UNet<float> net(ck.config.net, 0);
  auto& params = net.params();
  if (params.size() != ck.params.size())
    throw CheckpointError("checkpoint does not match the architecture (parameter count)");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != ck.params[i].name ||
        params[i].value.size() != int64_t(ck.params[i].data.size()))
      throw CheckpointError("checkpoint does not match the architecture at '" +
                            ck.params[i].name + "'");
    std::copy(ck.params[i].data.begin(), ck.params[i].data.end(),
              params[i].value.data.begin());
  }
  return net;
}

TrainResult train(const TrainConfig& cfg, const Checkpoint* resume,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const GridSpec grid = cfg.grid();
  const int L = cfg.block_length;
  const int num_batches = (cfg.num_samples + cfg.batch_size - 1) / cfg.batch_size;

  // fixed message set; noise and SNR are resampled every epoch/batch
  const std::vector<Bits> dataset =
      gen_dataset(cfg.code, L, cfg.num_samples, cfg.seed);
  std::vector<SymbolBlock> modulated(dataset.size());
  std::vector<TargetGrid> targets(dataset.size());
  std::vector<Tensor<float>> targets_f(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    modulated[i] = modulate(interleave(encode(cfg.code, dataset[i])));
    targets[i] = to_target_grid(dataset[i], grid);
    targets_f[i] = Tensor<float>(targets[i].values.shape);
    for (int64_t j = 0; j < targets[i].values.size(); ++j)
      targets_f[i].data[j] = float(targets[i].values.data[j]);
  }
  const std::vector<uint8_t> target_mask = targets.empty()
                                               ? std::vector<uint8_t>()
                                               : targets[0].mask;

  UNet<float> net(cfg.net, Rng::derive(cfg.seed, {kTagInit}).next_u64());
  const int64_t n_params = net.count_params();
  AdamState adam;
  adam.m.assign(size_t(n_params), 0.0f);
  adam.v.assign(size_t(n_params), 0.0f);

  int start_epoch = 0;
  if (resume) {
    TrainConfig a = resume->config, b = cfg;
    a.epochs = b.epochs = 0;  // resuming may extend the epoch budget only
    if (!(a == b)) throw std::invalid_argument("resume: config does not match checkpoint");
    if (resume->step % num_batches != 0)
      throw std::invalid_argument("resume: checkpoint not at an epoch boundary");
    net = model_from_checkpoint(*resume);
    adam.step = resume->step;
    int64_t off = 0;
    for (size_t i = 0; i < resume->adam_m.size(); ++i) {
      std::copy(resume->adam_m[i].data.begin(), resume->adam_m[i].data.end(),
                adam.m.begin() + off);
      std::copy(resume->adam_v[i].data.begin(), resume->adam_v[i].data.end(),
                adam.v.begin() + off);
      off += int64_t(resume->adam_m[i].data.size());
    }
    start_epoch = int(resume->step / num_batches);
  }

  auto segs = param_segments(net);
  std::vector<float> grads(size_t(n_params), 0.0f);
  std::vector<double> grad_acc(size_t(n_params), 0.0);

  const int chunk_cap = std::min(kChunk, cfg.batch_size);
  std::vector<std::vector<float>> chunk_grads(chunk_cap,
                                              std::vector<float>(size_t(n_params), 0.0f));
  std::vector<double> chunk_loss(chunk_cap, 0.0);
  std::vector<int64_t> chunk_errs(chunk_cap, 0);

  TrainResult result;
  std::vector<int> order(dataset.size());
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    Rng snr_rng = Rng::derive(cfg.seed, {kTagSnr, uint64_t(epoch)});
    // fresh epoch-seeded sample order; derived per epoch so resume replays it
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    Rng order_rng = Rng::derive(cfg.seed, {kTagOrder, uint64_t(epoch)});
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[order_rng.next_u64() % i]);
    double loss_sum = 0.0;
    double ber_sum = 0.0;
    for (int b = 0; b < num_batches; ++b) {
      const int begin = b * cfg.batch_size;
      const int bs = std::min(cfg.num_samples - begin, cfg.batch_size);
      const double snr_db = snr_rng.next_uniform(cfg.snr_min_db, cfg.snr_max_db);
      const double sigma = noise_sigma(snr_db, 0.5);

      std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
      double batch_loss = 0.0;
      int64_t batch_errs = 0;

      for (int chunk = 0; chunk < bs; chunk += chunk_cap) {
        const int m = std::min(chunk_cap, bs - chunk);
#pragma omp parallel for schedule(static)
        for (int j = 0; j < m; ++j) {
          const int s = order[begin + chunk + j];
          Rng noise_rng = Rng::derive(cfg.seed, {kTagNoise, uint64_t(epoch), uint64_t(s)});
          const SymbolBlock rx = add_awgn(modulated[s], sigma, noise_rng);
          const Tensor<float> x = to_float_input(to_input_grid(rx, grid));

          Tape<float> tape;
          const auto bound = net.forward(tape, tape.leaf(x));
          const int loss_node =
              make_loss_node(tape, cfg.loss, bound.output, targets_f[s], target_mask);
          tape.backward(loss_node);

          chunk_loss[j] = double(tape.value(loss_node).data[0]);
          const Tensor<float>& probs = tape.value(bound.output);
          int64_t errs = 0;
          for (int k = 0; k < L; ++k)
            if ((probs.data[k] > 0.5f ? 1 : 0) != dataset[s][k]) ++errs;
          chunk_errs[j] = errs;

          float* dst = chunk_grads[j].data();
          for (size_t pi = 0; pi < net.params().size(); ++pi) {
            const Tensor<float>& g = tape.grad(bound.param_nodes[pi]);
            std::copy(g.data.begin(), g.data.end(), dst);
            dst += g.size();
          }
        }
        // reduce in sample order: results do not depend on thread count
        for (int j = 0; j < m; ++j) {
          batch_loss += chunk_loss[j];
          batch_errs += chunk_errs[j];
          const float* src = chunk_grads[j].data();
          for (int64_t e = 0; e < n_params; ++e) grad_acc[e] += double(src[e]);
        }
      }

      batch_loss /= bs;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "non-finite loss at step " << (adam.step + 1) << " (batch SNR " << snr_db
           << " dB)";
        throw std::runtime_error(os.str());
      }
      for (int64_t e = 0; e < n_params; ++e) grads[e] = float(grad_acc[e] / bs);
      adam_step(segs, grads.data(), adam, cfg.lr);

      loss_sum += batch_loss;
      ber_sum += double(batch_errs) / (double(bs) * L);
    }
    EpochLog log;
    log.epoch = epoch + 1;
    log.mean_loss = loss_sum / num_batches;
    log.mean_batch_ber = ber_sum / num_batches;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  result.checkpoint = make_checkpoint(cfg, grid, net, adam);
  return result;
}

std::string decoder_name(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::kViterbi: return "viterbi";
    case DecoderKind::kUnet: return "unet";
    case DecoderKind::kUncoded: return "uncoded";
  }
  return "?";
}

std::vector<SweepPoint> ber_sweep(DecoderKind kind, const CodeSpec& code, int block_length,
                                  const SweepOptions& opt, const UNet<float>* net,
                                  const GridSpec* grid) {
  if (opt.snr_list_db.empty()) throw std::invalid_argument("sweep: empty SNR list");
  if (opt.min_bits < 10000) throw std::invalid_argument("sweep: min_bits must be >= 10^4");
  if (block_length < 1) throw std::invalid_argument("sweep: block_length must be >= 1");
  const int64_t max_bits = opt.max_bits > 0 ? opt.max_bits : 100 * opt.min_bits;

  Trellis trellis;
  if (kind == DecoderKind::kViterbi) trellis = build_trellis(code);
  if (kind == DecoderKind::kUnet) {
    if (!net || !grid) throw std::invalid_argument("sweep: unet decoder needs a model and grid");
    if (grid->info_bits != block_length || grid->memory != code.memory)
      throw std::invalid_argument("grid mismatch");
  }
  if (kind != DecoderKind::kUncoded) code.validate();

  const int L = block_length;
  const int round_blocks = 256;

  std::vector<SweepPoint> points;
  for (size_t pi = 0; pi < opt.snr_list_db.size(); ++pi) {
    const double snr_db = opt.snr_list_db[pi];
    const double sigma =
        noise_sigma(snr_db, kind == DecoderKind::kUncoded ? 1.0 : 0.5);
    int64_t bits = 0, errors = 0, next_block = 0;
    while (bits < opt.min_bits || (errors < opt.min_errors && bits < max_bits)) {
      int64_t round_errs = 0;
#pragma omp parallel for schedule(static) reduction(+ : round_errs)
      for (int r = 0; r < round_blocks; ++r) {
        Rng rng = Rng::derive(opt.seed, {kTagSweep, uint64_t(pi), uint64_t(next_block + r)});
        Bits msg(L);
        for (auto& bit : msg) bit = uint8_t(rng.next_bit());
        int64_t e = 0;
        if (kind == DecoderKind::kUncoded) {
          const SymbolBlock rx = add_awgn(modulate(msg), sigma, rng);
          for (int k = 0; k < L; ++k) e += (rx[k] < 0.0 ? 1 : 0) != msg[k];
        } else {
          const SymbolBlock rx =
              add_awgn(modulate(interleave(encode(code, msg))), sigma, rng);
          if (kind == DecoderKind::kViterbi) {
            const DecodeResult dec = viterbi_decode(trellis, rx);
            for (int k = 0; k < L; ++k) e += dec.message[k] != msg[k];
          } else {
            const Tensor<float> probs = net->infer(to_float_input(to_input_grid(rx, *grid)));
            for (int k = 0; k < L; ++k) e += (probs.data[k] > 0.5f ? 1 : 0) != msg[k];
          }
        }
        round_errs += e;
      }
      errors += round_errs;
      bits += int64_t(round_blocks) * L;
      next_block += round_blocks;
    }
    SweepPoint p;
    p.snr_db = snr_db;
    p.report.bits_counted = bits;
    p.report.bit_errors = errors;
    p.report.ber = double(errors) / double(bits);
    points.push_back(p);
  }
  return points;
}

LatencyReport measure_latency(const std::function<void()>& decode_one_block, int n_blocks) {
  if (n_blocks < 1) throw std::invalid_argument("measure_latency: need at least one block");
  using clock = std::chrono::steady_clock;
  LatencyReport rep;
  rep.blocks = n_blocks;

  std::vector<double> times(n_blocks);
  for (int i = 0; i < n_blocks; ++i) {
    const auto t0 = clock::now();
    decode_one_block();
    times[i] = std::chrono::duration<double>(clock::now() - t0).count();
  }
  std::sort(times.begin(), times.end());
  rep.median_single_s = times[n_blocks / 2];

  const auto t0 = clock::now();
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_blocks; ++i) decode_one_block();
  const double dt = std::chrono::duration<double>(clock::now() - t0).count();
  rep.blocks_per_s = dt > 0.0 ? double(n_blocks) / dt : 0.0;
  return rep;
}

void write_sweep_csv(const std::string& path, const std::string& decoder,
                     const std::string& code_name, const std::vector<SweepPoint>& points) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << kSweepCsvHeader << "\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%lld,%lld,%.10e", decoder.c_str(),
                  code_name.c_str(), p.snr_db, (long long)p.report.bits_counted,
                  (long long)p.report.bit_errors, p.report.ber);
    os << buf << "\n";
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<SweepCsvRow> read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepCsvHeader)
    throw std::runtime_error(path + ": unexpected header '" + line + "'");
  std::vector<SweepCsvRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (fields.size() != 6)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    SweepCsvRow row;
    row.decoder = fields[0];
    row.code = fields[1];
    row.snr_db = std::strtod(fields[2].c_str(), nullptr);
    row.bits = std::strtoll(fields[3].c_str(), nullptr, 10);
    row.bit_errors = std::strtoll(fields[4].c_str(), nullptr, 10);
    row.ber = std::strtod(fields[5].c_str(), nullptr);
    rows.push_back(row);
  }
  return rows;
}

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << kTrainLogCsvHeader << "\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.10e,%.10e", row.epoch, row.mean_loss,
                  row.mean_batch_ber);
    os << buf << "\n";
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace feclab
