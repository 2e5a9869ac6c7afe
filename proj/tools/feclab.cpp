// feclab: rate-1/2 convolutional coding lab with an exact Viterbi baseline
// and a trainable U-Net grid decoder.
//
// Exit codes: 0 success, 2 usage/config error, 3 runtime failure.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "feclab/config.hpp"
#include "feclab/pipeline.hpp"
#include "feclab/svg.hpp"

namespace fs = std::filesystem;
using namespace feclab;

namespace {

// errors that should exit with the usage/config code
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Bits read_bits_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  Bits bits;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const size_t b = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(a, b - a + 1);
    if (tok == "0")
      bits.push_back(0);
    else if (tok == "1")
      bits.push_back(1);
    else
      throw UsageError(path + ": line " + std::to_string(lineno) + ": expected a bit, got '" +
                       tok + "'");
  }
  if (bits.empty()) throw UsageError(path + ": empty input");
  return bits;
}

SymbolBlock read_symbols_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  SymbolBlock symbols;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
    if (end == line.c_str() || (end && *end != '\0'))
      throw UsageError(path + ": line " + std::to_string(lineno) + ": expected a real number");
    symbols.push_back(v);
  }
  if (symbols.empty()) throw UsageError(path + ": empty input");
  return symbols;
}

template <typename Seq>
void write_lines(const std::string& path, const Seq& values) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& v : values) os << +v << "\n";
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

CodeSpec code_from_flags(const std::string& generators, int memory) {
  CodeSpec code;
  code.memory = memory;
  const size_t comma = generators.find(',');
  if (comma == std::string::npos)
    throw UsageError("--generators wants two comma-separated octal values, e.g. 7,5");
  auto parse_octal = [](const std::string& s) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(s.c_str(), &end, 8);
    if (end == s.c_str() || *end != '\0') throw UsageError("bad octal generator '" + s + "'");
    return static_cast<uint32_t>(v);
  };
  code.generators = {parse_octal(generators.substr(0, comma)),
                     parse_octal(generators.substr(comma + 1))};
  code.validate();
  return code;
}

std::string default_path(const std::string& explicit_path, const std::string& out_dir,
                         const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  return (fs::path(out_dir) / name).string();
}

int cmd_encode(const std::string& in, const std::string& out, const CodeSpec& code) {
  const Bits msg = read_bits_file(in);
  write_lines(out, interleave(encode(code, msg)));
  std::printf("encoded %zu bits -> %zu coded bits (%s)\n", msg.size(),
              2 * (msg.size() + code.memory), code.name().c_str());
  return 0;
}

int cmd_viterbi(const std::string& in, const std::string& out, const CodeSpec& code) {
  const SymbolBlock rx = read_symbols_file(in);
  const Trellis trellis = build_trellis(code);
  DecodeResult dec;
  try {
    dec = viterbi_decode(trellis, rx);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + " (input '" + in + "')");
  }
  write_lines(out, dec.message);
  std::printf("decoded %zu bits, path metric %.6g\n", dec.message.size(), dec.path_metric);
  return 0;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_train(const CommonOpts& opts, const std::string& resume_path) {
  KvConfig kv = KvConfig::from_file(opts.config_path);
  TrainConfig cfg = train_config_from(kv);
  // sweep keys may live in the same file; consume them so strict checking
  // still catches typos
  if (kv.has("sweep.snr_list_db")) (void)kv.get_double_list("sweep.snr_list_db");
  for (const char* key : {"sweep.min_bits", "sweep.min_errors", "sweep.max_bits"})
    if (kv.has(key)) (void)kv.get_int(key);
  OutputPaths paths = output_paths_from(kv);
  kv.require_all_consumed();
  if (opts.seed_set) cfg.seed = opts.seed;

  fs::create_directories(opts.out_dir);
  const std::string ckpt_path = default_path(paths.checkpoint, opts.out_dir, "checkpoint.bin");
  const std::string log_path = default_path(paths.train_log, opts.out_dir, "train_log.csv");

  Checkpoint resume;
  const Checkpoint* resume_ptr = nullptr;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    resume_ptr = &resume;
  }

  const GridSpec grid = cfg.grid();
  std::printf("training %s: L=%d grid %dx%d, unet depth %d base %d, loss %s, seed %llu\n",
              cfg.code.name().c_str(), cfg.block_length, grid.side, grid.side, cfg.net.depth,
              cfg.net.base_channels, cfg.loss.c_str(), (unsigned long long)cfg.seed);
  const TrainResult result = train(cfg, resume_ptr, [&](const EpochLog& log) {
    std::printf("epoch %d/%d  loss %.6f  batch-ber %.5f\n", log.epoch, cfg.epochs,
                log.mean_loss, log.mean_batch_ber);
    std::fflush(stdout);
  });

  save_checkpoint(result.checkpoint, ckpt_path);
  write_train_log_csv(log_path, result.log);
  std::printf("wrote %s and %s (params: %lld, steps: %lld)\n", ckpt_path.c_str(),
              log_path.c_str(), (long long)result.checkpoint.param_count(),
              (long long)result.checkpoint.step);
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& decoder, std::string ckpt_path,
              bool want_svg) {
  KvConfig kv = KvConfig::from_file(opts.config_path);
  TrainConfig cfg = train_config_from(kv);
  SweepOptions sweep = sweep_options_from(kv, opts.seed_set ? opts.seed : cfg.seed);
  OutputPaths paths = output_paths_from(kv);
  kv.require_all_consumed();

  DecoderKind kind;
  if (decoder == "viterbi")
    kind = DecoderKind::kViterbi;
  else if (decoder == "unet")
    kind = DecoderKind::kUnet;
  else if (decoder == "uncoded")
    kind = DecoderKind::kUncoded;
  else
    throw UsageError("--decoder must be one of unet, viterbi, uncoded");

  fs::create_directories(opts.out_dir);

  UNet<float> net(UNetConfig{}, 0);
  GridSpec grid;
  const UNet<float>* net_ptr = nullptr;
  const GridSpec* grid_ptr = nullptr;
  if (kind == DecoderKind::kUnet) {
    if (ckpt_path.empty())
      ckpt_path = default_path(paths.checkpoint, opts.out_dir, "checkpoint.bin");
    const Checkpoint ck = load_checkpoint(ckpt_path);
    if (!(ck.grid == cfg.grid()) || !(ck.config.code.generators == cfg.code.generators) ||
        ck.config.code.memory != cfg.code.memory)
      throw UsageError("grid mismatch: checkpoint was trained for " +
                       ck.config.code.name() + " L=" + std::to_string(ck.config.block_length) +
                       ", config wants " + cfg.code.name() +
                       " L=" + std::to_string(cfg.block_length));
    net = model_from_checkpoint(ck);
    grid = ck.grid;
    net_ptr = &net;
    grid_ptr = &grid;
  }

  const auto points = ber_sweep(kind, cfg.code, cfg.block_length, sweep, net_ptr, grid_ptr);

  const std::string code_name = kind == DecoderKind::kUncoded ? "uncoded" : cfg.code.name();
  const std::string csv_path =
      default_path(paths.sweep_csv, opts.out_dir, "sweep_" + decoder + ".csv");
  write_sweep_csv(csv_path, decoder, code_name, points);
  for (const auto& p : points)
    std::printf("%5.2f dB  ber %.6e  (%lld errors / %lld bits)\n", p.snr_db, p.report.ber,
                (long long)p.report.bit_errors, (long long)p.report.bits_counted);
  std::printf("wrote %s\n", csv_path.c_str());

  if (want_svg || !paths.sweep_svg.empty()) {
    const std::string svg_path =
        default_path(paths.sweep_svg, opts.out_dir, "sweep_" + decoder + ".svg");
    PlotSeries series;
    series.label = decoder + " " + code_name;
    for (const auto& p : points) series.points.emplace_back(p.snr_db, p.report.ber);
    write_ber_svg(svg_path, "BER vs Eb/N0", {series});
    std::printf("wrote %s\n", svg_path.c_str());
  }
  return 0;
}

int cmd_nve(const std::string& nnd_csv, const std::string& viterbi_csv,
            const std::string& out_dir, std::string report_path) {
  const auto nnd = read_sweep_csv(nnd_csv);
  const auto vit = read_sweep_csv(viterbi_csv);
  if (nnd.empty() || nnd.size() != vit.size())
    throw UsageError("SNR grids differ between '" + nnd_csv + "' and '" + viterbi_csv + "'");
  std::vector<double> ber_nnd, ber_vit;
  std::vector<int64_t> bits;
  for (size_t i = 0; i < nnd.size(); ++i) {
    if (nnd[i].snr_db != vit[i].snr_db)
      throw UsageError("SNR grids differ at row " + std::to_string(i + 1));
    ber_nnd.push_back(nnd[i].ber);
    ber_vit.push_back(vit[i].ber);
    bits.push_back(vit[i].bits);
  }
  const double value = nve_rows(ber_nnd, ber_vit, bits);
  std::printf("NVE = %.6f over %zu SNR points\n", value, nnd.size());

  fs::create_directories(out_dir);
  if (report_path.empty()) report_path = (fs::path(out_dir) / "nve_report.csv").string();
  const bool fresh = !fs::exists(report_path);
  std::ofstream os(report_path, std::ios::app);
  if (!os) throw std::runtime_error("cannot open '" + report_path + "'");
  if (fresh) os << "decoder_csv,viterbi_csv,nve\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  os << nnd_csv << "," << viterbi_csv << "," << buf << "\n";
  std::printf("appended to %s\n", report_path.c_str());
  return 0;
}

int cmd_info(const std::string& ckpt_path, int latency_blocks) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const UNet<float> net = model_from_checkpoint(ck);

  std::printf("checkpoint: %s\n", ckpt_path.c_str());
  std::printf("code %s, L=%d, grid %dx%d, loss %s, trained steps %lld\n",
              ck.config.code.name().c_str(), ck.config.block_length, ck.grid.side, ck.grid.side,
              ck.config.loss.c_str(), (long long)ck.step);
  std::printf("unet: depth %d, base %d, in %d, out %d\n", ck.config.net.depth,
              ck.config.net.base_channels, ck.config.net.in_channels, ck.config.net.out_channels);
  std::printf("%-24s %-16s %10s\n", "layer", "shape", "params");
  for (const auto& p : net.params()) {
    std::string shape;
    for (size_t i = 0; i < p.dims.size(); ++i)
      shape += (i ? "x" : "") + std::to_string(p.dims[i]);
    std::printf("%-24s %-16s %10lld\n", p.name.c_str(), shape.c_str(), (long long)p.value.size());
  }
  std::printf("total parameters: %lld\n", (long long)net.count_params());

  // single-block decode latency; wall-clock, environment dependent
  Tensor<float> block(Shape{1, 2, ck.grid.side, ck.grid.side});
  const auto rep = measure_latency([&] { (void)net.infer(block); }, latency_blocks);
  std::printf("latency: median %.6f ms/block, batched %.1f blocks/s over %d blocks\n",
              1e3 * rep.median_single_s, rep.blocks_per_s, rep.blocks);
  std::printf("environment: %d threads, compiler %s\n", omp_get_max_threads(), __VERSION__);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feclab: convolutional code lab with Viterbi and U-Net decoders"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::function<int()> run;

  // encode / viterbi
  std::string in_path, out_path, generators = "7,5";
  int memory = 2;
  auto* enc = app.add_subcommand("encode", "encode bits (one per line) with zero-tail flush");
  enc->add_option("--in", in_path, "input bit file")->required();
  enc->add_option("--out", out_path, "output coded bit file")->required();
  enc->add_option("--generators", generators, "octal generator pair (default 7,5)");
  enc->add_option("--memory", memory, "encoder memory v (default 2)");
  enc->callback([&] { run = [&] { return cmd_encode(in_path, out_path, code_from_flags(generators, memory)); }; });

  auto* vit = app.add_subcommand("viterbi", "ML-decode received symbols (one real per line)");
  vit->add_option("--in", in_path, "input symbol file")->required();
  vit->add_option("--out", out_path, "output decoded bit file")->required();
  vit->add_option("--generators", generators, "octal generator pair (default 7,5)");
  vit->add_option("--memory", memory, "encoder memory v (default 2)");
  vit->callback([&] { run = [&] { return cmd_viterbi(in_path, out_path, code_from_flags(generators, memory)); }; });

  // train
  std::string resume_path;
  auto* train_cmd = app.add_subcommand("train", "train the U-Net decoder from a config file");
  train_cmd->add_option("--config", opts.config_path, "experiment config")->required();
  train_cmd->add_option("--out", opts.out_dir, "output directory (default .)");
  train_cmd->add_option("--seed", opts.seed, "override config seed")->each([&](const std::string&) { opts.seed_set = true; });
  train_cmd->add_option("--resume", resume_path, "resume from an existing checkpoint");
  train_cmd->callback([&] { run = [&] { return cmd_train(opts, resume_path); }; });

  // sweep
  std::string decoder = "viterbi", ckpt_path;
  bool want_svg = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo BER sweep over the config's SNR list");
  sweep_cmd->add_option("--config", opts.config_path, "experiment config")->required();
  sweep_cmd->add_option("--decoder", decoder, "unet | viterbi | uncoded")->required();
  sweep_cmd->add_option("--checkpoint", ckpt_path, "checkpoint for --decoder unet");
  sweep_cmd->add_option("--out", opts.out_dir, "output directory (default .)");
  sweep_cmd->add_option("--seed", opts.seed, "override config seed")->each([&](const std::string&) { opts.seed_set = true; });
  sweep_cmd->add_flag("--svg", want_svg, "also write an SVG plot");
  sweep_cmd->callback([&] { run = [&] { return cmd_sweep(opts, decoder, ckpt_path, want_svg); }; });

  // nve
  std::string nnd_csv, vit_csv, report_path;
  auto* nve_cmd = app.add_subcommand("nve", "normalized validation error from two sweep CSVs");
  nve_cmd->add_option("decoder_csv", nnd_csv, "decoder sweep CSV")->required();
  nve_cmd->add_option("viterbi_csv", vit_csv, "Viterbi sweep CSV")->required();
  nve_cmd->add_option("--out", opts.out_dir, "output directory (default .)");
  nve_cmd->add_option("--report", report_path, "report file to append to");
  nve_cmd->callback([&] { run = [&] { return cmd_nve(nnd_csv, vit_csv, opts.out_dir, report_path); }; });

  // info
  std::string info_ckpt;
  int latency_blocks = 200;
  auto* info_cmd = app.add_subcommand("info", "parameter count, per-layer table and latency");
  info_cmd->add_option("checkpoint", info_ckpt, "checkpoint file")->required();
  info_cmd->add_option("--blocks", latency_blocks, "blocks for the latency measurement");
  info_cmd->callback([&] { run = [&] { return cmd_info(info_ckpt, latency_blocks); }; });

  try {
    app.parse(argc, argv);
    return run ? run() : 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 3;
  }
}
