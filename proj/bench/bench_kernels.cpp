// Benchmark comparing the serial reference kernels against the OpenMP
// kernels, plus batch-level decode throughput. Build and run:
//   cmake --build build --target bench_kernels && ./build/bench/bench_kernels

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "feclab/kernels.hpp"
#include "feclab/pipeline.hpp"
#include "feclab/rng.hpp"

using namespace feclab;

namespace {

using clock_type = std::chrono::steady_clock;

double time_best_of(const std::function<void()>& fn, int reps = 5) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = clock_type::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial_s, double par_s) {
  std::printf("%-34s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx\n", name, 1e3 * serial_s,
              1e3 * par_s, serial_s / par_s);
}

Tensor<float> random_tensor(Shape s, Rng& rng) {
  Tensor<float> t(s);
  for (auto& v : t.data) v = float(rng.next_uniform(-1.0, 1.0));
  return t;
}

void bench_conv(int N, int C, int HW) {
  Rng rng(1);
  const auto x = random_tensor(Shape{N, C, HW, HW}, rng);
  const auto w = random_tensor(Shape{C, C, 3, 3}, rng);
  const auto b = random_tensor(Shape{1, C, 1, 1}, rng);
  Tensor<float> y(Shape{N, C, HW, HW});
  char label[128];

  std::snprintf(label, sizeof(label), "conv2d fwd %dx%dx%dx%d", N, C, HW, HW);
  report(label, time_best_of([&] { kern::ref::conv2d_fwd(x, w, b, y); }),
         time_best_of([&] { kern::par::conv2d_fwd(x, w, b, y); }));

  const auto gy = random_tensor(y.shape, rng);
  Tensor<float> gx(x.shape);
  std::snprintf(label, sizeof(label), "conv2d bwd_input %dx%dx%dx%d", N, C, HW, HW);
  report(label, time_best_of([&] { gx.fill(0); kern::ref::conv2d_bwd_input(gy, w, gx); }),
         time_best_of([&] { gx.fill(0); kern::par::conv2d_bwd_input(gy, w, gx); }));

  Tensor<float> gw(w.shape), gb(b.shape);
  std::snprintf(label, sizeof(label), "conv2d bwd_params %dx%dx%dx%d", N, C, HW, HW);
  report(label,
         time_best_of([&] {
           gw.fill(0);
           gb.fill(0);
           kern::ref::conv2d_bwd_params(x, gy, gw, gb);
         }),
         time_best_of([&] {
           gw.fill(0);
           gb.fill(0);
           kern::par::conv2d_bwd_params(x, gy, gw, gb);
         }));
}

void bench_unet_batch() {
  const UNetConfig cfg{2, 8, 2, 1};
  const UNet<float> net(cfg, 7);
  Rng rng(2);
  const int blocks = 512;
  std::vector<Tensor<float>> inputs;
  for (int i = 0; i < blocks; ++i) inputs.push_back(random_tensor(Shape{1, 2, 8, 8}, rng));

  const double serial = time_best_of([&] {
    for (int i = 0; i < blocks; ++i) (void)net.infer(inputs[i]);
  }, 3);
  const double par = time_best_of([&] {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < blocks; ++i) (void)net.infer(inputs[i]);
  }, 3);
  report("unet infer, 512 blocks of 8x8", serial, par);
}

void bench_viterbi_batch() {
  const CodeSpec code{{0133, 0171}, 6};
  const Trellis tr = build_trellis(code);
  Rng rng(3);
  const int blocks = 512, L = 128;
  std::vector<SymbolBlock> rx(blocks);
  for (auto& block : rx) {
    Bits msg(L);
    for (auto& bit : msg) bit = uint8_t(rng.next_bit());
    block = add_awgn(modulate(interleave(encode(code, msg))), 0.8, rng);
  }
  const double serial = time_best_of([&] {
    for (int i = 0; i < blocks; ++i) (void)viterbi_decode(tr, rx[i]);
  }, 3);
  const double par = time_best_of([&] {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < blocks; ++i) (void)viterbi_decode(tr, rx[i]);
  }, 3);
  report("viterbi 133_171_v6, 512 x L=128", serial, par);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  bench_conv(1, 16, 64);   // one large plane: inner-kernel parallelism
  bench_conv(32, 8, 8);    // training-shaped batch
  bench_unet_batch();
  bench_viterbi_batch();
  return 0;
}
