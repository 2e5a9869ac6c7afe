#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "feclab/coding.hpp"
#include "feclab/tape.hpp"
#include "feclab/tensor.hpp"

// Training losses (tape ops, mask-aware) and evaluation metrics. Losses are
// averaged over masked cells (and over the batch) so magnitudes are
// comparable across grid sizes. Masked-out cells are never read, so padding
// can hold arbitrary sentinels without perturbing any value here.

namespace feclab {

inline constexpr double kBceEps = 1e-7;  // probability clamp for finite logs

namespace detail {

template <typename T>
void check_masked_pair(const Tensor<T>& p, const Tensor<T>& u, const std::vector<uint8_t>& mask) {
  if (!(p.shape == u.shape)) throw std::invalid_argument("loss: shape mismatch");
  if (p.shape.c != 1) throw std::invalid_argument("loss: expected single-channel grids");
  if (static_cast<int64_t>(mask.size()) != int64_t(p.shape.h) * p.shape.w)
    throw std::invalid_argument("loss: mask size mismatch");
  int64_t count = 0;
  for (uint8_t m : mask) count += m;
  if (count == 0) throw std::invalid_argument("loss: empty mask");
}

inline std::vector<int> mask_indices(const std::vector<uint8_t>& mask) {
  std::vector<int> idx;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

}  // namespace detail

// Binary cross-entropy, natural log, probabilities clamped to
// [kBceEps, 1-kBceEps]. Mean over masked cells and batch samples.
template <typename T>
int bce_loss(Tape<T>& tape, int pred, const Tensor<T>& target, const std::vector<uint8_t>& mask) {
  const Tensor<T>& p = tape.value(pred);
  detail::check_masked_pair(p, target, mask);
  const auto idx = detail::mask_indices(mask);
  const int N = p.shape.n;
  const int64_t plane = int64_t(p.shape.h) * p.shape.w;
  const double norm = double(N) * double(idx.size());

  double sum = 0.0;
  for (int n = 0; n < N; ++n)
    for (int i : idx) {
      const double u = double(target.data[n * plane + i]);
      double pv = double(p.data[n * plane + i]);
      pv = std::min(1.0 - kBceEps, std::max(kBceEps, pv));
      sum -= u * std::log(pv) + (1.0 - u) * std::log(1.0 - pv);
    }

  Tensor<T> target_copy = target;
  return tape.add_node(
      scalar_tensor(T(sum / norm)),
      [pred, target_copy, idx, plane, N, norm](Tape<T>& t, int self) {
        const T gout = t.grad(self).data[0];
        const Tensor<T>& pv_t = t.value(pred);
        Tensor<T>& gp = t.grad(pred);
        for (int n = 0; n < N; ++n)
          for (int i : idx) {
            const double u = double(target_copy.data[n * plane + i]);
            const double pv = double(pv_t.data[n * plane + i]);
            if (pv <= kBceEps || pv >= 1.0 - kBceEps) continue;  // clamped: zero slope
            const double d = -(u / pv - (1.0 - u) / (1.0 - pv)) / norm;
            gp.data[n * plane + i] += T(double(gout) * d);
          }
      });
}

// Mean squared error over masked cells (the PSNR training surrogate).
template <typename T>
int mse_loss(Tape<T>& tape, int pred, const Tensor<T>& target, const std::vector<uint8_t>& mask) {
  const Tensor<T>& p = tape.value(pred);
  detail::check_masked_pair(p, target, mask);
  const auto idx = detail::mask_indices(mask);
  const int N = p.shape.n;
  const int64_t plane = int64_t(p.shape.h) * p.shape.w;
  const double norm = double(N) * double(idx.size());

  double sum = 0.0;
  for (int n = 0; n < N; ++n)
    for (int i : idx) {
      const double d = double(p.data[n * plane + i]) - double(target.data[n * plane + i]);
      sum += d * d;
    }

  Tensor<T> target_copy = target;
  return tape.add_node(
      scalar_tensor(T(sum / norm)),
      [pred, target_copy, idx, plane, N, norm](Tape<T>& t, int self) {
        const T gout = t.grad(self).data[0];
        const Tensor<T>& pv_t = t.value(pred);
        Tensor<T>& gp = t.grad(pred);
        for (int n = 0; n < N; ++n)
          for (int i : idx) {
            const double d =
                double(pv_t.data[n * plane + i]) - double(target_copy.data[n * plane + i]);
            gp.data[n * plane + i] += T(double(gout) * 2.0 * d / norm);
          }
      });
}

namespace detail {

// Per-sample masked statistics feeding SSIM and its gradient.
struct SsimStats {
  double mu_f, mu_g, var_f, var_g, cov;  // population moments
  double a1, b1, a2, b2;                 // (2 mu_f mu_g + C1), ...
  double ssim;
};

inline constexpr double kSsimC1 = 0.01 * 0.01;  // (0.01 * peak)^2, peak = 1
inline constexpr double kSsimC2 = 0.03 * 0.03;  // (0.03 * peak)^2
// C3 = C2/2, which folds the contrast and structure terms into
// (2 cov + C2) / (var_f + var_g + C2); identical to l*c*s for var >= 0.

template <typename T>
SsimStats ssim_stats(const T* f, const T* g, const std::vector<int>& idx) {
  const double m = double(idx.size());
  SsimStats s{};
  for (int i : idx) {
    s.mu_f += double(f[i]);
    s.mu_g += double(g[i]);
  }
  s.mu_f /= m;
  s.mu_g /= m;
  for (int i : idx) {
    const double df = double(f[i]) - s.mu_f;
    const double dg = double(g[i]) - s.mu_g;
    s.var_f += df * df;
    s.var_g += dg * dg;
    s.cov += df * dg;
  }
  s.var_f /= m;
  s.var_g /= m;
  s.cov /= m;
  s.a1 = 2.0 * s.mu_f * s.mu_g + kSsimC1;
  s.b1 = s.mu_f * s.mu_f + s.mu_g * s.mu_g + kSsimC1;
  s.a2 = 2.0 * s.cov + kSsimC2;
  s.b2 = s.var_f + s.var_g + kSsimC2;
  s.ssim = (s.a1 * s.a2) / (s.b1 * s.b2);
  return s;
}

}  // namespace detail

// Global-statistics SSIM over the masked cells of one grid pair (luminance,
// contrast and structure over a single window). Symmetric; equals 1 iff the
// masked regions are identical.
template <typename T>
double ssim(const Tensor<T>& f, const Tensor<T>& g, const std::vector<uint8_t>& mask) {
  detail::check_masked_pair(f, g, mask);
  if (f.shape.n != 1) throw std::invalid_argument("ssim: single-sample metric");
  const auto idx = detail::mask_indices(mask);
  return detail::ssim_stats(f.data.data(), g.data.data(), idx).ssim;
}

// Differentiable 1 - mean(per-sample SSIM) over the batch.
template <typename T>
int ssim_loss(Tape<T>& tape, int pred, const Tensor<T>& target, const std::vector<uint8_t>& mask) {
  const Tensor<T>& p = tape.value(pred);
  detail::check_masked_pair(p, target, mask);
  const auto idx = detail::mask_indices(mask);
  const int N = p.shape.n;
  const int64_t plane = int64_t(p.shape.h) * p.shape.w;

  double mean_ssim = 0.0;
  for (int n = 0; n < N; ++n)
    mean_ssim +=
        detail::ssim_stats(p.data.data() + n * plane, target.data.data() + n * plane, idx).ssim;
  mean_ssim /= double(N);

  Tensor<T> target_copy = target;
  return tape.add_node(
      scalar_tensor(T(1.0 - mean_ssim)),
      [pred, target_copy, idx, plane, N](Tape<T>& t, int self) {
        const double gout = double(t.grad(self).data[0]);
        const Tensor<T>& pv_t = t.value(pred);
        Tensor<T>& gp = t.grad(pred);
        const double m = double(idx.size());
        for (int n = 0; n < N; ++n) {
          const T* f = pv_t.data.data() + n * plane;
          const T* g = target_copy.data.data() + n * plane;
          const auto s = detail::ssim_stats(f, g, idx);
          // dS/dmu_f, dS/dvar_f, dS/dcov of S = (a1 a2)/(b1 b2)
          const double d_mu = 2.0 * s.a2 * (s.mu_g * s.b1 - s.mu_f * s.a1) / (s.b1 * s.b1 * s.b2);
          const double d_var = -s.a1 * s.a2 / (s.b1 * s.b2 * s.b2);
          const double d_cov = 2.0 * s.a1 / (s.b1 * s.b2);
          for (int i : idx) {
            const double df = double(f[i]) - s.mu_f;
            const double dg = double(g[i]) - s.mu_g;
            const double dS = (d_mu + 2.0 * df * d_var + dg * d_cov) / m;
            // loss is 1 - mean(S): negate and average over the batch
            gp.data[n * plane + i] += T(-gout * dS / double(N));
          }
        }
      });
}

// ---------------------------------------------------------------------------
// plain metrics (no tape)
// ---------------------------------------------------------------------------

struct MsePsnr {
  double mse;
  double psnr_db;  // +infinity when mse == 0
};

// MSE over masked cells and PSNR at unit dynamic range (peak = 1.0 for bit
// grids rather than the pixel-centric 255).
template <typename T>
MsePsnr mse_and_psnr(const Tensor<T>& f, const Tensor<T>& g, const std::vector<uint8_t>& mask) {
  detail::check_masked_pair(f, g, mask);
  const auto idx = detail::mask_indices(mask);
  const int N = f.shape.n;
  const int64_t plane = int64_t(f.shape.h) * f.shape.w;
  double sum = 0.0;
  for (int n = 0; n < N; ++n)
    for (int i : idx) {
      const double d = double(f.data[n * plane + i]) - double(g.data[n * plane + i]);
      sum += d * d;
    }
  MsePsnr r;
  r.mse = sum / (double(N) * double(idx.size()));
  r.psnr_db = r.mse == 0.0 ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(1.0 / r.mse);
  return r;
}

struct BerReport {
  int64_t bits_counted = 0;
  int64_t bit_errors = 0;
  double ber = 0.0;
};

// Hard-decision bit error rate: an error at k iff (p_k > 0.5) != u_k. The
// strict inequality makes p_k = 0.5 decode to bit 0.
BerReport ber(const std::vector<double>& p, const Bits& u);

// Normalized validation error: the mean over SNR points of
// BER_decoder / BER_viterbi. A Viterbi BER of exactly 0 is floored at
// 1/bits_per_point (one error over the whole measurement) before dividing.
double nve(const std::vector<double>& ber_decoder, const std::vector<double>& ber_viterbi,
           int64_t bits_per_point);

// Same, with a per-point bit count (CSV rows may differ in depth).
double nve_rows(const std::vector<double>& ber_decoder, const std::vector<double>& ber_viterbi,
                const std::vector<int64_t>& bits_per_point);

}  // namespace feclab
