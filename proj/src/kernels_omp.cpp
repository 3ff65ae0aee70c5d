#include <algorithm>

#include "pcl/kernels.hpp"

namespace pcl::kernels::omp {

namespace {
// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 14;
constexpr std::size_t kColumnBlock = 256;
}  // namespace

void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y) {
  const double* wp = w.data();
  const double* xp = x.data();
#pragma omp parallel for schedule(static) if (s.in * s.out >= kMinParallelWork)
  for (std::size_t o = 0; o < s.out; ++o) {
    const double* row = wp + o * s.in;
    double acc = b.empty() ? 0.0 : b[o];
    for (std::size_t i = 0; i < s.in; ++i) acc += row[i] * xp[i];
    y[o] = acc;
  }
}

void dense_backward_input(DenseShape s, std::span<const double> w, std::span<const double> dy,
                          std::span<double> dx) {
  const std::size_t n_blocks = (s.in + kColumnBlock - 1) / kColumnBlock;
  const double* wp = w.data();
  double* dxp = dx.data();
#pragma omp parallel for schedule(static) if (s.in * s.out >= kMinParallelWork)
  for (std::size_t blk = 0; blk < n_blocks; ++blk) {
    const std::size_t lo = blk * kColumnBlock;
    const std::size_t hi = std::min(s.in, lo + kColumnBlock);
    for (std::size_t i = lo; i < hi; ++i) dxp[i] = 0.0;
    // Row-major sweep; each dx[i] still accumulates over o in ascending order.
    for (std::size_t o = 0; o < s.out; ++o) {
      const double g = dy[o];
      const double* row = wp + o * s.in;
      for (std::size_t i = lo; i < hi; ++i) dxp[i] += row[i] * g;
    }
  }
}

void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db) {
  const double* xp = x.data();
  double* dwp = dw.data();
#pragma omp parallel for schedule(static) if (s.in * s.out >= kMinParallelWork)
  for (std::size_t o = 0; o < s.out; ++o) {
    if (!db.empty()) db[o] += dy[o];
    const double g = dy[o];
    double* row = dwp + o * s.in;
    for (std::size_t i = 0; i < s.in; ++i) row[i] += g * xp[i];
  }
}

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  const double* ip = in.data();
  const double* kp = kernel.data();
  double* op = out.data();
  const std::size_t work = s.filters * oh * ow * s.channels * s.kernel_h * s.kernel_w;
#pragma omp parallel for collapse(2) schedule(static) if (work >= kMinParallelWork)
  for (std::size_t f = 0; f < s.filters; ++f) {
    for (std::size_t y = 0; y < oh; ++y) {
      double* orow = op + (f * oh + y) * ow;
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias[f];
        for (std::size_t c = 0; c < s.channels; ++c) {
          for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
            const double* krow = kp + ((f * s.channels + c) * s.kernel_h + ky) * s.kernel_w;
            const double* irow = ip + (c * s.height + y + ky) * s.width + x;
            for (std::size_t kx = 0; kx < s.kernel_w; ++kx) acc += krow[kx] * irow[kx];
          }
        }
        orow[x] = acc;
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> dout,
                           std::span<const double> kernel, std::span<double> din) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  const double* dp = dout.data();
  const double* kp = kernel.data();
  double* ip = din.data();
  const std::size_t work = s.filters * oh * ow * s.channels * s.kernel_h * s.kernel_w;
#pragma omp parallel for collapse(2) schedule(static) if (work >= kMinParallelWork)
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t y = 0; y < s.height; ++y) {
      // Valid ky satisfy 0 <= y - ky < oh.
      const std::size_t ky_lo = y + 1 > oh ? y + 1 - oh : 0;
      const std::size_t ky_hi = std::min(s.kernel_h, y + 1);
      for (std::size_t x = 0; x < s.width; ++x) {
        const std::size_t kx_lo = x + 1 > ow ? x + 1 - ow : 0;
        const std::size_t kx_hi = std::min(s.kernel_w, x + 1);
        double acc = 0.0;
        for (std::size_t f = 0; f < s.filters; ++f) {
          for (std::size_t ky = ky_lo; ky < ky_hi; ++ky) {
            const double* drow = dp + (f * oh + y - ky) * ow;
            const double* krow = kp + ((f * s.channels + c) * s.kernel_h + ky) * s.kernel_w;
            for (std::size_t kx = kx_lo; kx < kx_hi; ++kx) acc += drow[x - kx] * krow[kx];
          }
        }
        ip[(c * s.height + y) * s.width + x] = acc;
      }
    }
  }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dkernel,
                            std::span<double> dbias) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  const double* ip = in.data();
  const double* dp = dout.data();
  double* kp = dkernel.data();
  const std::size_t work = s.filters * oh * ow * s.channels * s.kernel_h * s.kernel_w;
#pragma omp parallel if (work >= kMinParallelWork)
  {
#pragma omp for schedule(static)
    for (std::size_t f = 0; f < s.filters; ++f) {
      double bacc = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) bacc += dp[f * oh * ow + i];
      dbias[f] += bacc;
    }
#pragma omp for collapse(2) schedule(static)
    for (std::size_t f = 0; f < s.filters; ++f) {
      for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
          for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
            double acc = 0.0;
            for (std::size_t y = 0; y < oh; ++y) {
              const double* drow = dp + (f * oh + y) * ow;
              const double* irow = ip + (c * s.height + y + ky) * s.width + kx;
              for (std::size_t x = 0; x < ow; ++x) acc += drow[x] * irow[x];
            }
            kp[((f * s.channels + c) * s.kernel_h + ky) * s.kernel_w + kx] += acc;
          }
        }
      }
    }
  }
}

void maxpool2d_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                       std::span<std::size_t> argmax) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  const double* ip = in.data();
#pragma omp parallel for collapse(2) schedule(static) if (s.channels * s.height * s.width >= kMinParallelWork)
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (c * s.height + y * s.window) * s.width + x * s.window;
        for (std::size_t wy = 0; wy < s.window; ++wy) {
          const std::size_t base = (c * s.height + y * s.window + wy) * s.width + x * s.window;
          for (std::size_t wx = 0; wx < s.window; ++wx) {
            if (ip[base + wx] > ip[best]) best = base + wx;
          }
        }
        out[(c * oh + y) * ow + x] = ip[best];
        argmax[(c * oh + y) * ow + x] = best;
      }
    }
  }
}

void maxpool2d_backward(const PoolShape& s, std::span<const double> dout,
                        std::span<const std::size_t> argmax, std::span<double> din) {
  const std::size_t n_in = s.channels * s.height * s.width;
  const std::size_t n_out = s.channels * s.out_h() * s.out_w();
  double* dp = din.data();
#pragma omp parallel if (n_in >= kMinParallelWork)
  {
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n_in; ++i) dp[i] = 0.0;
    // Windows do not overlap, so every argmax target is distinct.
#pragma omp for schedule(static)
    for (std::size_t j = 0; j < n_out; ++j) dp[argmax[j]] += dout[j];
  }
}

}  // namespace pcl::kernels::omp
