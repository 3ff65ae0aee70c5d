#include "pcl/kernels.hpp"

namespace pcl::kernels::serial {

void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y) {
  for (std::size_t o = 0; o < s.out; ++o) {
    double acc = b.empty() ? 0.0 : b[o];
    for (std::size_t i = 0; i < s.in; ++i) acc += w[o * s.in + i] * x[i];
    y[o] = acc;
  }
}

void dense_backward_input(DenseShape s, std::span<const double> w, std::span<const double> dy,
                          std::span<double> dx) {
  for (std::size_t i = 0; i < s.in; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < s.out; ++o) acc += w[o * s.in + i] * dy[o];
    dx[i] = acc;
  }
}

void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db) {
  for (std::size_t o = 0; o < s.out; ++o) {
    if (!db.empty()) db[o] += dy[o];
    for (std::size_t i = 0; i < s.in; ++i) dw[o * s.in + i] += dy[o] * x[i];
  }
}

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  for (std::size_t f = 0; f < s.filters; ++f) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias[f];
        for (std::size_t c = 0; c < s.channels; ++c) {
          for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
              acc += kernel[((f * s.channels + c) * s.kernel_h + ky) * s.kernel_w + kx] *
                     in[(c * s.height + y + ky) * s.width + x + kx];
            }
          }
        }
        out[(f * oh + y) * ow + x] = acc;
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> dout,
                           std::span<const double> kernel, std::span<double> din) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        double acc = 0.0;
        for (std::size_t f = 0; f < s.filters; ++f) {
          for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
            if (y < ky || y - ky >= oh) continue;
            for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
              if (x < kx || x - kx >= ow) continue;
              acc += dout[(f * oh + y - ky) * ow + x - kx] *
                     kernel[((f * s.channels + c) * s.kernel_h + ky) * s.kernel_w + kx];
            }
          }
        }
        din[(c * s.height + y) * s.width + x] = acc;
      }
    }
  }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dkernel,
                            std::span<double> dbias) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  for (std::size_t f = 0; f < s.filters; ++f) {
    double bacc = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) bacc += dout[f * oh * ow + i];
    dbias[f] += bacc;
    for (std::size_t c = 0; c < s.channels; ++c) {
      for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
        for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
          double acc = 0.0;
          for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
              acc += dout[(f * oh + y) * ow + x] * in[(c * s.height + y + ky) * s.width + x + kx];
            }
          }
          dkernel[((f * s.channels + c) * s.kernel_h + ky) * s.kernel_w + kx] += acc;
        }
      }
    }
  }
}

void maxpool2d_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                       std::span<std::size_t> argmax) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (c * s.height + y * s.window) * s.width + x * s.window;
        for (std::size_t wy = 0; wy < s.window; ++wy) {
          for (std::size_t wx = 0; wx < s.window; ++wx) {
            const std::size_t idx = (c * s.height + y * s.window + wy) * s.width + x * s.window + wx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        out[(c * oh + y) * ow + x] = in[best];
        argmax[(c * oh + y) * ow + x] = best;
      }
    }
  }
}

void maxpool2d_backward(const PoolShape& s, std::span<const double> dout,
                        std::span<const std::size_t> argmax, std::span<double> din) {
  for (std::size_t i = 0; i < s.channels * s.height * s.width; ++i) din[i] = 0.0;
  const std::size_t n = s.channels * s.out_h() * s.out_w();
  for (std::size_t j = 0; j < n; ++j) din[argmax[j]] += dout[j];
}

}  // namespace pcl::kernels::serial
