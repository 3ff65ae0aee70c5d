#pragma once

#include <cstddef>
#include <span>

// Numeric kernels behind the classifier heads. Every kernel has a plain
// serial reference (kernels::serial) and an OpenMP version (kernels::omp).
// The OpenMP versions parallelise over independent output elements and keep
// the per-element accumulation order of the reference, so both produce
// bit-identical results for any thread count.
namespace pcl::kernels {

enum class Exec { serial, parallel };

// y = W x + b with W stored [out][in].
struct DenseShape {
  std::size_t in = 0;
  std::size_t out = 0;
};

// Valid (unpadded) stride-1 cross-correlation.
// input [channels][height][width], kernel [filters][channels][kh][kw],
// output [filters][out_h][out_w].
struct ConvShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t filters = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;

  std::size_t out_h() const { return height >= kernel_h ? height - kernel_h + 1 : 0; }
  std::size_t out_w() const { return width >= kernel_w ? width - kernel_w + 1 : 0; }
};

// Non-overlapping window x window max pooling; trailing rows/cols dropped.
struct PoolShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t window = 2;

  std::size_t out_h() const { return height / window; }
  std::size_t out_w() const { return width / window; }
};

#define PCL_KERNEL_DECLS                                                                       \
  void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b,      \
                     std::span<const double> x, std::span<double> y);                          \
  /* dx = W^T dy (overwrites dx) */                                                            \
  void dense_backward_input(DenseShape s, std::span<const double> w,                          \
                            std::span<const double> dy, std::span<double> dx);                \
  /* dW += dy x^T, db += dy */                                                                 \
  void dense_backward_params(DenseShape s, std::span<const double> x,                         \
                             std::span<const double> dy, std::span<double> dw,                \
                             std::span<double> db);                                            \
  void conv2d_forward(const ConvShape& s, std::span<const double> in,                         \
                      std::span<const double> kernel, std::span<const double> bias,           \
                      std::span<double> out);                                                  \
  /* overwrites din */                                                                         \
  void conv2d_backward_input(const ConvShape& s, std::span<const double> dout,                \
                             std::span<const double> kernel, std::span<double> din);           \
  /* accumulates into dkernel, dbias */                                                        \
  void conv2d_backward_params(const ConvShape& s, std::span<const double> in,                 \
                              std::span<const double> dout, std::span<double> dkernel,        \
                              std::span<double> dbias);                                        \
  /* argmax receives the flat input index of each window maximum (first wins on ties) */      \
  void maxpool2d_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,\
                         std::span<std::size_t> argmax);                                       \
  /* overwrites din */                                                                         \
  void maxpool2d_backward(const PoolShape& s, std::span<const double> dout,                   \
                          std::span<const std::size_t> argmax, std::span<double> din);

namespace serial {
PCL_KERNEL_DECLS
}  // namespace serial

namespace omp {
PCL_KERNEL_DECLS
}  // namespace omp

#undef PCL_KERNEL_DECLS

void dense_forward(Exec e, DenseShape s, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y);
void dense_backward_input(Exec e, DenseShape s, std::span<const double> w,
                          std::span<const double> dy, std::span<double> dx);
void dense_backward_params(Exec e, DenseShape s, std::span<const double> x,
                           std::span<const double> dy, std::span<double> dw,
                           std::span<double> db);
void conv2d_forward(Exec e, const ConvShape& s, std::span<const double> in,
                    std::span<const double> kernel, std::span<const double> bias,
                    std::span<double> out);
void conv2d_backward_input(Exec e, const ConvShape& s, std::span<const double> dout,
                           std::span<const double> kernel, std::span<double> din);
void conv2d_backward_params(Exec e, const ConvShape& s, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dkernel,
                            std::span<double> dbias);
void maxpool2d_forward(Exec e, const PoolShape& s, std::span<const double> in,
                       std::span<double> out, std::span<std::size_t> argmax);
void maxpool2d_backward(Exec e, const PoolShape& s, std::span<const double> dout,
                        std::span<const std::size_t> argmax, std::span<double> din);

}  // namespace pcl::kernels
