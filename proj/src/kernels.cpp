#include "pcl/kernels.hpp"

namespace pcl::kernels {

void dense_forward(Exec e, DenseShape s, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y) {
  e == Exec::parallel ? omp::dense_forward(s, w, b, x, y) : serial::dense_forward(s, w, b, x, y);
}

void dense_backward_input(Exec e, DenseShape s, std::span<const double> w,
                          std::span<const double> dy, std::span<double> dx) {
  e == Exec::parallel ? omp::dense_backward_input(s, w, dy, dx)
                      : serial::dense_backward_input(s, w, dy, dx);
}

void dense_backward_params(Exec e, DenseShape s, std::span<const double> x,
                           std::span<const double> dy, std::span<double> dw,
                           std::span<double> db) {
  e == Exec::parallel ? omp::dense_backward_params(s, x, dy, dw, db)
                      : serial::dense_backward_params(s, x, dy, dw, db);
}

void conv2d_forward(Exec e, const ConvShape& s, std::span<const double> in,
                    std::span<const double> kernel, std::span<const double> bias,
                    std::span<double> out) {
  e == Exec::parallel ? omp::conv2d_forward(s, in, kernel, bias, out)
                      : serial::conv2d_forward(s, in, kernel, bias, out);
}

void conv2d_backward_input(Exec e, const ConvShape& s, std::span<const double> dout,
                           std::span<const double> kernel, std::span<double> din) {
  e == Exec::parallel ? omp::conv2d_backward_input(s, dout, kernel, din)
                      : serial::conv2d_backward_input(s, dout, kernel, din);
}

void conv2d_backward_params(Exec e, const ConvShape& s, std::span<const double> in,
                            std::span<const double> dout, std::span<double> dkernel,
                            std::span<double> dbias) {
  e == Exec::parallel ? omp::conv2d_backward_params(s, in, dout, dkernel, dbias)
                      : serial::conv2d_backward_params(s, in, dout, dkernel, dbias);
}

void maxpool2d_forward(Exec e, const PoolShape& s, std::span<const double> in,
                       std::span<double> out, std::span<std::size_t> argmax) {
  e == Exec::parallel ? omp::maxpool2d_forward(s, in, out, argmax)
                      : serial::maxpool2d_forward(s, in, out, argmax);
}

void maxpool2d_backward(Exec e, const PoolShape& s, std::span<const double> dout,
                        std::span<const std::size_t> argmax, std::span<double> din) {
  e == Exec::parallel ? omp::maxpool2d_backward(s, dout, argmax, din)
                      : serial::maxpool2d_backward(s, dout, argmax, din);
}

}  // namespace pcl::kernels
