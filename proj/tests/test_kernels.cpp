#include "doctest.h"

#include <omp.h>

#include "pcl/kernels.hpp"
#include "pcl/rng.hpp"

using namespace pcl;
using namespace pcl::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Shapes straddle the parallel threshold so both code paths run.
const ConvShape kConvShapes[] = {
    {1, 30, 16, 4, 3, 3}, {4, 14, 7, 4, 3, 3}, {1, 60, 64, 8, 10, 10}, {3, 20, 20, 5, 5, 5}};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("dense serial and parallel agree bit for bit") {
  Rng rng(1);
  for (DenseShape s : {DenseShape{7, 3}, DenseShape{480, 16}, DenseShape{3000, 40}, DenseShape{16, 2000}}) {
    const auto w = random_vec(s.in * s.out, rng);
    const auto b = random_vec(s.out, rng);
    const auto x = random_vec(s.in, rng);
    const auto dy = random_vec(s.out, rng);
    std::vector<double> y1(s.out), y2(s.out), dx1(s.in), dx2(s.in);
    std::vector<double> dw1(w.size(), 0.5), dw2(w.size(), 0.5), db1(s.out, 0.25), db2(s.out, 0.25);
    serial::dense_forward(s, w, b, x, y1);
    omp::dense_forward(s, w, b, x, y2);
    CHECK(y1 == y2);
    serial::dense_backward_input(s, w, dy, dx1);
    omp::dense_backward_input(s, w, dy, dx2);
    CHECK(dx1 == dx2);
    serial::dense_backward_params(s, x, dy, dw1, db1);
    omp::dense_backward_params(s, x, dy, dw2, db2);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);

    for (std::size_t o = 0; o < s.out; ++o) {
      double ref = b[o];
      for (std::size_t i = 0; i < s.in; ++i) ref += w[o * s.in + i] * x[i];
      CHECK(y1[o] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv serial and parallel agree bit for bit") {
  Rng rng(2);
  for (const auto& s : kConvShapes) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const auto in = random_vec(s.channels * s.height * s.width, rng);
    const auto k = random_vec(s.filters * s.channels * s.kernel_h * s.kernel_w, rng);
    const auto b = random_vec(s.filters, rng);
    const auto dout = random_vec(s.filters * oh * ow, rng);
    std::vector<double> o1(s.filters * oh * ow), o2(o1.size());
    serial::conv2d_forward(s, in, k, b, o1);
    omp::conv2d_forward(s, in, k, b, o2);
    CHECK(o1 == o2);

    std::vector<double> di1(in.size()), di2(in.size(), 9.0);
    serial::conv2d_backward_input(s, dout, k, di1);
    omp::conv2d_backward_input(s, dout, k, di2);
    CHECK(di1 == di2);

    std::vector<double> dk1(k.size(), 0.1), dk2(k.size(), 0.1), db1(b.size()), db2(b.size());
    serial::conv2d_backward_params(s, in, dout, dk1, db1);
    omp::conv2d_backward_params(s, in, dout, dk2, db2);
    CHECK(dk1 == dk2);
    CHECK(db1 == db2);
  }
}

TEST_CASE("conv forward against a direct loop") {
  Rng rng(3);
  const ConvShape s{2, 6, 5, 3, 3, 2};
  const auto in = random_vec(2 * 6 * 5, rng);
  const auto k = random_vec(3 * 2 * 3 * 2, rng);
  const auto b = random_vec(3, rng);
  std::vector<double> out(3 * s.out_h() * s.out_w());
  serial::conv2d_forward(s, in, k, b, out);
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t y = 0; y < s.out_h(); ++y)
      for (std::size_t x = 0; x < s.out_w(); ++x) {
        double ref = b[f];
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j)
              ref += in[(c * 6 + y + i) * 5 + x + j] * k[((f * 2 + c) * 3 + i) * 2 + j];
        CHECK(out[(f * s.out_h() + y) * s.out_w() + x] == doctest::Approx(ref).epsilon(1e-12));
      }
}

TEST_CASE("conv backward input is the adjoint of forward") {
  Rng rng(4);
  for (const auto& s : kConvShapes) {
    const auto x = random_vec(s.channels * s.height * s.width, rng);
    const auto k = random_vec(s.filters * s.channels * s.kernel_h * s.kernel_w, rng);
    const std::vector<double> zero(s.filters, 0.0);
    const auto g = random_vec(s.filters * s.out_h() * s.out_w(), rng);
    std::vector<double> y(g.size()), dx(x.size());
    serial::conv2d_forward(s, x, k, zero, y);
    serial::conv2d_backward_input(s, g, k, dx);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * dx[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("max pooling floors, prefers the first maximum and routes gradients") {
  const PoolShape s{1, 5, 5, 2};
  std::vector<double> in(25, 0.0);
  in[0] = 1.0;
  in[1] = 1.0;  // tie with in[0]
  in[24] = 100.0;  // in the dropped border
  std::vector<double> out(4);
  std::vector<std::size_t> arg(4);
  serial::maxpool2d_forward(s, in, out, arg);
  CHECK(out[0] == 1.0);
  CHECK(arg[0] == 0);
  const std::vector<double> dout = {1, 2, 3, 4};
  std::vector<double> din(25, 7.0);
  serial::maxpool2d_backward(s, dout, arg, din);
  CHECK(din[0] == 1.0);
  CHECK(din[1] == 0.0);
  CHECK(din[24] == 0.0);

  Rng rng(5);
  const PoolShape big{8, 60, 70, 2};
  const auto x = random_vec(8 * 60 * 70, rng);
  std::vector<double> o1(8 * 30 * 35), o2(o1.size());
  std::vector<std::size_t> a1(o1.size()), a2(o1.size());
  serial::maxpool2d_forward(big, x, o1, a1);
  omp::maxpool2d_forward(big, x, o2, a2);
  CHECK(o1 == o2);
  CHECK(a1 == a2);
  std::vector<double> d1(x.size()), d2(x.size());
  const auto g = random_vec(o1.size(), rng);
  serial::maxpool2d_backward(big, g, a1, d1);
  omp::maxpool2d_backward(big, g, a1, d2);
  CHECK(d1 == d2);
}

TEST_CASE("results do not depend on the thread count") {
  Rng rng(6);
  const ConvShape s{1, 60, 64, 8, 10, 10};
  const auto in = random_vec(60 * 64, rng);
  const auto k = random_vec(8 * 100, rng);
  const auto b = random_vec(8, rng);
  std::vector<double> ref(8 * s.out_h() * s.out_w()), out(ref.size());
  omp_set_num_threads(1);
  omp::conv2d_forward(s, in, k, b, ref);
  omp_set_num_threads(4);
  omp::conv2d_forward(s, in, k, b, out);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(ref == out);
}

}
