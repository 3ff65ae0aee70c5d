#include "pcl/layers.hpp"

#include <cmath>

#include "pcl/errors.hpp"

namespace pcl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_input(const std::string& layer, const Tensor& x, std::size_t expected) {
  if (x.size() != expected) {
    throw ShapeError(layer + ": expected " + std::to_string(expected) + " inputs, got " +
                     to_string(x.shape()));
  }
}

}  // namespace

void init_fan_in(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.span()) v = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in, std::size_t out, Activation act, Rng& rng)
    : name_(std::move(name)),
      shape_{in, out},
      act_(act),
      weight_(name_ + ".weight", {out, in}),
      bias_(name_ + ".bias", {out}) {
  init_fan_in(weight_.value, in, rng);
}

Tensor Dense::forward(const Tensor& x) {
  check_input(name_, x, shape_.in);
  input_ = x;
  Tensor y({shape_.out});
  kernels::dense_forward(exec_, shape_, weight_.value.span(), bias_.value.span(), x.span(),
                         y.span());
  if (act_ == Activation::relu) {
    for (auto& v : y.span()) v = v < 0.0 ? 0.0 : v;  // NaN passes through
  }
  output_ = y;
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  Tensor g = dy;
  if (act_ == Activation::relu) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(output_[i] > 0.0)) g[i] = 0.0;
    }
  }
  kernels::dense_backward_params(exec_, shape_, input_.span(), g.span(), weight_.grad.span(),
                                 bias_.grad.span());
  Tensor dx(input_.shape());
  kernels::dense_backward_input(exec_, shape_, weight_.value.span(), g.span(), dx.span());
  return dx;
}

void Dense::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---------------------------------------------------------------- Lstm

Lstm::Lstm(std::string name, std::size_t steps, std::size_t in, std::size_t units, bool reverse,
           bool return_sequences, Rng& rng)
    : name_(std::move(name)),
      steps_(steps),
      in_(in),
      units_(units),
      reverse_(reverse),
      return_sequences_(return_sequences),
      wx_(name_ + ".input_weight", {4 * units, in}),
      wh_(name_ + ".recurrent_weight", {4 * units, units}),
      b_(name_ + ".bias", {4 * units}) {
  init_fan_in(wx_.value, in, rng);
  init_fan_in(wh_.value, units, rng);
}

Shape Lstm::output_shape() const {
  return return_sequences_ ? Shape{steps_, units_} : Shape{units_};
}

Tensor Lstm::forward(const Tensor& x) {
  check_input(name_, x, steps_ * in_);
  input_ = x;
  const std::size_t U = units_;
  gates_.assign(steps_, std::vector<double>(4 * U));
  cell_.assign(steps_, std::vector<double>(U));
  tanh_cell_.assign(steps_, std::vector<double>(U));
  hidden_.assign(steps_, std::vector<double>(U));
  std::vector<double> h_prev(U, 0.0), c_prev(U, 0.0), rec(4 * U);
  for (std::size_t s = 0; s < steps_; ++s) {
    const std::size_t t = reverse_ ? steps_ - 1 - s : s;
    auto& a = gates_[s];
    kernels::dense_forward(exec_, {in_, 4 * U}, wx_.value.span(), b_.value.span(),
                           x.span().subspan(t * in_, in_), a);
    kernels::dense_forward(exec_, {U, 4 * U}, wh_.value.span(), {}, h_prev, rec);
    for (std::size_t k = 0; k < U; ++k) {
      const double i = sigmoid(a[k] + rec[k]);
      const double f = sigmoid(a[U + k] + rec[U + k]);
      const double g = std::tanh(a[2 * U + k] + rec[2 * U + k]);
      const double o = sigmoid(a[3 * U + k] + rec[3 * U + k]);
      a[k] = i;
      a[U + k] = f;
      a[2 * U + k] = g;
      a[3 * U + k] = o;
      const double c = f * c_prev[k] + i * g;
      cell_[s][k] = c;
      tanh_cell_[s][k] = std::tanh(c);
      hidden_[s][k] = o * tanh_cell_[s][k];
    }
    h_prev = hidden_[s];
    c_prev = cell_[s];
  }
  if (!return_sequences_) {
    Tensor y({U});
    if (steps_) std::copy(hidden_.back().begin(), hidden_.back().end(), y.data());
    return y;
  }
  Tensor y({steps_, U});
  for (std::size_t s = 0; s < steps_; ++s) {
    const std::size_t t = reverse_ ? steps_ - 1 - s : s;
    std::copy(hidden_[s].begin(), hidden_[s].end(), y.data() + t * U);
  }
  return y;
}

Tensor Lstm::backward(const Tensor& dy) {
  const std::size_t U = units_;
  Tensor dx({steps_, in_});
  std::vector<double> dh_next(U, 0.0), dc_next(U, 0.0), da(4 * U), dx_t(in_), dh_rec(U);
  const std::vector<double> zeros(U, 0.0);
  for (std::size_t s = steps_; s-- > 0;) {
    const std::size_t t = reverse_ ? steps_ - 1 - s : s;
    const auto& gate = gates_[s];
    const auto& c_prev = s ? cell_[s - 1] : zeros;
    const auto& h_prev = s ? hidden_[s - 1] : zeros;
    for (std::size_t k = 0; k < U; ++k) {
      double dh = dh_next[k];
      if (return_sequences_) {
        dh += dy[t * U + k];
      } else if (s == steps_ - 1) {
        dh += dy[k];
      }
      const double i = gate[k], f = gate[U + k], g = gate[2 * U + k], o = gate[3 * U + k];
      const double tc = tanh_cell_[s][k];
      const double dc = dc_next[k] + dh * o * (1.0 - tc * tc);
      da[k] = dc * g * i * (1.0 - i);
      da[U + k] = dc * c_prev[k] * f * (1.0 - f);
      da[2 * U + k] = dc * i * (1.0 - g * g);
      da[3 * U + k] = dh * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    kernels::dense_backward_params(exec_, {in_, 4 * U}, input_.span().subspan(t * in_, in_), da,
                                   wx_.grad.span(), b_.grad.span());
    kernels::dense_backward_params(exec_, {U, 4 * U}, h_prev, da, wh_.grad.span(), {});
    kernels::dense_backward_input(exec_, {in_, 4 * U}, wx_.value.span(), da, dx_t);
    std::copy(dx_t.begin(), dx_t.end(), dx.data() + t * in_);
    kernels::dense_backward_input(exec_, {U, 4 * U}, wh_.value.span(), da, dh_rec);
    dh_next = dh_rec;
  }
  dx.reshape(input_.shape());
  return dx;
}

void Lstm::collect_params(std::vector<Param*>& out) {
  out.push_back(&wx_);
  out.push_back(&wh_);
  out.push_back(&b_);
}

// ---------------------------------------------------------------- BiLstm

BiLstm::BiLstm(std::string name, std::size_t steps, std::size_t in, std::size_t units,
               BiLstmReadout readout, Rng& rng)
    : name_(name),
      steps_(steps),
      units_(units),
      readout_(readout),
      fwd_(name + ".forward", steps, in, units, false, readout == BiLstmReadout::mean_pool, rng),
      bwd_(name + ".backward", steps, in, units, true, readout == BiLstmReadout::mean_pool, rng) {}

void BiLstm::set_exec(kernels::Exec e) {
  exec_ = e;
  fwd_.set_exec(e);
  bwd_.set_exec(e);
}

Tensor BiLstm::forward(const Tensor& x) {
  const Tensor a = fwd_.forward(x);
  const Tensor b = bwd_.forward(x);
  Tensor y({2 * units_});
  if (readout_ == BiLstmReadout::final_state) {
    std::copy(a.span().begin(), a.span().end(), y.data());
    std::copy(b.span().begin(), b.span().end(), y.data() + units_);
    return y;
  }
  const double inv = 1.0 / static_cast<double>(steps_);
  for (std::size_t t = 0; t < steps_; ++t) {
    for (std::size_t k = 0; k < units_; ++k) {
      y[k] += a[t * units_ + k] * inv;
      y[units_ + k] += b[t * units_ + k] * inv;
    }
  }
  return y;
}

Tensor BiLstm::backward(const Tensor& dy) {
  Tensor da, db;
  if (readout_ == BiLstmReadout::final_state) {
    da = Tensor({units_});
    db = Tensor({units_});
    std::copy(dy.data(), dy.data() + units_, da.data());
    std::copy(dy.data() + units_, dy.data() + 2 * units_, db.data());
  } else {
    da = Tensor({steps_, units_});
    db = Tensor({steps_, units_});
    const double inv = 1.0 / static_cast<double>(steps_);
    for (std::size_t t = 0; t < steps_; ++t) {
      for (std::size_t k = 0; k < units_; ++k) {
        da[t * units_ + k] = dy[k] * inv;
        db[t * units_ + k] = dy[units_ + k] * inv;
      }
    }
  }
  Tensor dx = fwd_.backward(da);
  const Tensor dx_b = bwd_.backward(db);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dx_b[i];
  return dx;
}

void BiLstm::collect_params(std::vector<Param*>& out) {
  fwd_.collect_params(out);
  bwd_.collect_params(out);
}

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(std::string name, const kernels::ConvShape& shape, Activation act, Rng& rng)
    : name_(std::move(name)),
      shape_(shape),
      act_(act),
      kernel_(name_ + ".kernel", {shape.filters, shape.channels, shape.kernel_h, shape.kernel_w}),
      bias_(name_ + ".bias", {shape.filters}) {
  if (shape.out_h() == 0 || shape.out_w() == 0) {
    throw ShapeError(name_ + ": " + std::to_string(shape.kernel_h) + "x" +
                     std::to_string(shape.kernel_w) + " kernel does not fit a " +
                     std::to_string(shape.height) + "x" + std::to_string(shape.width) + " input");
  }
  init_fan_in(kernel_.value, shape.channels * shape.kernel_h * shape.kernel_w, rng);
}

Tensor Conv2D::forward(const Tensor& x) {
  check_input(name_, x, shape_.channels * shape_.height * shape_.width);
  input_ = x;
  Tensor y(output_shape());
  kernels::conv2d_forward(exec_, shape_, x.span(), kernel_.value.span(), bias_.value.span(),
                          y.span());
  if (act_ == Activation::relu) {
    for (auto& v : y.span()) v = v < 0.0 ? 0.0 : v;  // NaN passes through
  }
  output_ = y;
  return y;
}

Tensor Conv2D::backward(const Tensor& dy) {
  Tensor g = dy;
  if (act_ == Activation::relu) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(output_[i] > 0.0)) g[i] = 0.0;
    }
  }
  kernels::conv2d_backward_params(exec_, shape_, input_.span(), g.span(), kernel_.grad.span(),
                                  bias_.grad.span());
  Tensor dx(input_.shape());
  kernels::conv2d_backward_input(exec_, shape_, g.span(), kernel_.value.span(), dx.span());
  return dx;
}

void Conv2D::collect_params(std::vector<Param*>& out) {
  out.push_back(&kernel_);
  out.push_back(&bias_);
}

// ---------------------------------------------------------------- MaxPool2D

MaxPool2D::MaxPool2D(std::string name, const kernels::PoolShape& shape)
    : name_(std::move(name)), shape_(shape) {
  if (shape.window == 0 || shape.out_h() == 0 || shape.out_w() == 0) {
    throw ShapeError(name_ + ": " + std::to_string(shape.window) + "x" +
                     std::to_string(shape.window) + " pooling does not fit a " +
                     std::to_string(shape.height) + "x" + std::to_string(shape.width) + " input");
  }
}

Tensor MaxPool2D::forward(const Tensor& x) {
  check_input(name_, x, shape_.channels * shape_.height * shape_.width);
  Tensor y(output_shape());
  argmax_.assign(y.size(), 0);
  kernels::maxpool2d_forward(exec_, shape_, x.span(), y.span(), argmax_);
  return y;
}

Tensor MaxPool2D::backward(const Tensor& dy) {
  Tensor dx({shape_.channels, shape_.height, shape_.width});
  kernels::maxpool2d_backward(exec_, shape_, dy.span(), argmax_, dx.span());
  return dx;
}

// ---------------------------------------------------------------- Reshape

Reshape::Reshape(std::string name, Shape from, Shape to)
    : name_(std::move(name)), from_(std::move(from)), to_(std::move(to)) {
  if (numel(from_) != numel(to_)) {
    throw ShapeError(name_ + ": cannot reshape " + to_string(from_) + " to " + to_string(to_));
  }
}

Tensor Reshape::forward(const Tensor& x) { return x.reshaped(to_); }

Tensor Reshape::backward(const Tensor& dy) { return dy.reshaped(from_); }

}  // namespace pcl
