#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pcl/kernels.hpp"
#include "pcl/rng.hpp"
#include "pcl/tensor.hpp"

namespace pcl {

enum class Activation { none, relu };

// A differentiable stage operating on one example at a time. forward caches
// what backward needs; backward accumulates parameter gradients and returns
// the gradient with respect to the last forward input.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(std::vector<Param*>& out) { (void)out; }
  virtual Shape output_shape() const = 0;
  virtual std::string name() const = 0;
  virtual void set_exec(kernels::Exec e) { exec_ = e; }

 protected:
  kernels::Exec exec_ = kernels::Exec::parallel;
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_fan_in(Tensor& t, std::size_t fan_in, Rng& rng);

class Dense final : public Layer {
 public:
  Dense(std::string name, std::size_t in, std::size_t out, Activation act, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  Shape output_shape() const override { return {shape_.out}; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  kernels::DenseShape shape_;
  Activation act_;
  Param weight_;
  Param bias_;
  Tensor input_;
  Tensor output_;
};

// Single-direction LSTM over a [steps][in] sequence. Gate order i, f, g, o.
// Output is either the final hidden state [units] or, with return_sequences,
// all states [steps][units] indexed by original time step.
class Lstm final : public Layer {
 public:
  Lstm(std::string name, std::size_t steps, std::size_t in, std::size_t units, bool reverse,
       bool return_sequences, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  Shape output_shape() const override;
  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::size_t steps_, in_, units_;
  bool reverse_, return_sequences_;
  Param wx_;  // [4U][in]
  Param wh_;  // [4U][U]
  Param b_;   // [4U]
  // Caches, indexed by processing order.
  Tensor input_;
  std::vector<std::vector<double>> gates_;  // activated i,f,g,o
  std::vector<std::vector<double>> cell_, tanh_cell_, hidden_;
};

enum class BiLstmReadout { final_state, mean_pool };

// Forward and backward LSTMs over the same sequence; output [2U] is the
// concatenation of their final states or of their time-averaged states.
class BiLstm final : public Layer {
 public:
  BiLstm(std::string name, std::size_t steps, std::size_t in, std::size_t units,
         BiLstmReadout readout, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  Shape output_shape() const override { return {2 * units_}; }
  std::string name() const override { return name_; }
  void set_exec(kernels::Exec e) override;

 private:
  std::string name_;
  std::size_t steps_, units_;
  BiLstmReadout readout_;
  Lstm fwd_, bwd_;
};

class Conv2D final : public Layer {
 public:
  Conv2D(std::string name, const kernels::ConvShape& shape, Activation act, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  Shape output_shape() const override { return {shape_.filters, shape_.out_h(), shape_.out_w()}; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  kernels::ConvShape shape_;
  Activation act_;
  Param kernel_;
  Param bias_;
  Tensor input_;
  Tensor output_;
};

class MaxPool2D final : public Layer {
 public:
  MaxPool2D(std::string name, const kernels::PoolShape& shape);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  Shape output_shape() const override { return {shape_.channels, shape_.out_h(), shape_.out_w()}; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  kernels::PoolShape shape_;
  std::vector<std::size_t> argmax_;
};

class Reshape final : public Layer {
 public:
  Reshape(std::string name, Shape from, Shape to);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  Shape output_shape() const override { return to_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Shape from_, to_;
};

}  // namespace pcl
