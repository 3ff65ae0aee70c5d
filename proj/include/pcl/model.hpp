#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcl/balance.hpp"
#include "pcl/corpus.hpp"
#include "pcl/encoder.hpp"
#include "pcl/layers.hpp"

namespace pcl {

enum class HeadKind { fnn, bilstm, cnn, bls_cnn };
enum class Subtask { a, b };

std::string to_string(HeadKind k);
std::string to_string(Subtask s);
std::string to_string(EncoderKind k);
std::string to_string(BiLstmReadout r);
HeadKind parse_head_kind(std::string_view s);
Subtask parse_subtask(std::string_view s);
EncoderKind parse_encoder_kind(std::string_view s);
BiLstmReadout parse_readout(std::string_view s);

// Layer sizes of the classifier heads. full() holds the published sizes;
// tiny() shrinks them so every head fits a 30x16 encoder output.
struct HeadConfig {
  std::size_t dense_units = 106;
  std::size_t lstm_units = 106;
  std::size_t conv1_filters = 64;
  std::size_t conv1_kernel = 10;
  std::size_t conv2_filters = 32;
  std::size_t conv2_kernel = 5;
  std::size_t pool = 2;
  BiLstmReadout readout = BiLstmReadout::final_state;

  static HeadConfig full() { return {}; }
  static HeadConfig tiny();
  bool operator==(const HeadConfig&) const = default;
};

// Nonlinearities are fixed; they are written into checkpoints as metadata.
inline constexpr std::string_view kEncoderActivation = "tanh";
inline constexpr std::string_view kDenseActivation = "relu";
inline constexpr std::string_view kConvActivation = "relu";

struct ModelSpec {
  EncoderConfig encoder;
  HeadKind head = HeadKind::fnn;
  Subtask subtask = Subtask::a;
  HeadConfig head_config;

  // One 2-way output for subtask A, one per category for subtask B.
  std::size_t num_outputs() const { return subtask == Subtask::a ? 1 : kNumCategories; }
};

struct LayerShape {
  std::string layer;
  Shape output;
  std::size_t params = 0;
  bool operator==(const LayerShape&) const = default;
};

// Output shape and parameter count of every stage, computed from the spec
// alone. Throws ShapeError (listing the shapes so far) when a convolution or
// pooling output would be empty.
std::vector<LayerShape> plan_shapes(const ModelSpec& spec);
std::size_t planned_parameter_count(const ModelSpec& spec, bool include_encoder);

struct HeadOutput {
  std::vector<Logits> logits;  // num_outputs() entries
};

// Encoder, head trunk, shared dense layer, and the per-output 2-unit
// classifiers. Processes one example per forward/backward pair.
class Model {
 public:
  Model(const ModelSpec& spec, std::uint64_t seed);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  HeadOutput forward(std::span<const int> ids, std::span<const int> mask);
  // ids/mask are row-major [rows][seq_len].
  std::vector<HeadOutput> forward_batch(std::span<const int> ids, std::span<const int> mask);
  // Gradient of the loss w.r.t. the logits of the most recent forward.
  void backward(std::span<const Logits> dlogits);

  std::vector<Param*> parameters();
  std::vector<Param*> encoder_parameters();
  std::vector<Param*> head_parameters();
  std::size_t parameter_count();
  void zero_grad();

  // Runs forward and records the actual output shape of each stage, named
  // as in plan_shapes.
  std::vector<LayerShape> trace(std::span<const int> ids, std::span<const int> mask);

  void set_exec(kernels::Exec e);

 private:
  struct Stage {
    std::string label;
    std::unique_ptr<Layer> layer;
  };

  ModelSpec spec_;
  std::uint64_t seed_;
  std::unique_ptr<EmbeddingEncoder> encoder_;
  std::vector<Stage> trunk_;
  std::unique_ptr<Dense> dense_;
  std::vector<std::unique_ptr<Dense>> branches_;
};

// Pretrained encoders read their tensors from spec.encoder.weights_path.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct ParameterView {
  std::vector<Param*> params;
  std::size_t count = 0;
};

ParameterView trainable_parameters(Model& model, bool freeze_encoder = false);

}  // namespace pcl
