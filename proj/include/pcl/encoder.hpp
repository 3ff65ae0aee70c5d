#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pcl/kernels.hpp"
#include "pcl/rng.hpp"
#include "pcl/tensor.hpp"

namespace pcl {

enum class EncoderKind {
  tiny_random,  // freshly initialised from the run seed
  pretrained,   // encoder tensors loaded from a weights file
};

struct EncoderConfig {
  std::size_t seq_len = 106;
  std::size_t hidden_dim = 1024;
  std::size_t vocab_size = 50265;
  EncoderKind kind = EncoderKind::pretrained;
  std::string weights_path;  // pretrained only

  // 30 tokens x 16 dims.
  static EncoderConfig tiny(std::size_t vocab_size);
};

// Token + position embeddings followed by a tanh projection; padding
// positions (mask 0) produce zero rows. Output is [seq_len][hidden_dim].
class EmbeddingEncoder {
 public:
  EmbeddingEncoder(const EncoderConfig& cfg, Rng& rng);

  Tensor forward(std::span<const int> ids, std::span<const int> mask);
  void backward(const Tensor& dy);
  void collect_params(std::vector<Param*>& out);
  void set_exec(kernels::Exec e) { exec_ = e; }

 private:
  EncoderConfig cfg_;
  kernels::Exec exec_ = kernels::Exec::parallel;
  Param token_embedding_;     // [vocab][hidden]
  Param position_embedding_;  // [seq][hidden]
  Param projection_;          // [hidden][hidden]
  Param projection_bias_;     // [hidden]
  std::vector<int> ids_, mask_;
  Tensor summed_;  // token + position, [seq][hidden]
  Tensor output_;
};

}  // namespace pcl
