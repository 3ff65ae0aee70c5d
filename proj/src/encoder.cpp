#include "pcl/encoder.hpp"

#include <cmath>

#include "pcl/errors.hpp"
#include "pcl/layers.hpp"

namespace pcl {

EncoderConfig EncoderConfig::tiny(std::size_t vocab_size) {
  EncoderConfig cfg;
  cfg.seq_len = 30;
  cfg.hidden_dim = 16;
  cfg.vocab_size = vocab_size;
  cfg.kind = EncoderKind::tiny_random;
  return cfg;
}

EmbeddingEncoder::EmbeddingEncoder(const EncoderConfig& cfg, Rng& rng)
    : cfg_(cfg),
      token_embedding_("encoder.token_embedding", {cfg.vocab_size, cfg.hidden_dim}),
      position_embedding_("encoder.position_embedding", {cfg.seq_len, cfg.hidden_dim}),
      projection_("encoder.projection.weight", {cfg.hidden_dim, cfg.hidden_dim}),
      projection_bias_("encoder.projection.bias", {cfg.hidden_dim}) {
  if (cfg.seq_len == 0 || cfg.hidden_dim == 0 || cfg.vocab_size == 0) {
    throw ShapeError("encoder dimensions must be positive");
  }
  init_fan_in(token_embedding_.value, cfg.hidden_dim, rng);
  init_fan_in(position_embedding_.value, cfg.hidden_dim, rng);
  init_fan_in(projection_.value, cfg.hidden_dim, rng);
}

Tensor EmbeddingEncoder::forward(std::span<const int> ids, std::span<const int> mask) {
  const std::size_t S = cfg_.seq_len, H = cfg_.hidden_dim;
  if (ids.size() != S || mask.size() != S) {
    throw ShapeError("encoder expects " + std::to_string(S) + " tokens, got " +
                     std::to_string(ids.size()) + " ids / " + std::to_string(mask.size()) +
                     " mask entries");
  }
  ids_.assign(ids.begin(), ids.end());
  mask_.assign(mask.begin(), mask.end());
  summed_ = Tensor({S, H});
  output_ = Tensor({S, H});
  for (std::size_t t = 0; t < S; ++t) {
    const int id = ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
      throw ShapeError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(cfg_.vocab_size));
    }
    if (!mask[t]) continue;
    auto e = summed_.span().subspan(t * H, H);
    for (std::size_t k = 0; k < H; ++k) {
      e[k] = token_embedding_.value[static_cast<std::size_t>(id) * H + k] +
             position_embedding_.value[t * H + k];
    }
    auto h = output_.span().subspan(t * H, H);
    kernels::dense_forward(exec_, {H, H}, projection_.value.span(), projection_bias_.value.span(),
                           e, h);
    for (auto& v : h) v = std::tanh(v);
  }
  return output_;
}

void EmbeddingEncoder::backward(const Tensor& dy) {
  const std::size_t S = cfg_.seq_len, H = cfg_.hidden_dim;
  std::vector<double> da(H), de(H);
  for (std::size_t t = 0; t < S; ++t) {
    if (!mask_[t]) continue;
    for (std::size_t k = 0; k < H; ++k) {
      const double h = output_[t * H + k];
      da[k] = dy[t * H + k] * (1.0 - h * h);
    }
    kernels::dense_backward_params(exec_, {H, H}, summed_.span().subspan(t * H, H), da,
                                   projection_.grad.span(), projection_bias_.grad.span());
    kernels::dense_backward_input(exec_, {H, H}, projection_.value.span(), da, de);
    const auto id = static_cast<std::size_t>(ids_[t]);
    for (std::size_t k = 0; k < H; ++k) {
      token_embedding_.grad[id * H + k] += de[k];
      position_embedding_.grad[t * H + k] += de[k];
    }
  }
}

void EmbeddingEncoder::collect_params(std::vector<Param*>& out) {
  out.push_back(&token_embedding_);
  out.push_back(&position_embedding_);
  out.push_back(&projection_);
  out.push_back(&projection_bias_);
}

}  // namespace pcl
