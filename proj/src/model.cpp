#include "pcl/model.hpp"

#include <algorithm>
#include <cctype>

#include "pcl/checkpoint.hpp"
#include "pcl/errors.hpp"

namespace pcl {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Stage descriptions shared by the planner and the builder.
struct StagePlan {
  enum class Kind { reshape, lstm_seq, bilstm, conv, pool } kind;
  std::string label;
  Shape in, out;
  kernels::ConvShape conv{};
  kernels::PoolShape pool{};
  std::size_t params = 0;
};

std::string describe(const std::vector<StagePlan>& stages) {
  std::string s;
  for (const auto& st : stages) s += "\n  " + st.label + " -> " + to_string(st.out);
  return s;
}

void add_cnn_stack(std::vector<StagePlan>& stages, std::size_t height, std::size_t width,
                   const HeadConfig& hc) {
  auto fail = [&](const std::string& what) {
    throw ShapeError(what + "; shapes so far:" + describe(stages));
  };
  stages.push_back({StagePlan::Kind::reshape, "as_image", {height, width}, {1, height, width}});
  std::size_t channels = 1;
  const std::size_t filters[] = {hc.conv1_filters, hc.conv2_filters};
  const std::size_t ksize[] = {hc.conv1_kernel, hc.conv2_kernel};
  for (int i = 0; i < 2; ++i) {
    const std::string n = std::to_string(i + 1);
    kernels::ConvShape cs{channels, height, width, filters[i], ksize[i], ksize[i]};
    if (filters[i] == 0 || ksize[i] == 0 || cs.out_h() == 0 || cs.out_w() == 0) {
      fail("conv" + n + ": " + std::to_string(ksize[i]) + "x" + std::to_string(ksize[i]) +
           " kernel on " + std::to_string(height) + "x" + std::to_string(width) +
           " input gives a non-positive output");
    }
    StagePlan conv{StagePlan::Kind::conv, "conv" + n, {channels, height, width},
                   {cs.filters, cs.out_h(), cs.out_w()}};
    conv.conv = cs;
    conv.params = cs.filters * channels * ksize[i] * ksize[i] + cs.filters;
    stages.push_back(conv);
    kernels::PoolShape ps{cs.filters, cs.out_h(), cs.out_w(), hc.pool};
    if (hc.pool == 0 || ps.out_h() == 0 || ps.out_w() == 0) {
      fail("pool" + n + ": " + std::to_string(hc.pool) + "x" + std::to_string(hc.pool) +
           " pooling on " + std::to_string(ps.height) + "x" + std::to_string(ps.width) +
           " input gives a non-positive output");
    }
    StagePlan pool{StagePlan::Kind::pool, "pool" + n, conv.out,
                   {ps.channels, ps.out_h(), ps.out_w()}};
    pool.pool = ps;
    stages.push_back(pool);
    channels = ps.channels;
    height = ps.out_h();
    width = ps.out_w();
  }
  const Shape last = stages.back().out;
  stages.push_back({StagePlan::Kind::reshape, "flatten", last, {numel(last)}});
}

std::vector<StagePlan> plan_trunk(const ModelSpec& spec) {
  const std::size_t S = spec.encoder.seq_len, H = spec.encoder.hidden_dim;
  const auto& hc = spec.head_config;
  if (S == 0 || H == 0) throw ShapeError("encoder output must be non-empty");
  std::vector<StagePlan> stages;
  switch (spec.head) {
    case HeadKind::fnn:
      stages.push_back({StagePlan::Kind::reshape, "flatten", {S, H}, {S * H}});
      break;
    case HeadKind::bilstm: {
      if (hc.lstm_units == 0) throw ShapeError("bilstm: zero units");
      StagePlan st{StagePlan::Kind::bilstm, "bilstm", {S, H}, {2 * hc.lstm_units}};
      st.params = 2 * (4 * hc.lstm_units * (H + hc.lstm_units) + 4 * hc.lstm_units);
      stages.push_back(st);
      break;
    }
    case HeadKind::cnn:
      add_cnn_stack(stages, S, H, hc);
      break;
    case HeadKind::bls_cnn: {
      if (hc.lstm_units == 0) throw ShapeError("lstm: zero units");
      StagePlan st{StagePlan::Kind::lstm_seq, "lstm", {S, H}, {S, hc.lstm_units}};
      st.params = 4 * hc.lstm_units * (H + hc.lstm_units) + 4 * hc.lstm_units;
      stages.push_back(st);
      add_cnn_stack(stages, S, hc.lstm_units, hc);
      break;
    }
  }
  return stages;
}

std::size_t encoder_param_count(const EncoderConfig& e) {
  return e.vocab_size * e.hidden_dim + e.seq_len * e.hidden_dim + e.hidden_dim * e.hidden_dim +
         e.hidden_dim;
}

std::string branch_label(std::size_t k, std::size_t n) {
  return n == 1 ? std::string("classifier") : "classifier." + std::string(kCategoryCodes[k]);
}

}  // namespace

std::string to_string(HeadKind k) {
  switch (k) {
    case HeadKind::fnn: return "FNN";
    case HeadKind::bilstm: return "BiLSTM";
    case HeadKind::cnn: return "CNN";
    case HeadKind::bls_cnn: return "BLS-CNN";
  }
  return "?";
}

std::string to_string(Subtask s) { return s == Subtask::a ? "A" : "B"; }

std::string to_string(EncoderKind k) {
  return k == EncoderKind::tiny_random ? "tiny-random" : "pretrained";
}

std::string to_string(BiLstmReadout r) {
  return r == BiLstmReadout::final_state ? "final-state" : "mean-pool";
}

HeadKind parse_head_kind(std::string_view s) {
  const auto k = lower(s);
  if (k == "fnn" || k == "rb-fnn") return HeadKind::fnn;
  if (k == "bilstm" || k == "rb-bilstm") return HeadKind::bilstm;
  if (k == "cnn" || k == "rb-cnn") return HeadKind::cnn;
  if (k == "bls-cnn" || k == "rb-bls-cnn" || k == "bls_cnn") return HeadKind::bls_cnn;
  throw DomainError("unknown head kind '" + std::string(s) + "'");
}

Subtask parse_subtask(std::string_view s) {
  const auto k = lower(s);
  if (k == "a") return Subtask::a;
  if (k == "b") return Subtask::b;
  throw DomainError("unknown subtask '" + std::string(s) + "' (expected A or B)");
}

EncoderKind parse_encoder_kind(std::string_view s) {
  const auto k = lower(s);
  if (k == "tiny-random" || k == "tiny_random" || k == "tiny") return EncoderKind::tiny_random;
  if (k == "pretrained") return EncoderKind::pretrained;
  throw DomainError("unknown encoder kind '" + std::string(s) + "'");
}

BiLstmReadout parse_readout(std::string_view s) {
  const auto k = lower(s);
  if (k == "final-state" || k == "final_state") return BiLstmReadout::final_state;
  if (k == "mean-pool" || k == "mean_pool") return BiLstmReadout::mean_pool;
  throw DomainError("unknown BiLSTM readout '" + std::string(s) + "'");
}

HeadConfig HeadConfig::tiny() {
  HeadConfig hc;
  hc.dense_units = 16;
  hc.lstm_units = 12;
  hc.conv1_filters = 4;
  hc.conv1_kernel = 3;
  hc.conv2_filters = 4;
  hc.conv2_kernel = 3;
  hc.pool = 2;
  return hc;
}

std::vector<LayerShape> plan_shapes(const ModelSpec& spec) {
  std::vector<LayerShape> out;
  out.push_back({"encoder", {spec.encoder.seq_len, spec.encoder.hidden_dim},
                 encoder_param_count(spec.encoder)});
  const auto trunk = plan_trunk(spec);
  for (const auto& st : trunk) out.push_back({st.label, st.out, st.params});
  const std::size_t features = numel(trunk.back().out);
  const std::size_t D = spec.head_config.dense_units;
  if (D == 0) throw ShapeError("dense layer has zero units");
  out.push_back({"dense", {D}, features * D + D});
  const std::size_t n = spec.num_outputs();
  for (std::size_t k = 0; k < n; ++k) out.push_back({branch_label(k, n), {2}, 2 * D + 2});
  return out;
}

std::size_t planned_parameter_count(const ModelSpec& spec, bool include_encoder) {
  std::size_t total = 0;
  for (const auto& ls : plan_shapes(spec)) {
    if (ls.layer == "encoder" && !include_encoder) continue;
    total += ls.params;
  }
  return total;
}

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  const auto trunk = plan_trunk(spec);
  Rng rng(seed);
  encoder_ = std::make_unique<EmbeddingEncoder>(spec.encoder, rng);
  const auto& hc = spec.head_config;
  for (const auto& st : trunk) {
    std::unique_ptr<Layer> layer;
    const std::string name = "head." + st.label;
    switch (st.kind) {
      case StagePlan::Kind::reshape:
        layer = std::make_unique<Reshape>(name, st.in, st.out);
        break;
      case StagePlan::Kind::bilstm:
        layer = std::make_unique<BiLstm>(name, st.in[0], st.in[1], hc.lstm_units, hc.readout, rng);
        break;
      case StagePlan::Kind::lstm_seq:
        layer = std::make_unique<Lstm>(name, st.in[0], st.in[1], hc.lstm_units, false, true, rng);
        break;
      case StagePlan::Kind::conv:
        layer = std::make_unique<Conv2D>(name, st.conv, Activation::relu, rng);
        break;
      case StagePlan::Kind::pool:
        layer = std::make_unique<MaxPool2D>(name, st.pool);
        break;
    }
    trunk_.push_back({st.label, std::move(layer)});
  }
  const std::size_t features = numel(trunk.back().out);
  dense_ = std::make_unique<Dense>("head.dense", features, hc.dense_units, Activation::relu, rng);
  const std::size_t n = spec.num_outputs();
  for (std::size_t k = 0; k < n; ++k) {
    branches_.push_back(std::make_unique<Dense>("head." + branch_label(k, n), hc.dense_units, 2,
                                                Activation::none, rng));
  }
}

HeadOutput Model::forward(std::span<const int> ids, std::span<const int> mask) {
  Tensor x = encoder_->forward(ids, mask);
  for (auto& st : trunk_) x = st.layer->forward(x);
  const Tensor shared = dense_->forward(x);
  HeadOutput out;
  for (auto& br : branches_) {
    const Tensor z = br->forward(shared);
    out.logits.push_back({z[0], z[1]});
  }
  return out;
}

std::vector<HeadOutput> Model::forward_batch(std::span<const int> ids, std::span<const int> mask) {
  const std::size_t S = spec_.encoder.seq_len;
  if (ids.size() % S != 0 || mask.size() != ids.size()) {
    throw ShapeError("batch of " + std::to_string(ids.size()) + " ids / " +
                     std::to_string(mask.size()) + " mask entries is not a multiple of seq_len " +
                     std::to_string(S));
  }
  std::vector<HeadOutput> out;
  for (std::size_t r = 0; r < ids.size() / S; ++r) {
    out.push_back(forward(ids.subspan(r * S, S), mask.subspan(r * S, S)));
  }
  return out;
}

void Model::backward(std::span<const Logits> dlogits) {
  if (dlogits.size() != branches_.size()) {
    throw ShapeError("expected " + std::to_string(branches_.size()) + " logit gradients, got " +
                     std::to_string(dlogits.size()));
  }
  Tensor dshared({spec_.head_config.dense_units});
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    Tensor dz({2});
    dz[0] = dlogits[k][0];
    dz[1] = dlogits[k][1];
    const Tensor d = branches_[k]->backward(dz);
    for (std::size_t i = 0; i < d.size(); ++i) dshared[i] += d[i];
  }
  Tensor g = dense_->backward(dshared);
  for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = it->layer->backward(g);
  encoder_->backward(g);
}

std::vector<Param*> Model::encoder_parameters() {
  std::vector<Param*> out;
  encoder_->collect_params(out);
  return out;
}

std::vector<Param*> Model::head_parameters() {
  std::vector<Param*> out;
  for (auto& st : trunk_) st.layer->collect_params(out);
  dense_->collect_params(out);
  for (auto& br : branches_) br->collect_params(out);
  return out;
}

std::vector<Param*> Model::parameters() {
  auto out = encoder_parameters();
  for (auto* p : head_parameters()) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

void Model::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(0.0);
}

std::vector<LayerShape> Model::trace(std::span<const int> ids, std::span<const int> mask) {
  std::vector<LayerShape> out;
  auto count = [](Layer& l) {
    std::vector<Param*> ps;
    l.collect_params(ps);
    std::size_t n = 0;
    for (auto* p : ps) n += p->value.size();
    return n;
  };
  Tensor x = encoder_->forward(ids, mask);
  std::size_t enc = 0;
  for (auto* p : encoder_parameters()) enc += p->value.size();
  out.push_back({"encoder", x.shape(), enc});
  for (auto& st : trunk_) {
    x = st.layer->forward(x);
    out.push_back({st.label, x.shape(), count(*st.layer)});
  }
  const Tensor shared = dense_->forward(x);
  out.push_back({"dense", shared.shape(), count(*dense_)});
  const std::size_t n = branches_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Tensor z = branches_[k]->forward(shared);
    out.push_back({branch_label(k, n), z.shape(), count(*branches_[k])});
  }
  return out;
}

void Model::set_exec(kernels::Exec e) {
  encoder_->set_exec(e);
  for (auto& st : trunk_) st.layer->set_exec(e);
  dense_->set_exec(e);
  for (auto& br : branches_) br->set_exec(e);
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  Model model(spec, seed);
  if (spec.encoder.kind == EncoderKind::pretrained) {
    if (spec.encoder.weights_path.empty()) {
      throw CompatibilityError("pretrained encoder requires a weights path");
    }
    load_encoder_weights(model, spec.encoder.weights_path);
  }
  return model;
}

ParameterView trainable_parameters(Model& model, bool freeze_encoder) {
  ParameterView view;
  view.params = freeze_encoder ? model.head_parameters() : model.parameters();
  for (auto* p : view.params) view.count += p->value.size();
  return view;
}

}  // namespace pcl
