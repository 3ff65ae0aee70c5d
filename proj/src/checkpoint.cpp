#include "pcl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"
#include "pcl/errors.hpp"

namespace pcl {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "PCLCKPT 1\n";

json spec_json(const ModelSpec& spec) {
  const auto& e = spec.encoder;
  const auto& h = spec.head_config;
  return json{
      {"encoder",
       {{"seq_len", e.seq_len},
        {"hidden_dim", e.hidden_dim},
        {"vocab_size", e.vocab_size},
        {"kind", to_string(e.kind)},
        {"weights_path", e.weights_path}}},
      {"head", to_string(spec.head)},
      {"subtask", to_string(spec.subtask)},
      {"head_config",
       {{"dense_units", h.dense_units},
        {"lstm_units", h.lstm_units},
        {"conv1_filters", h.conv1_filters},
        {"conv1_kernel", h.conv1_kernel},
        {"conv2_filters", h.conv2_filters},
        {"conv2_kernel", h.conv2_kernel},
        {"pool", h.pool},
        {"bilstm_readout", to_string(h.readout)}}},
  };
}

ModelSpec spec_from(const json& j) {
  ModelSpec spec;
  const auto& e = j.at("encoder");
  spec.encoder.seq_len = e.at("seq_len").get<std::size_t>();
  spec.encoder.hidden_dim = e.at("hidden_dim").get<std::size_t>();
  spec.encoder.vocab_size = e.at("vocab_size").get<std::size_t>();
  spec.encoder.kind = parse_encoder_kind(e.at("kind").get<std::string>());
  spec.encoder.weights_path = e.value("weights_path", "");
  spec.head = parse_head_kind(j.at("head").get<std::string>());
  spec.subtask = parse_subtask(j.at("subtask").get<std::string>());
  const auto& h = j.at("head_config");
  spec.head_config.dense_units = h.at("dense_units").get<std::size_t>();
  spec.head_config.lstm_units = h.at("lstm_units").get<std::size_t>();
  spec.head_config.conv1_filters = h.at("conv1_filters").get<std::size_t>();
  spec.head_config.conv1_kernel = h.at("conv1_kernel").get<std::size_t>();
  spec.head_config.conv2_filters = h.at("conv2_filters").get<std::size_t>();
  spec.head_config.conv2_kernel = h.at("conv2_kernel").get<std::size_t>();
  spec.head_config.pool = h.at("pool").get<std::size_t>();
  spec.head_config.readout = parse_readout(h.value("bilstm_readout", "final-state"));
  return spec;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = __builtin_bswap64(v);
  }
  return v;
}

struct Parsed {
  json header;
  std::string payload;
};

Parsed read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::string magic(kMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic) throw CompatibilityError(path + " is not a checkpoint");
  std::string len_line;
  std::getline(in, len_line);
  std::size_t len = 0;
  try {
    len = std::stoul(len_line);
  } catch (const std::exception&) {
    throw CompatibilityError(path + ": corrupt checkpoint header length");
  }
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw CompatibilityError(path + ": truncated checkpoint header");
  Parsed p;
  try {
    p.header = json::parse(header);
  } catch (const json::exception& e) {
    throw CompatibilityError(path + ": bad checkpoint header: " + e.what());
  }
  p.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return p;
}

// Fills the parameters of `model` named in the header; when `prefix` is set
// only tensors starting with it are copied.
void restore(Model& model, const Parsed& p, const std::string& path, const std::string& prefix) {
  std::map<std::string, Param*> by_name;
  for (auto* param : model.parameters()) by_name[param->name] = param;
  std::size_t offset = 0;
  std::size_t restored = 0;
  for (const auto& t : p.header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<Shape>();
    const std::size_t n = numel(shape);
    if (offset + n * 8 > p.payload.size()) {
      throw CompatibilityError(path + ": truncated tensor data at " + name);
    }
    const bool wanted = prefix.empty() || name.rfind(prefix, 0) == 0;
    if (wanted) {
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw CompatibilityError(path + ": unexpected tensor " + name);
      if (it->second->value.shape() != shape) {
        throw CompatibilityError(path + ": tensor " + name + " has shape " + to_string(shape) +
                                 ", model expects " + to_string(it->second->value.shape()));
      }
      auto dst = it->second->value.span();
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, p.payload.data() + offset + i * 8, 8);
        dst[i] = std::bit_cast<double>(to_le(bits));
      }
      ++restored;
    }
    offset += n * 8;
  }
  std::size_t expected = 0;
  for (const auto& [name, param] : by_name) {
    if (prefix.empty() || name.rfind(prefix, 0) == 0) ++expected;
  }
  if (restored != expected) {
    throw CompatibilityError(path + ": checkpoint holds " + std::to_string(restored) + " of " +
                             std::to_string(expected) + " expected tensors");
  }
}

}  // namespace

std::string spec_to_json(const ModelSpec& spec) { return spec_json(spec).dump(); }

ModelSpec spec_from_json(const std::string& text) { return spec_from(json::parse(text)); }

void save_checkpoint(const std::string& path, Model& model, const std::vector<std::string>& vocab) {
  json header;
  header["format"] = "pcl-checkpoint";
  header["version"] = 1;
  header["seed"] = model.seed();
  header["spec"] = spec_json(model.spec());
  header["activations"] = {{"encoder", kEncoderActivation},
                           {"dense", kDenseActivation},
                           {"conv", kConvActivation},
                           {"classifier", "none"}};
  header["vocab"] = vocab;
  json tensors = json::array();
  const auto params = model.parameters();
  for (const auto* p : params) tensors.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  header["tensors"] = tensors;
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp);
    out << kMagic << text.size() << '\n' << text;
    std::vector<char> buf;
    for (const auto* p : params) {
      buf.resize(p->value.size() * 8);
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(p->value[i]));
        std::memcpy(buf.data() + i * 8, &bits, 8);
      }
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw IoError("failed writing checkpoint " + tmp + " (disk full?)");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("cannot move checkpoint into place at " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  const Parsed p = read_checkpoint(path);
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> vocab;
  try {
    spec = spec_from(p.header.at("spec"));
    seed = p.header.at("seed").get<std::uint64_t>();
    vocab = p.header.at("vocab").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw CompatibilityError(path + ": incomplete checkpoint header: " + e.what());
  } catch (const DomainError& e) {
    throw CompatibilityError(path + ": " + e.what());
  }
  Model model(spec, seed);
  restore(model, p, path, "");
  return Checkpoint{std::move(model), std::move(vocab)};
}

void load_encoder_weights(Model& model, const std::string& path) {
  restore(model, read_checkpoint(path), path, "encoder.");
}

}  // namespace pcl
