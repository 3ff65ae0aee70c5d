#pragma once

#include <string>
#include <vector>

#include "pcl/model.hpp"

namespace pcl {

// On-disk layout:
//   "PCLCKPT 1\n"
//   <decimal byte length of header>\n
//   <JSON header: spec, seed, activations, vocabulary, tensor names/shapes>
//   <every tensor's values as little-endian float64, in header order>
struct Checkpoint {
  Model model;
  std::vector<std::string> vocab;
};

// Written to a temporary file and renamed into place; IoError on failure.
void save_checkpoint(const std::string& path, Model& model, const std::vector<std::string>& vocab);
Checkpoint load_checkpoint(const std::string& path);

// Copies the encoder.* tensors of a checkpoint into `model`; shapes must match.
void load_encoder_weights(Model& model, const std::string& path);

// JSON rendering of a spec (used in checkpoints and run manifests).
std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& json);

}  // namespace pcl
