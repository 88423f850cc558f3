#pragma once

// Binary checkpoint container (host byte order):
//   "GRNCKPT1"
//   u8   bytes per scalar (4 or 8)
//   u64  metadata entry count, then (string key, string value) pairs
//   u64  vocabulary size, then the words in id order
//   u64  parameter count, then per parameter:
//        string name, u64 rank, u64 dims[rank], raw scalars
// Strings are a u64 length followed by the bytes.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "grn/model.hpp"
#include "grn/params.hpp"

namespace grn {

using Metadata = std::map<std::string, std::string>;

struct CheckpointInfo {
  unsigned precision_bits = 0;
  Metadata metadata;
  std::vector<std::string> vocab;
};

CheckpointInfo read_checkpoint_info(const std::string& path);

Metadata model_metadata(const ModelConfig& config);
/// Fills the model fields stored in `meta` into `base`.
ModelConfig apply_metadata(const Metadata& meta, ModelConfig base);

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& model, const Metadata& extra = {});

/// Copies stored tensors into `store`. Every parameter must be present with
/// the same shape, and the file must not hold extra names.
template <typename T>
void load_parameters(const std::string& path, ParamStore<T>& store);

/// Rebuilds the model described by the checkpoint and loads its parameters.
template <typename T>
Model<T> load_model(const std::string& path);

}  // namespace grn
