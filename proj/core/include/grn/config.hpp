#pragma once

// Flat key-value configuration.
//
//   # comment
//   grn.steps = 3
//   variant = SE
//
// Precedence, per key: command-line flag > config file > built-in default.
// Unknown keys and malformed values are configuration errors.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "grn/data.hpp"
#include "grn/model.hpp"

namespace grn {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues load_key_values(const std::string& path);

struct TrainConfig {
  std::size_t batch_size = 16;
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 1.0;
  double l2 = 1e-5;
  double dropout = 0.5;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;  // 0 disables early stopping
  std::size_t valid_beam_size = 64;
  std::uint64_t seed = 1;
  std::string checkpoint;  // best parameters are written here when set
  std::map<std::string, std::string> checkpoint_metadata;
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned precision = 64;
  std::string data;
  std::string embeddings;
  std::size_t min_count = 1;
  std::size_t beam_size = 64;
  std::size_t bootstrap = 0;  // 0 disables bootstrap intervals
  ModelConfig model;
  TrainConfig train;
  SyntheticConfig synthetic;
};

/// Every recognised key with its built-in default, in documentation order.
const std::vector<std::pair<std::string, std::string>>& config_defaults();

/// Applies `values` over the defaults. `seed` drives every random stream:
/// initialisation, shuffling, dropout, ablations and synthetic data.
RunConfig resolve_config(const KeyValues& values);
/// Layers: later maps override earlier ones.
RunConfig resolve_config(const std::vector<KeyValues>& layers);

KeyValues to_key_values(const RunConfig& c);
/// Stable short hash of the canonical key-value dump.
std::string config_digest(const RunConfig& c);

}  // namespace grn
