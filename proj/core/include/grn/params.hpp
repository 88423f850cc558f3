#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "grn/autodiff.hpp"

namespace grn {

/// Named trainable tensors. Names are stable identifiers used by checkpoints
/// and parameter accounting; iteration order is lexicographic by name.
template <typename T>
class ParamStore {
 public:
  using Tensor = ad::Tensor<T>;

  /// Registers a Glorot-uniform matrix (or vector when `shape` has rank 1).
  Tensor add_uniform(const std::string& name, ad::Shape shape, ad::Rng& rng);
  Tensor add_zeros(const std::string& name, ad::Shape shape);
  Tensor add(const std::string& name, ad::Shape shape, std::vector<T> values);

  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace grn
