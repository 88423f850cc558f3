#include "grn/params.hpp"

#include <cmath>

#include "grn/error.hpp"

namespace grn {

template <typename T>
typename ParamStore<T>::Tensor ParamStore<T>::add_uniform(const std::string& name, ad::Shape shape,
                                                          ad::Rng& rng) {
  const std::size_t fan_out = shape.empty() ? 1 : shape[0];
  const std::size_t fan_in = shape.size() < 2 ? 1 : shape[1];
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<T> values(ad::num_elements(shape));
  for (auto& v : values) v = static_cast<T>((2.0 * ad::uniform01(rng) - 1.0) * limit);
  return add(name, std::move(shape), std::move(values));
}

template <typename T>
typename ParamStore<T>::Tensor ParamStore<T>::add_zeros(const std::string& name, ad::Shape shape) {
  std::vector<T> values(ad::num_elements(shape), T(0));
  return add(name, std::move(shape), std::move(values));
}

template <typename T>
typename ParamStore<T>::Tensor ParamStore<T>::add(const std::string& name, ad::Shape shape,
                                                  std::vector<T> values) {
  if (params_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
  auto t = Tensor::parameter(std::move(shape), std::move(values));
  params_.emplace(name, t);
  return t;
}

template <typename T>
const typename ParamStore<T>::Tensor& ParamStore<T>::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
typename ParamStore<T>::Tensor& ParamStore<T>::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
std::vector<std::string> ParamStore<T>::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace grn
