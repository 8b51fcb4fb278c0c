#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lagma/autodiff/tensor.hpp"

namespace lagma::ad {

/// Named parameter tensors with a gradient accumulator of identical shape.
///
/// Entries keep their insertion order, which is also the serialization order.
/// Adding entries invalidates references handed out earlier, so networks
/// register everything up front and only read/write values afterwards.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  std::size_t add(std::string name, Tensor init);

  /// Weight matrix drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  std::size_t add_weight(std::string name, std::size_t fan_in, std::size_t fan_out,
                         std::mt19937_64& rng);
  std::size_t add_bias(std::string name, std::size_t width);

  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;

  Tensor& value(std::size_t i) { return entries_[i].value; }
  const Tensor& value(std::size_t i) const { return entries_[i].value; }
  Tensor& grad(std::size_t i) { return entries_[i].grad; }
  const Tensor& grad(std::size_t i) const { return entries_[i].grad; }
  Tensor& value(std::string_view name) { return value(index_of(name)); }
  const Tensor& value(std::string_view name) const { return value(index_of(name)); }
  Tensor& grad(std::string_view name) { return grad(index_of(name)); }
  const Tensor& grad(std::string_view name) const { return grad(index_of(name)); }

  const std::string& name(std::size_t i) const { return entries_[i].name; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  double grad_norm() const;
  bool grads_finite() const;

  /// Copy values (not gradients) from a set with the same layout.
  void copy_values_from(const ParamSet& other);
  bool same_layout(const ParamSet& other) const;
  bool values_equal(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace lagma::ad
