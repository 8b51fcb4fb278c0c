#include "lagma/autodiff/params.hpp"

#include <cmath>

#include "lagma/common/error.hpp"

namespace lagma::ad {

std::size_t ParamSet::add(std::string name, Tensor init) {
  if (contains(name)) throw Error("ParamSet: duplicate parameter '" + name + "'");
  Tensor grad(init.rows(), init.cols());
  entries_.push_back({std::move(name), std::move(init), std::move(grad)});
  return entries_.size() - 1;
}

std::size_t ParamSet::add_weight(std::string name, std::size_t fan_in, std::size_t fan_out,
                                 std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w(fan_in, fan_out);
  for (auto& v : w.data()) v = dist(rng);
  return add(std::move(name), std::move(w));
}

std::size_t ParamSet::add_bias(std::string name, std::size_t width) {
  return add(std::move(name), Tensor(1, width));
}

std::size_t ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw Error("ParamSet: no parameter named '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

double ParamSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (double g : e.grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

bool ParamSet::grads_finite() const {
  for (const auto& e : entries_) {
    if (!e.grad.all_finite()) return false;
  }
  return true;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        !entries_[i].value.same_shape(other.entries_[i].value)) {
      return false;
    }
  }
  return true;
}

void ParamSet::copy_values_from(const ParamSet& other) {
  if (!same_layout(other)) throw ShapeError("ParamSet::copy_values_from: layout mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].value = other.entries_[i].value;
}

bool ParamSet::values_equal(const ParamSet& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!(entries_[i].value == other.entries_[i].value)) return false;
  }
  return true;
}

}  // namespace lagma::ad
