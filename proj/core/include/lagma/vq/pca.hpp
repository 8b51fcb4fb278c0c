#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lagma/autodiff/tensor.hpp"

namespace lagma::vq {

/// Two leading principal axes of a point cloud.
struct Pca2 {
  std::vector<double> mean;
  /// Unit-norm axes; the sign is fixed so the largest-magnitude entry is positive.
  std::array<std::vector<double>, 2> axes;
  /// Variances along the axes (descending).
  std::array<double, 2> variance{0.0, 0.0};

  std::array<double, 2> project(std::span<const double> point) const;
};

/// Fits the leading two components of the rows of `points`. With a single
/// dimension the second axis is zero.
Pca2 fit_pca2(const ad::Tensor& points);

}  // namespace lagma::vq
