#include "lagma/vq/pca.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "lagma/common/error.hpp"

namespace lagma::vq {

std::array<double, 2> Pca2::project(std::span<const double> point) const {
  if (point.size() != mean.size()) {
    throw ShapeError("pca: point of dimension " + std::to_string(point.size()) + ", expected " +
                     std::to_string(mean.size()));
  }
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t c = 0; c < point.size(); ++c) out[k] += (point[c] - mean[c]) * axes[k][c];
  }
  return out;
}

Pca2 fit_pca2(const ad::Tensor& points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n == 0 || d == 0) throw ShapeError("pca: empty point set " + points.shape_string());
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> x(points.data().data(), static_cast<Eigen::Index>(n),
                             static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const RowMat centred = x.rowwise() - mu;
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);

  Pca2 out;
  out.mean.assign(mu.data(), mu.data() + d);
  for (std::size_t k = 0; k < 2; ++k) {
    out.axes[k].assign(d, 0.0);
    if (k >= d) continue;
    const auto col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.axes[k].assign(v.data(), v.data() + d);
    out.variance[k] = std::max(0.0, solver.eigenvalues()(col));
  }
  return out;
}

}  // namespace lagma::vq
