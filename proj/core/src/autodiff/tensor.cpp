#include "lagma/autodiff/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lagma/common/error.hpp"

namespace lagma::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapConst view(const Tensor& t) {
  return MapConst(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

Map view(Tensor& t) {
  return Map(t.data().data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Tensor: " + std::to_string(data_.size()) + " values for shape [" +
                     std::to_string(rows) + "," + std::to_string(cols) + "]");
  }
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("Tensor::item on shape " + shape_string());
  }
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(std::size_t rows, std::size_t cols) {
  if (rows * cols != data_.size()) {
    throw ShapeError("reshape " + shape_string() + " to [" + std::to_string(rows) + "," +
                     std::to_string(cols) + "]");
  }
  rows_ = rows;
  cols_ = cols;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[' << rows_ << ',' << cols_ << ']';
  return os.str();
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void axpy_into(Tensor& dst, double alpha, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  Tensor c(a.rows(), b.cols());
  view(c).noalias() = view(a) * view(b);
  return c;
}

void matmul_tn_into(Tensor& c, const Tensor& a, const Tensor& b) {
  view(c).noalias() += view(a).transpose() * view(b);
}

void matmul_nt_into(Tensor& c, const Tensor& a, const Tensor& b) {
  view(c).noalias() += view(a) * view(b).transpose();
}

}  // namespace lagma::ad
