#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lagma::ad {

/// Dense row-major matrix of 64-bit floats.
///
/// Every tensor in the library is rank 2; vectors are stored as a single row
/// and scalars as 1x1. The flat buffer always holds rows * cols entries.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(1, 1, value); }
  static Tensor row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Value of a 1x1 tensor.
  double item() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double value);
  void reshape(std::size_t rows, std::size_t cols);
  bool all_finite() const;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// In-place helpers shared by ops and optimizers.
void add_into(Tensor& dst, const Tensor& src);
void axpy_into(Tensor& dst, double alpha, const Tensor& src);

/// C = A * B (plain, no tape).
Tensor matmul_plain(const Tensor& a, const Tensor& b);
/// C += A^T * B.
void matmul_tn_into(Tensor& c, const Tensor& a, const Tensor& b);
/// C += A * B^T.
void matmul_nt_into(Tensor& c, const Tensor& a, const Tensor& b);

}  // namespace lagma::ad
