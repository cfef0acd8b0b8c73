#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace jlse {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  /// Stacks vectors as columns.
  static Mat from_columns(const std::vector<Vec>& columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  void set_row(std::size_t r, std::span<const double> values);

  Vec col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> values);

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Mat transpose() const;
  bool all_finite() const;

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);
/// a^T b without materializing the transpose.
Mat matmul_at_b(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, std::span<const double> x);
/// a^T x.
Vec matvec_t(const Mat& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
double norm(std::span<const double> v);
double frobenius_sq(const Mat& m);
Vec subtract(std::span<const double> a, std::span<const double> b);
/// Rows of `m` selected by `indices`, in order.
Mat select_rows(const Mat& m, std::span<const std::size_t> indices);

}  // namespace jlse
