#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace persuasion {

// Row-major dense 2-d array of doubles.
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Array2&, const Array2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Row-major dense 3-d array of doubles; the last index is contiguous.
class Array3 {
 public:
  Array3() = default;
  Array3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

  std::size_t dim0() const noexcept { return d0_; }
  std::size_t dim1() const noexcept { return d1_; }
  std::size_t dim2() const noexcept { return d2_; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(i < d0_ && j < d1_ && k < d2_);
    return data_[(i * d1_ + j) * d2_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(i < d0_ && j < d1_ && k < d2_);
    return data_[(i * d1_ + j) * d2_ + k];
  }

  std::span<double> row(std::size_t i, std::size_t j) {
    return {data_.data() + (i * d1_ + j) * d2_, d2_};
  }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * d1_ + j) * d2_, d2_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Array3&, const Array3&) = default;

 private:
  std::size_t d0_ = 0;
  std::size_t d1_ = 0;
  std::size_t d2_ = 0;
  std::vector<double> data_;
};

}  // namespace persuasion
