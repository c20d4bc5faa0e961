// Copyright 2026 The fedgraph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FEDGRAPH_COMMON_HPP_
#define FEDGRAPH_COMMON_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedgraph {

// Malformed input files, infeasible splits, degenerate sampling pools.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or unknown configuration values. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure during training (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Tier : std::uint8_t { kPublic = 0, kPrivate = 1 };

inline std::string_view to_string(Tier tier) {
  return tier == Tier::kPublic ? "public" : "private";
}

using UserIndex = std::size_t;
using ItemIndex = std::size_t;

/// Heap storage with Eigen's maximum alignment. Vectorized reductions over a
/// mapped buffer peel by address, so a fixed alignment keeps sums identical
/// no matter which thread allocated the buffer.
template <typename Scalar>
using AlignedVector = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

/// Dense row-major matrix with contiguous storage.
template <typename Scalar>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Scalar fill = Scalar(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Scalar operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Scalar> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Scalar> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  void fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  AlignedVector<Scalar> data_;
};

/// N per-user item tables of shape (num_items x dim), stored back to back so
/// the whole stack is an (N x num_items*dim) row-major matrix.
template <typename Scalar>
class EmbeddingStack {
 public:
  EmbeddingStack() = default;
  EmbeddingStack(std::size_t num_users, std::size_t num_items, std::size_t dim)
      : num_users_(num_users), num_items_(num_items), dim_(dim),
        data_(num_users * num_items * dim, Scalar(0)) {}

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t dim() const { return dim_; }
  std::size_t block_size() const { return num_items_ * dim_; }

  std::span<Scalar> block(UserIndex u) {
    return {data_.data() + u * block_size(), block_size()};
  }
  std::span<const Scalar> block(UserIndex u) const {
    return {data_.data() + u * block_size(), block_size()};
  }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  bool same_shape(const EmbeddingStack& other) const {
    return num_users_ == other.num_users_ && num_items_ == other.num_items_ &&
           dim_ == other.dim_;
  }

  friend bool operator==(const EmbeddingStack&, const EmbeddingStack&) = default;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t dim_ = 0;
  AlignedVector<Scalar> data_;
};

}  // namespace fedgraph

#endif  // FEDGRAPH_COMMON_HPP_
