#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace sgc::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

// Dense row-major array. Plain value type; differentiation lives in Var.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data);

  static Tensor scalar(T v) { return Tensor(Shape{1}, v); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_scalar() const noexcept { return data_.size() == 1; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T item() const;

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

}  // namespace sgc::ad
