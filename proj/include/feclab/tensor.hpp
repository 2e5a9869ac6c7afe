#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace feclab {

// All tensors are NCHW: [batch, channels, height, width].
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  int64_t count() const { return int64_t(n) * c * h * w; }
  bool operator==(const Shape&) const = default;
};

template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), data(static_cast<size_t>(s.count()), T(0)) {}
  Tensor(Shape s, std::vector<T> d) : shape(s), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != shape.count())
      throw std::invalid_argument("tensor data size does not match shape");
  }

  int64_t size() const { return shape.count(); }

  T& at(int n_, int c_, int y, int x) {
    return data[((int64_t(n_) * shape.c + c_) * shape.h + y) * shape.w + x];
  }
  const T& at(int n_, int c_, int y, int x) const {
    return data[((int64_t(n_) * shape.c + c_) * shape.h + y) * shape.w + x];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

template <typename T>
Tensor<T> scalar_tensor(T v) {
  Tensor<T> t(Shape{1, 1, 1, 1});
  t.data[0] = v;
  return t;
}

}  // namespace feclab
