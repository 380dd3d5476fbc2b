// Copyright 2026 The canids Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CANIDS_TENSOR_HPP
#define CANIDS_TENSOR_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "canids/error.hpp"

namespace canids {

/// Dense rank-4 tensor, contiguous row-major in (batch, height, width,
/// channels) order. The channel stride is 1, which is what the convolution
/// inner loops rely on.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;

  Tensor4(std::size_t b, std::size_t h, std::size_t w, std::size_t c,
          T init = T{})
      : dims_{b, h, w, c}, data_(b * h * w * c, init) {}

  static Tensor4 zeros_like(const Tensor4& other) {
    return Tensor4(other.batch(), other.height(), other.width(),
                   other.channels());
  }

  std::size_t batch() const { return dims_[0]; }
  std::size_t height() const { return dims_[1]; }
  std::size_t width() const { return dims_[2]; }
  std::size_t channels() const { return dims_[3]; }
  const std::array<std::size_t, 4>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator()(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
    return data_[offset(b, y, x, c)];
  }
  const T& operator()(std::size_t b, std::size_t y, std::size_t x,
                      std::size_t c) const {
    return data_[offset(b, y, x, c)];
  }

  /// Pointer to the channel vector at (b, y, x).
  T* ptr(std::size_t b, std::size_t y, std::size_t x) {
    return data_.data() + offset(b, y, x, 0);
  }
  const T* ptr(std::size_t b, std::size_t y, std::size_t x) const {
    return data_.data() + offset(b, y, x, 0);
  }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool same_shape(const Tensor4& other) const { return dims_ == other.dims_; }

  std::string shape_str() const {
    return "(" + std::to_string(dims_[0]) + "," + std::to_string(dims_[1]) +
           "," + std::to_string(dims_[2]) + "," + std::to_string(dims_[3]) +
           ")";
  }

  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

 private:
  std::size_t offset(std::size_t b, std::size_t y, std::size_t x,
                     std::size_t c) const {
    return ((b * dims_[1] + y) * dims_[2] + x) * dims_[3] + c;
  }

  std::array<std::size_t, 4> dims_{0, 0, 0, 0};
  std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Tensor4<T>& a, const Tensor4<T>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(what) + ": " + a.shape_str() + " vs " +
                        b.shape_str());
  }
}

}  // namespace canids

#endif  // CANIDS_TENSOR_HPP
