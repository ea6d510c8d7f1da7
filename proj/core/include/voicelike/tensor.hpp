// Copyright (c) 2026 VoiceLike Authors
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

#ifndef VOICELIKE_TENSOR_HPP_
#define VOICELIKE_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace voicelike {

// Dense row-major tensor. Rank 1 and 2 are what the models use; the
// checkpoint format carries arbitrary rank. The grad buffer is empty until a
// backward pass (or an optimizer) allocates it; when present it has the same
// element count as data.
template <typename S>
struct TensorT {
  std::vector<std::size_t> dims;
  std::vector<S> data;
  std::vector<S> grad;

  TensorT() = default;
  TensorT(std::size_t rows, std::size_t cols)
      : dims{rows, cols}, data(rows * cols, S(0)) {}
  explicit TensorT(std::size_t n) : dims{n}, data(n, S(0)) {}

  static TensorT zeros(std::vector<std::size_t> shape) {
    TensorT t;
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    t.dims = std::move(shape);
    t.data.assign(n, S(0));
    return t;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return dims.size(); }
  // 1-D tensors are treated as a single row where a matrix is expected.
  std::size_t rows() const { return dims.size() >= 2 ? dims[0] : 1; }
  std::size_t cols() const {
    return dims.size() >= 2 ? dims[1] : (dims.empty() ? 0 : dims[0]);
  }

  S& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const S& at(std::size_t r, std::size_t c) const {
    return data[r * cols() + c];
  }
  S* row_ptr(std::size_t r) { return data.data() + r * cols(); }
  const S* row_ptr(std::size_t r) const { return data.data() + r * cols(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
  void zero_grad() {
    if (!grad.empty()) grad.assign(grad.size(), S(0));
  }

  bool same_shape(const TensorT& o) const { return dims == o.dims; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.dims = dims;
    out.data.reserve(data.size());
    for (S v : data) out.data.push_back(static_cast<U>(v));
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Checkpoint container: named float32 tensors.
//
// File layout ("LKBL"): magic, version u32, tensor count u32, then per tensor
// {name length u32, UTF-8 name, rank u32, dims u32 x rank, float32
// little-endian payload}. Round trips are bit-exact.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> entries;

  void add(const std::string& name, const Tensor& t) {
    entries.emplace_back(name, t);
  }
  const Tensor* find(const std::string& name) const;
  // Throws DataError when the name is missing.
  const Tensor& require(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace voicelike

#endif  // VOICELIKE_TENSOR_HPP_
