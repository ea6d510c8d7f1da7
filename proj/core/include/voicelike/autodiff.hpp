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

#ifndef VOICELIKE_AUTODIFF_HPP_
#define VOICELIKE_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "voicelike/tensor.hpp"

namespace voicelike {

// Temporal context of a TDNN layer, e.g. {-2, 0, +2}. Offsets are strictly
// increasing and must contain 0.
struct ContextSpec {
  std::vector<int> offsets;

  explicit ContextSpec(std::vector<int> offs);
  int min_offset() const { return offsets.front(); }
  int max_offset() const { return offsets.back(); }
  // Number of frames consumed at the edges: max - min.
  int span() const { return max_offset() - min_offset(); }
  std::size_t size() const { return offsets.size(); }
};

// Reverse-mode tape over dense tensors. A tape records one forward pass;
// backward() may be called once per recorded graph. Leaves view caller-owned
// tensors, which must outlive the tape. Instantiated for float (training,
// inference) and double (finite-difference checks).
template <typename S>
class Tape {
 public:
  using Var = std::uint32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf whose gradient is not requested.
  Var constant(const TensorT<S>& t);
  // Leaf bound to a parameter; backward() accumulates into grad_sink, which
  // the caller must size to t.numel() beforehand.
  Var param(const TensorT<S>& t, std::vector<S>* grad_sink);
  // Convenience: binds the tensor's own grad buffer (allocating it).
  Var param(TensorT<S>& t);

  // C = A * B for A: MxK, B: KxN.
  Var matmul(Var a, Var b);
  // Elementwise sum, same shape.
  Var add(Var a, Var b);
  // Adds a 1xD (or length-D) row vector to every row of x (TxD).
  Var add_row(Var x, Var row);
  // y = c * x for a compile-time constant scalar.
  Var scale(Var x, S c);
  Var relu(Var x);
  // TDNN frame splicing over valid frames only: TxD -> (T-span) x (|ctx|*D),
  // output row j concatenates input rows j + (offset - min_offset).
  Var splice(Var x, const ContextSpec& ctx);
  // Same-length splicing with zero padding at the edges: TxD -> T x (|ctx|*D).
  // Used by 1-D convolutions.
  Var splice_padded(Var x, const ContextSpec& ctx);
  // [mean || sqrt(population variance + eps_var)] over rows: TxD -> 1x2D.
  Var stats_pool(Var x, S eps_var);
  // Embedding lookup: table kxE, ids in [0,k) -> TxE.
  Var gather_rows(Var table, const std::vector<int>& ids);
  // Length regulation: row t repeated reps[t] times; output sum(reps) rows.
  Var repeat_rows(Var x, const std::vector<int>& reps);
  // Mean squared difference over all elements -> scalar.
  Var mse(Var a, Var b);
  Var sum(Var x);

  const TensorT<S>& value(Var v) const {
    const Node& n = nodes_[v];
    return n.view ? *n.view : n.owned;
  }
  // Gradient of the last backward() with respect to node v.
  const std::vector<S>& grad(Var v) const { return nodes_[v].grad; }

  // Reverse sweep from a scalar loss. Throws if called twice on the same
  // recorded graph.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  // Interior nodes own their value; leaves view caller-owned tensors (view
  // stays null for interior nodes so vector growth cannot dangle it).
  struct Node {
    TensorT<S> owned;
    const TensorT<S>* view = nullptr;
    std::vector<S> grad;
    std::vector<S>* grad_sink = nullptr;
    std::function<void(Tape&)> backprop;
  };

  Var push(TensorT<S> owned_value);
  Node& node(Var v) { return nodes_[v]; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace voicelike

#endif  // VOICELIKE_AUTODIFF_HPP_
