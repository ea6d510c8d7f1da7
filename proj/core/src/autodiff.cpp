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

#include "voicelike/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "voicelike/common.hpp"

namespace voicelike {

ContextSpec::ContextSpec(std::vector<int> offs) : offsets(std::move(offs)) {
  if (offsets.empty()) throw std::invalid_argument("context: empty offsets");
  bool has_zero = false;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (i > 0 && offsets[i] <= offsets[i - 1])
      throw std::invalid_argument("context: offsets not strictly increasing");
    if (offsets[i] == 0) has_zero = true;
  }
  if (!has_zero) throw std::invalid_argument("context: offsets must contain 0");
}

namespace {

// C (MxN) += A (MxK) * B (KxN). ikj order keeps both C and B rows streaming.
template <typename S>
void mm_accum(const S* a, const S* b, S* c, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const S* arow = a + i * k;
    S* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      S av = arow[p];
      if (av == S(0)) continue;
      const S* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA (MxK) += dC (MxN) * B^T (NxK)
template <typename S>
void mm_accum_abt(const S* dc, const S* b, S* da, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const S* dcrow = dc + i * n;
    S* darow = da + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const S* brow = b + p * n;
      S acc = S(0);
      for (std::size_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[p] += acc;
    }
  }
}

// dB (KxN) += A^T (KxM) * dC (MxN)
template <typename S>
void mm_accum_atb(const S* a, const S* dc, S* db, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const S* arow = a + i * k;
    const S* dcrow = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      S av = arow[p];
      if (av == S(0)) continue;
      S* dbrow = db + p * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

}  // namespace

template <typename S>
typename Tape<S>::Var Tape<S>::push(TensorT<S> owned_value) {
  Node n;
  n.owned = std::move(owned_value);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename S>
typename Tape<S>::Var Tape<S>::constant(const TensorT<S>& t) {
  Node n;
  n.view = &t;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename S>
typename Tape<S>::Var Tape<S>::param(const TensorT<S>& t,
                                     std::vector<S>* grad_sink) {
  if (grad_sink && grad_sink->size() != t.numel())
    throw std::invalid_argument("param: grad sink size mismatch");
  Node n;
  n.view = &t;
  n.grad_sink = grad_sink;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename S>
typename Tape<S>::Var Tape<S>::param(TensorT<S>& t) {
  t.ensure_grad();
  return param(t, &t.grad);
}

template <typename S>
typename Tape<S>::Var Tape<S>::matmul(Var a, Var b) {
  const TensorT<S>& ta = value(a);
  const TensorT<S>& tb = value(b);
  std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
  if (tb.rows() != k)
    throw std::invalid_argument("matmul: inner dimension mismatch");
  TensorT<S> out(m, n);
  mm_accum(ta.data.data(), tb.data.data(), out.data.data(), m, k, n);
  Var v = push(std::move(out));
  node(v).backprop = [a, b, v, m, k, n](Tape& t) {
    const auto& dy = t.node(v).grad;
    mm_accum_abt(dy.data(), t.value(b).data.data(), t.node(a).grad.data(), m,
                 k, n);
    mm_accum_atb(t.value(a).data.data(), dy.data(), t.node(b).grad.data(), m,
                 k, n);
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::add(Var a, Var b) {
  const TensorT<S>& ta = value(a);
  const TensorT<S>& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("add: shape mismatch");
  TensorT<S> out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  Var v = push(std::move(out));
  node(v).backprop = [a, b, v](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& da = t.node(a).grad;
    auto& db = t.node(b).grad;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::add_row(Var x, Var row) {
  const TensorT<S>& tx = value(x);
  const TensorT<S>& tr = value(row);
  std::size_t rows = tx.rows(), cols = tx.cols();
  if (tr.numel() != cols) throw std::invalid_argument("add_row: width mismatch");
  TensorT<S> out = tx;
  for (std::size_t r = 0; r < rows; ++r) {
    S* orow = out.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) orow[c] += tr.data[c];
  }
  Var v = push(std::move(out));
  node(v).backprop = [x, row, v, rows, cols](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& dx = t.node(x).grad;
    auto& dr = t.node(row).grad;
    for (std::size_t r = 0; r < rows; ++r) {
      const S* dyr = dy.data() + r * cols;
      S* dxr = dx.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        dxr[c] += dyr[c];
        dr[c] += dyr[c];
      }
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::scale(Var x, S c) {
  const TensorT<S>& tx = value(x);
  TensorT<S> out = tx;
  for (auto& e : out.data) e *= c;
  Var v = push(std::move(out));
  node(v).backprop = [x, v, c](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& dx = t.node(x).grad;
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += c * dy[i];
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::relu(Var x) {
  const TensorT<S>& tx = value(x);
  TensorT<S> out = tx;
  for (auto& e : out.data)
    if (e < S(0)) e = S(0);
  Var v = push(std::move(out));
  node(v).backprop = [x, v](Tape& t) {
    const auto& dy = t.node(v).grad;
    const auto& xv = t.value(x).data;
    auto& dx = t.node(x).grad;
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (xv[i] > S(0)) dx[i] += dy[i];
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::splice(Var x, const ContextSpec& ctx) {
  const TensorT<S>& tx = value(x);
  std::size_t rows = tx.rows(), cols = tx.cols();
  int span = ctx.span();
  if (rows <= static_cast<std::size_t>(span))
    throw std::invalid_argument("splice: too few frames for context span");
  std::size_t out_rows = rows - static_cast<std::size_t>(span);
  std::size_t nctx = ctx.size();
  TensorT<S> out(out_rows, nctx * cols);
  int min_off = ctx.min_offset();
  for (std::size_t j = 0; j < out_rows; ++j) {
    S* orow = out.data.data() + j * nctx * cols;
    for (std::size_t c = 0; c < nctx; ++c) {
      std::size_t src = j + static_cast<std::size_t>(ctx.offsets[c] - min_off);
      const S* xrow = tx.data.data() + src * cols;
      for (std::size_t d = 0; d < cols; ++d) orow[c * cols + d] = xrow[d];
    }
  }
  std::vector<int> offs = ctx.offsets;
  Var v = push(std::move(out));
  node(v).backprop = [x, v, offs, min_off, out_rows, cols](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& dx = t.node(x).grad;
    std::size_t nctx = offs.size();
    for (std::size_t j = 0; j < out_rows; ++j) {
      const S* dyr = dy.data() + j * nctx * cols;
      for (std::size_t c = 0; c < nctx; ++c) {
        std::size_t src = j + static_cast<std::size_t>(offs[c] - min_off);
        S* dxr = dx.data() + src * cols;
        for (std::size_t d = 0; d < cols; ++d) dxr[d] += dyr[c * cols + d];
      }
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::splice_padded(Var x, const ContextSpec& ctx) {
  const TensorT<S>& tx = value(x);
  std::size_t rows = tx.rows(), cols = tx.cols();
  std::size_t nctx = ctx.size();
  TensorT<S> out(rows, nctx * cols);
  for (std::size_t j = 0; j < rows; ++j) {
    S* orow = out.data.data() + j * nctx * cols;
    for (std::size_t c = 0; c < nctx; ++c) {
      long src = static_cast<long>(j) + ctx.offsets[c];
      if (src < 0 || src >= static_cast<long>(rows)) continue;  // zero pad
      const S* xrow = tx.data.data() + static_cast<std::size_t>(src) * cols;
      for (std::size_t d = 0; d < cols; ++d) orow[c * cols + d] = xrow[d];
    }
  }
  std::vector<int> offs = ctx.offsets;
  Var v = push(std::move(out));
  node(v).backprop = [x, v, offs, rows, cols](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& dx = t.node(x).grad;
    std::size_t nctx = offs.size();
    for (std::size_t j = 0; j < rows; ++j) {
      const S* dyr = dy.data() + j * nctx * cols;
      for (std::size_t c = 0; c < nctx; ++c) {
        long src = static_cast<long>(j) + offs[c];
        if (src < 0 || src >= static_cast<long>(rows)) continue;
        S* dxr = dx.data() + static_cast<std::size_t>(src) * cols;
        for (std::size_t d = 0; d < cols; ++d) dxr[d] += dyr[c * cols + d];
      }
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::stats_pool(Var x, S eps_var) {
  const TensorT<S>& tx = value(x);
  std::size_t rows = tx.rows(), cols = tx.cols();
  if (rows == 0) throw std::invalid_argument("stats_pool: empty sequence");
  TensorT<S> out(std::size_t(1), 2 * cols);
  std::vector<S> mean(cols, S(0)), sd(cols, S(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xrow = tx.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) mean[c] += xrow[c];
  }
  for (std::size_t c = 0; c < cols; ++c) mean[c] /= static_cast<S>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xrow = tx.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      S d = xrow[c] - mean[c];
      sd[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < cols; ++c)
    sd[c] = std::sqrt(sd[c] / static_cast<S>(rows) + eps_var);
  for (std::size_t c = 0; c < cols; ++c) {
    out.data[c] = mean[c];
    out.data[cols + c] = sd[c];
  }
  Var v = push(std::move(out));
  node(v).backprop = [x, v, rows, cols, mean, sd](Tape& t) {
    const auto& dy = t.node(v).grad;
    const auto& xv = t.value(x).data;
    auto& dx = t.node(x).grad;
    S inv_t = S(1) / static_cast<S>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const S* xrow = xv.data() + r * cols;
      S* dxr = dx.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        // d mean_c / d x_rc = 1/T; d sd_c / d x_rc = (x - mean) / (T * sd)
        dxr[c] += dy[c] * inv_t +
                  dy[cols + c] * (xrow[c] - mean[c]) * inv_t / sd[c];
      }
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::gather_rows(Var table,
                                           const std::vector<int>& ids) {
  const TensorT<S>& tt = value(table);
  std::size_t k = tt.rows(), e = tt.cols();
  TensorT<S> out(ids.size(), e);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    int id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= k)
      throw std::out_of_range("gather_rows: id out of range");
    const S* src = tt.data.data() + static_cast<std::size_t>(id) * e;
    S* dst = out.data.data() + r * e;
    for (std::size_t c = 0; c < e; ++c) dst[c] = src[c];
  }
  std::vector<int> ids_copy = ids;
  Var v = push(std::move(out));
  node(v).backprop = [table, v, ids_copy, e](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& dt = t.node(table).grad;
    for (std::size_t r = 0; r < ids_copy.size(); ++r) {
      const S* dyr = dy.data() + r * e;
      S* dst = dt.data() + static_cast<std::size_t>(ids_copy[r]) * e;
      for (std::size_t c = 0; c < e; ++c) dst[c] += dyr[c];
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::repeat_rows(Var x, const std::vector<int>& reps) {
  const TensorT<S>& tx = value(x);
  std::size_t rows = tx.rows(), cols = tx.cols();
  if (reps.size() != rows)
    throw std::invalid_argument("repeat_rows: misaligned lengths");
  std::size_t total = 0;
  for (int r : reps) {
    if (r < 0) throw std::invalid_argument("repeat_rows: negative repeat");
    total += static_cast<std::size_t>(r);
  }
  TensorT<S> out(total, cols);
  std::size_t o = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* src = tx.data.data() + r * cols;
    for (int q = 0; q < reps[r]; ++q, ++o) {
      S* dst = out.data.data() + o * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] = src[c];
    }
  }
  std::vector<int> reps_copy = reps;
  Var v = push(std::move(out));
  node(v).backprop = [x, v, reps_copy, cols](Tape& t) {
    const auto& dy = t.node(v).grad;
    auto& dx = t.node(x).grad;
    std::size_t o = 0;
    for (std::size_t r = 0; r < reps_copy.size(); ++r) {
      S* dxr = dx.data() + r * cols;
      for (int q = 0; q < reps_copy[r]; ++q, ++o) {
        const S* dyr = dy.data() + o * cols;
        for (std::size_t c = 0; c < cols; ++c) dxr[c] += dyr[c];
      }
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::mse(Var a, Var b) {
  const TensorT<S>& ta = value(a);
  const TensorT<S>& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("mse: shape mismatch");
  std::size_t n = ta.numel();
  if (n == 0) throw std::invalid_argument("mse: empty input");
  S acc = S(0);
  for (std::size_t i = 0; i < n; ++i) {
    S d = ta.data[i] - tb.data[i];
    acc += d * d;
  }
  TensorT<S> out(std::size_t(1));
  out.data[0] = acc / static_cast<S>(n);
  Var v = push(std::move(out));
  node(v).backprop = [a, b, v, n](Tape& t) {
    S dl = t.node(v).grad[0];
    const auto& av = t.value(a).data;
    const auto& bv = t.value(b).data;
    auto& da = t.node(a).grad;
    auto& db = t.node(b).grad;
    S c = dl * S(2) / static_cast<S>(n);
    for (std::size_t i = 0; i < n; ++i) {
      S d = c * (av[i] - bv[i]);
      da[i] += d;
      db[i] -= d;
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::sum(Var x) {
  const TensorT<S>& tx = value(x);
  S acc = S(0);
  for (S e : tx.data) acc += e;
  TensorT<S> out(std::size_t(1));
  out.data[0] = acc;
  Var v = push(std::move(out));
  node(v).backprop = [x, v](Tape& t) {
    S dl = t.node(v).grad[0];
    auto& dx = t.node(x).grad;
    for (auto& e : dx) e += dl;
  };
  return v;
}

template <typename S>
void Tape<S>::backward(Var loss) {
  if (backward_done_)
    throw std::logic_error("backward: called twice without a new forward");
  backward_done_ = true;
  if (value(loss).numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  for (Var i = 0; i < nodes_.size(); ++i)
    nodes_[i].grad.assign(value(i).numel(), S(0));
  nodes_[loss].grad[0] = S(1);
  // Creation order is topological; sweep in reverse.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this);
  }
  for (auto& n : nodes_) {
    if (!n.grad_sink) continue;
    auto& sink = *n.grad_sink;
    for (std::size_t i = 0; i < n.grad.size(); ++i) sink[i] += n.grad[i];
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace voicelike
