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

#include "voicelike/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace voicelike {

void adam_step(const std::vector<Tensor*>& params, AdamState& state,
               const AdamConfig& cfg) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->numel(), 0.0f);
      state.v[i].assign(params[i]->numel(), 0.0f);
    }
    state.step = 0;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1),
                                    static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2),
                                    static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.numel())
      throw std::invalid_argument("adam_step: parameter shape changed");
    for (std::size_t j = 0; j < p.numel(); ++j) {
      float g = j < p.grad.size() ? p.grad[j] : 0.0f;
      if (cfg.weight_decay != 0.0f) g += cfg.weight_decay * p.data[j];
      m[j] = cfg.beta1 * m[j] + (1.0f - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0f - cfg.beta2) * g * g;
      float mhat = static_cast<float>(m[j] / bc1);
      float vhat = static_cast<float>(v[j] / bc2);
      p.data[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void kaiming_uniform(Tensor& w, std::size_t fan_in, std::mt19937_64& rng) {
  float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  uniform_init(w, bound, rng);
}

void uniform_init(Tensor& w, float bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (auto& e : w.data) e = dist(rng);
}

FdCheckResult fd_check(const std::vector<TensorD*>& params,
                       const BuildLossFn& build, double h) {
  // Analytic pass.
  for (auto* p : params) {
    p->ensure_grad();
    p->zero_grad();
  }
  {
    Tape<double> tape;
    auto loss = build(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  auto eval_loss = [&]() -> double {
    Tape<double> tape;
    auto loss = build(tape);
    return tape.value(loss).data[0];
  };

  FdCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    TensorD& p = *params[pi];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      double saved = p.data[j];
      p.data[j] = saved + h;
      double lp = eval_loss();
      p.data[j] = saved - h;
      double lm = eval_loss();
      p.data[j] = saved;
      double numeric = (lp - lm) / (2.0 * h);
      double a = analytic[pi][j];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      double rel = std::fabs(a - numeric) / denom;
      if (rel > res.max_rel_err) res.max_rel_err = rel;
      res.elements += 1;
    }
  }
  return res;
}

}  // namespace voicelike
