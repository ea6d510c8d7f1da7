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

#ifndef VOICELIKE_NN_HPP_
#define VOICELIKE_NN_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "voicelike/autodiff.hpp"
#include "voicelike/tensor.hpp"

namespace voicelike {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.0f;  // classic L2, added to the gradient
};

// First/second moment buffers aligned with a fixed parameter list.
struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  long step = 0;
};

// One bias-corrected Adam update. Gradients are read from each tensor's grad
// buffer (missing buffers are treated as zero). The state is lazily sized to
// the parameter list on first use.
void adam_step(const std::vector<Tensor*>& params, AdamState& state,
               const AdamConfig& cfg);

// Uniform fan-in init: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
void kaiming_uniform(Tensor& w, std::size_t fan_in, std::mt19937_64& rng);
void uniform_init(Tensor& w, float bound, std::mt19937_64& rng);

// Builds a scalar loss on the tape. The builder must register every tensor in
// the parameter list via tape.param(...) so analytic gradients reach them.
using BuildLossFn = std::function<Tape<double>::Var(Tape<double>&)>;

struct FdCheckResult {
  double max_rel_err = 0.0;
  std::size_t elements = 0;
};

// Central-difference gradient check in float64: perturbs every element of
// every listed parameter by +-h and compares against the tape's analytic
// gradient. Relative error uses max(|analytic|, |numeric|, 1e-8) as the
// denominator.
FdCheckResult fd_check(const std::vector<TensorD*>& params,
                       const BuildLossFn& build, double h);

}  // namespace voicelike

#endif  // VOICELIKE_NN_HPP_
