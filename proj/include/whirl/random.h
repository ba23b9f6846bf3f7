// Copyright 2026 The whirl-sim Authors
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

#ifndef WHIRL_RANDOM_H_
#define WHIRL_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace whirl {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a base seed and a path of indices
// (iteration, demo, sample, ...). Streams never depend on evaluation order,
// which keeps parallel rollouts reproducible.
uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> path);

inline Rng MakeRng(uint64_t base, std::initializer_list<uint64_t> path) {
  return Rng(DeriveSeed(base, path));
}

Eigen::VectorXd StandardNormalVector(Rng& rng, Eigen::Index n);
Eigen::MatrixXd StandardNormalMatrix(Rng& rng, Eigen::Index rows,
                                     Eigen::Index cols);

}  // namespace whirl

#endif  // WHIRL_RANDOM_H_
