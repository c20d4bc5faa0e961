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
#ifndef FEDGRAPH_LDP_HPP_
#define FEDGRAPH_LDP_HPP_

#include <span>

#include "fedgraph/common.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

/// Adds independent Laplace(0, scale) noise to every entry. A zero scale
/// leaves the values untouched and consumes no randomness.
template <typename Scalar>
void add_ldp_noise(std::span<Scalar> values, double scale, Rng& rng) {
  if (!(scale >= 0.0)) throw ConfigError("LDP noise scale must be non-negative");
  if (scale == 0.0) return;
  for (auto& v : values) v += static_cast<Scalar>(laplace(rng, scale));
}

template <typename Scalar>
Matrix<Scalar> add_ldp_noise(Matrix<Scalar> table, double scale, Rng& rng) {
  add_ldp_noise(table.values(), scale, rng);
  return table;
}

}  // namespace fedgraph

#endif  // FEDGRAPH_LDP_HPP_
