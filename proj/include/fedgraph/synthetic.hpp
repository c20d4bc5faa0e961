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
#ifndef FEDGRAPH_SYNTHETIC_HPP_
#define FEDGRAPH_SYNTHETIC_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fedgraph/common.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

struct SyntheticSpec {
  std::size_t num_users = 50;
  std::size_t num_items = 100;
  std::size_t interactions_per_user = 10;
  std::size_t clusters = 5;
  // Probability that an interaction comes from the user's cluster pool rather
  // than the whole catalog.
  double in_cluster = 0.8;
  std::uint64_t seed = 0;

  void validate() const {
    if (interactions_per_user < 3) throw ConfigError("interactions_per_user must be at least 3");
    if (interactions_per_user > num_items) {
      throw ConfigError("interactions_per_user cannot exceed num_items");
    }
    if (num_users < 1) throw ConfigError("num_users must be at least 1");
    if (clusters < 1 || clusters > num_items) throw ConfigError("clusters must lie in [1, num_items]");
    if (!(in_cluster >= 0.0 && in_cluster <= 1.0)) throw ConfigError("in_cluster must lie in [0, 1]");
  }
};

/// Writes a clustered implicit-feedback TSV (user, item, rating, timestamp).
/// User u belongs to cluster u % clusters; items are split into contiguous
/// cluster pools. Timestamps increase within each user.
inline void write_synthetic(const SyntheticSpec& spec, std::ostream& out) {
  spec.validate();
  Rng rng = make_rng(spec.seed, Stream::kSynthetic);
  std::vector<bool> taken(spec.num_items);
  std::vector<std::size_t> items;
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    const std::size_t c = u % spec.clusters;
    const std::size_t pool_begin = c * spec.num_items / spec.clusters;
    const std::size_t pool_end = (c + 1) * spec.num_items / spec.clusters;
    std::fill(taken.begin(), taken.end(), false);
    items.clear();
    while (items.size() < spec.interactions_per_user) {
      std::size_t item;
      if (uniform01(rng) < spec.in_cluster) {
        item = pool_begin + uniform_index(rng, pool_end - pool_begin);
      } else {
        item = uniform_index(rng, spec.num_items);
      }
      // A saturated pool falls back to the whole catalog.
      if (taken[item]) {
        bool pool_full = true;
        for (std::size_t i = pool_begin; i < pool_end && pool_full; ++i) pool_full = taken[i];
        if (!pool_full) continue;
        item = uniform_index(rng, spec.num_items);
        if (taken[item]) continue;
      }
      taken[item] = true;
      items.push_back(item);
    }
    for (std::size_t n = 0; n < items.size(); ++n) {
      const std::int64_t ts = 1'000'000'000 + static_cast<std::int64_t>(u * 10'000 + n);
      out << (u + 1) << '\t' << (items[n] + 1) << "\t1\t" << ts << '\n';
    }
  }
}

}  // namespace fedgraph

#endif  // FEDGRAPH_SYNTHETIC_HPP_
