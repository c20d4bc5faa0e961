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
#ifndef FEDGRAPH_EVAL_HPP_
#define FEDGRAPH_EVAL_HPP_

// Leave-one-out ranking evaluation: the held-out item is ranked among sampled
// negatives and scored with HR@K and NDCG@K, overall and per privacy tier.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedgraph/common.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/model.hpp"
#include "fedgraph/parallel.hpp"

namespace fedgraph {

struct UserEvaluation {
  int hit = 0;
  double ndcg = 0.0;
  std::size_t rank = 0;  // 1-based
};

/// HR/NDCG contribution of a 1-based rank.
inline UserEvaluation score_rank(std::size_t rank, std::size_t k) {
  UserEvaluation e;
  e.rank = rank;
  if (rank >= 1 && rank <= k) {
    e.hit = 1;
    e.ndcg = 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  return e;
}

template <typename Scalar>
UserEvaluation evaluate_user(const ClientState<Scalar>& state, ItemIndex target,
                             std::span<const ItemIndex> negatives, std::size_t k) {
  if (std::find(negatives.begin(), negatives.end(), target) != negatives.end()) {
    throw DataError("evaluation target item " + std::to_string(target) + " is among its negatives");
  }
  if (k < 1 || k > negatives.size() + 1) {
    throw ConfigError("k must lie in [1, number of candidates]");
  }
  std::vector<ItemIndex> candidates(negatives.begin(), negatives.end());
  candidates.push_back(target);
  const auto ranked = rank_items(state, std::span<const ItemIndex>(candidates));
  const auto pos = std::find_if(ranked.begin(), ranked.end(),
                                [&](const ScoredItem& s) { return s.item == target; });
  return score_rank(static_cast<std::size_t>(pos - ranked.begin()) + 1, k);
}

struct TierMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  std::size_t user_count = 0;
};

struct RoundMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  std::size_t k = 10;
  // Indexed by Tier; absent when the tier has no users.
  std::array<std::optional<TierMetrics>, 2> per_tier;
  std::vector<std::size_t> ranks;

  const std::optional<TierMetrics>& tier(Tier t) const {
    return per_tier[static_cast<std::size_t>(t)];
  }
};

enum class EvalTarget { kTest, kValidation };

/// Averages per-user HR/NDCG over all users and per tier. Reductions run in
/// ascending user order.
template <typename Scalar, InteractionSource Source>
RoundMetrics evaluate_round(std::span<const ClientState<Scalar>> clients, const Source& data,
                            const std::vector<std::vector<ItemIndex>>& negatives,
                            const PrivacyAssignment& privacy, std::size_t k,
                            EvalTarget target = EvalTarget::kTest, std::size_t workers = 1) {
  const std::size_t n = data.num_users();
  if (clients.size() != n || negatives.size() != n || privacy.num_users() != n) {
    throw ConfigError("evaluate_round: clients, negatives and tiers must cover every user");
  }
  std::vector<UserEvaluation> per_user(n);
  parallel_for(n, workers, [&](UserIndex u) {
    ItemIndex item;
    if (target == EvalTarget::kTest) {
      item = data.test(u);
    } else {
      const auto v = data.validation(u);
      if (!v) throw DataError("user " + std::to_string(u) + " has no validation item");
      item = *v;
    }
    per_user[u] = evaluate_user(clients[u], item, negatives[u], k);
  });

  RoundMetrics m;
  m.k = k;
  m.ranks.resize(n);
  std::array<double, 2> hr_sum{}, ndcg_sum{};
  std::array<std::size_t, 2> count{};
  double hr_total = 0.0, ndcg_total = 0.0;
  for (UserIndex u = 0; u < n; ++u) {
    const auto t = static_cast<std::size_t>(privacy.tier(u));
    hr_sum[t] += per_user[u].hit;
    ndcg_sum[t] += per_user[u].ndcg;
    ++count[t];
    hr_total += per_user[u].hit;
    ndcg_total += per_user[u].ndcg;
    m.ranks[u] = per_user[u].rank;
  }
  m.hr = hr_total / static_cast<double>(n);
  m.ndcg = ndcg_total / static_cast<double>(n);
  for (std::size_t t = 0; t < 2; ++t) {
    if (count[t] == 0) continue;
    const auto c = static_cast<double>(count[t]);
    m.per_tier[t] = TierMetrics{hr_sum[t] / c, ndcg_sum[t] / c, count[t]};
  }
  return m;
}

}  // namespace fedgraph

#endif  // FEDGRAPH_EVAL_HPP_
