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
// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. None of them call into the code they check beyond
// plain data accessors.
#ifndef FEDGRAPH_TESTS_ORACLES_HPP_
#define FEDGRAPH_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "fedgraph.hpp"

namespace fedgraph::oracles {

// ---- model

using Examples = std::vector<std::pair<ItemIndex, int>>;

// Naive scalar re-implementation of the score function, used as an oracle.
inline double naive_logit(const ClientState<double>& s, ItemIndex item) {
  std::vector<double> x(s.user_vec.begin(), s.user_vec.end());
  for (double v : s.item_table.row(item)) x.push_back(v);
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    const auto& layer = s.layers[l];
    std::vector<double> y(layer.outputs());
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < layer.inputs(); ++k) acc += layer.weight(o, k) * x[k];
      y[o] = (l + 1 < s.layers.size()) ? std::max(acc, 0.0) : acc;
    }
    x = std::move(y);
  }
  return x[0];
}

inline double naive_loss(const ClientState<double>& s, const Examples& examples) {
  double total = 0.0;
  for (const auto& [item, label] : examples) {
    double p = 1.0 / (1.0 + std::exp(-naive_logit(s, item)));
    p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
    total += label ? -std::log(p) : -std::log(1.0 - p);
  }
  return total;
}

// Smallest |pre-activation| over all hidden units and examples; finite
// differences are unreliable when a unit sits on the ReLU kink.
inline double min_hidden_margin(const ClientState<double>& s, const Examples& examples) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& [item, label] : examples) {
    std::vector<double> x(s.user_vec.begin(), s.user_vec.end());
    for (double v : s.item_table.row(item)) x.push_back(v);
    for (std::size_t l = 0; l + 1 < s.layers.size(); ++l) {
      const auto& layer = s.layers[l];
      std::vector<double> y(layer.outputs());
      for (std::size_t o = 0; o < layer.outputs(); ++o) {
        double acc = layer.bias[o];
        for (std::size_t k = 0; k < layer.inputs(); ++k) acc += layer.weight(o, k) * x[k];
        margin = std::min(margin, std::abs(acc));
        y[o] = std::max(acc, 0.0);
      }
      x = std::move(y);
    }
  }
  return margin;
}

// Every scalar parameter paired with its analytic partial.
std::vector<std::pair<double*, double>> parameters_with_gradient(ClientState<double>& s,
                                                                 const Gradient<double>& g) {
  std::vector<std::pair<double*, double>> out;
  for (std::size_t k = 0; k < s.user_vec.size(); ++k) out.emplace_back(&s.user_vec[k], g.user_vec()[k]);
  for (ItemIndex i = 0; i < s.num_items(); ++i) {
    const auto row = g.find_item_row(i);
    for (std::size_t k = 0; k < s.embed_dim(); ++k) {
      out.emplace_back(&s.item_table(i, k), row.empty() ? 0.0 : row[k]);
    }
  }
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    auto w = s.layers[l].weight.values();
    const auto gw = g.layers()[l].weight.values();
    for (std::size_t k = 0; k < w.size(); ++k) out.emplace_back(&w[k], gw[k]);
    for (std::size_t k = 0; k < s.layers[l].bias.size(); ++k) {
      out.emplace_back(&s.layers[l].bias[k], g.layers()[l].bias[k]);
    }
  }
  return out;
}

struct RandomInstance {
  ClientState<double> state;
  Examples examples;
};

inline RandomInstance random_instance(std::mt19937_64& gen) {
  ModelConfig config;
  config.embed_dim = 1 + gen() % 4;
  config.hidden.clear();
  const std::size_t depth = gen() % 3;  // 0, 1 or 2 hidden layers
  for (std::size_t l = 0; l < depth; ++l) config.hidden.push_back(1 + gen() % 4);
  config.init_scale = 0.6;
  const std::size_t items = 2 + gen() % 5;
  RandomInstance inst{init_client<double>(config, items, Tier::kPublic, gen()), {}};
  std::normal_distribution<double> bias(0.0, 0.3);
  for (auto& layer : inst.state.layers) {
    for (auto& b : layer.bias) b = bias(gen);
  }
  const std::size_t n = 1 + gen() % 6;
  for (std::size_t e = 0; e < n; ++e) inst.examples.emplace_back(gen() % items, static_cast<int>(gen() % 2));
  return inst;
}

// Central-difference check of every parameter partial; returns the worst
// relative error, floored at 1e-5 in the denominator.
inline double worst_gradient_error(RandomInstance& inst, double h = 1e-5) {
  Gradient<double> grad(inst.state);
  loss_and_gradient(inst.state, std::span<const std::pair<ItemIndex, int>>(inst.examples), grad);
  double worst = 0.0;
  for (auto [param, analytic] : parameters_with_gradient(inst.state, grad)) {
    const double saved = *param;
    *param = saved + h;
    const double up = naive_loss(inst.state, inst.examples);
    *param = saved - h;
    const double down = naive_loss(inst.state, inst.examples);
    *param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

// ---- graph

using Dense = std::vector<std::vector<double>>;

inline UserItemMatrix make_matrix(std::size_t items, std::vector<Tier> tiers, std::vector<std::vector<ItemIndex>> rows) {
  UserItemMatrix m;
  m.num_items = items;
  m.tiers = std::move(tiers);
  m.rows = std::move(rows);
  for (UserIndex u = 0; u < m.rows.size(); ++u) {
    if (m.tiers[u] != Tier::kPublic) m.rows[u].clear();
  }
  return m;
}

// Triple-loop set-intersection oracle for the adjacency.
inline std::vector<std::vector<std::int64_t>> oracle_adjacency(const UserItemMatrix& m) {
  const std::size_t n = m.num_users();
  std::vector<std::vector<std::int64_t>> a(n, std::vector<std::int64_t>(n, 0));
  for (UserIndex u = 0; u < n; ++u) {
    for (UserIndex v = 0; v < n; ++v) {
      if (u == v || m.tiers[u] != Tier::kPublic || m.tiers[v] != Tier::kPublic) continue;
      for (ItemIndex i = 0; i < m.num_items; ++i) {
        if (m.entry(u, i) && m.entry(v, i)) ++a[u][v];
      }
    }
  }
  for (UserIndex u = 0; u < n; ++u) {
    bool isolated = true;
    for (UserIndex v = 0; v < n; ++v) isolated = isolated && a[u][v] == 0;
    if (isolated) a[u][u] = 1;
  }
  return a;
}

inline Dense oracle_normalized(const std::vector<std::vector<std::int64_t>>& a) {
  const std::size_t n = a.size();
  std::vector<double> deg(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) deg[u] += static_cast<double>(a[u][v]);
  }
  Dense out(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) out[u][v] = static_cast<double>(a[u][v]) / std::sqrt(deg[u] * deg[v]);
  }
  return out;
}

// Naive repeated dense product over flattened blocks.
inline EmbeddingStack<double> oracle_propagate(const Dense& m, const EmbeddingStack<double>& q, std::size_t layers) {
  EmbeddingStack<double> cur = q;
  for (std::size_t l = 0; l < layers; ++l) {
    EmbeddingStack<double> next(q.num_users(), q.num_items(), q.dim());
    for (UserIndex u = 0; u < q.num_users(); ++u) {
      auto dst = next.block(u);
      for (UserIndex v = 0; v < q.num_users(); ++v) {
        const auto src = cur.block(v);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += m[u][v] * src[k];
      }
    }
    cur = std::move(next);
  }
  return cur;
}

inline EmbeddingStack<double> random_stack(std::mt19937_64& gen, std::size_t n, std::size_t items, std::size_t dim) {
  std::normal_distribution<double> normal;
  EmbeddingStack<double> q(n, items, dim);
  for (UserIndex u = 0; u < n; ++u) {
    for (auto& v : q.block(u)) v = normal(gen);
  }
  return q;
}

inline UserItemMatrix random_matrix(std::mt19937_64& gen, std::size_t n, std::size_t items, double public_prob) {
  std::bernoulli_distribution pub(public_prob), has(0.4);
  std::vector<Tier> tiers(n);
  std::vector<std::vector<ItemIndex>> rows(n);
  for (UserIndex u = 0; u < n; ++u) {
    tiers[u] = pub(gen) ? Tier::kPublic : Tier::kPrivate;
    for (ItemIndex i = 0; i < items; ++i) {
      if (has(gen)) rows[u].push_back(i);
    }
  }
  return make_matrix(items, std::move(tiers), std::move(rows));
}

inline double max_abs_diff(const EmbeddingStack<double>& a, const EmbeddingStack<double>& b) {
  double worst = 0.0;
  for (UserIndex u = 0; u < a.num_users(); ++u) {
    const auto x = a.block(u), y = b.block(u);
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
  }
  return worst;
}

// ---- eval

// A client whose logit for item i is exactly logits[i]: d = 1, no hidden
// layers, output weight (0, 1).
inline ClientState<double> scoring_client(const std::vector<double>& logits, Tier tier = Tier::kPublic) {
  ClientState<double> s;
  s.tier = tier;
  s.user_vec = {0.0};
  s.item_table = Matrix<double>(logits.size(), 1);
  for (std::size_t i = 0; i < logits.size(); ++i) s.item_table(i, 0) = logits[i];
  DenseLayer<double> out{Matrix<double>(1, 2), {0.0}};
  out.weight(0, 1) = 1.0;
  s.layers = {out};
  return s;
}

// Sort-and-scan oracle: the target's position in the candidate list ordered
// by descending score with ascending item index on ties.
inline std::size_t oracle_rank(const std::vector<double>& logits, ItemIndex target, const std::vector<ItemIndex>& negatives) {
  std::vector<ItemIndex> all = negatives;
  all.push_back(target);
  std::sort(all.begin(), all.end(), [&](ItemIndex a, ItemIndex b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return a < b;
  });
  for (std::size_t n = 0; n < all.size(); ++n) {
    if (all[n] == target) return n + 1;
  }
  return 0;
}

}  // namespace fedgraph::oracles

#endif  // FEDGRAPH_TESTS_ORACLES_HPP_
