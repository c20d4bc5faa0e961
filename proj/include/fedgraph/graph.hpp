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
#ifndef FEDGRAPH_GRAPH_HPP_
#define FEDGRAPH_GRAPH_HPP_

// Server-side mathematics: the co-interaction user graph built from public
// users' training items, its symmetric normalization, parameter-free
// propagation of uploaded item tables, and the global / personalized item
// embeddings derived from the propagated tables.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgraph/common.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/parallel.hpp"

namespace fedgraph {

/// Binary user-item matrix whose rows are the training items public users
/// uploaded. Rows of private users are empty.
struct UserItemMatrix {
  std::size_t num_items = 0;
  std::vector<Tier> tiers;
  std::vector<std::vector<ItemIndex>> rows;  // sorted, unique

  std::size_t num_users() const { return rows.size(); }
  bool entry(UserIndex u, ItemIndex m) const {
    return std::binary_search(rows[u].begin(), rows[u].end(), m);
  }
};

/// Client-side upload of the interaction lists. Only public users' training
/// items are read; private users contribute nothing.
template <InteractionSource Source>
UserItemMatrix collect_public_interactions(const Source& data, const PrivacyAssignment& privacy) {
  if (privacy.num_users() != data.num_users()) {
    throw ConfigError("privacy assignment covers " + std::to_string(privacy.num_users()) +
                      " users but the dataset has " + std::to_string(data.num_users()));
  }
  UserItemMatrix m;
  m.num_items = data.num_items();
  m.tiers = privacy.tiers;
  m.rows.resize(data.num_users());
  for (UserIndex u = 0; u < data.num_users(); ++u) {
    if (!privacy.is_public(u)) continue;
    const auto train = data.train(u);
    m.rows[u].assign(train.begin(), train.end());
    std::sort(m.rows[u].begin(), m.rows[u].end());
    m.rows[u].erase(std::unique(m.rows[u].begin(), m.rows[u].end()), m.rows[u].end());
  }
  return m;
}

/// Weighted user graph in CSR form. Column indices are sorted within a row.
struct UserGraph {
  std::size_t num_users = 0;
  std::vector<std::size_t> row_offsets;
  std::vector<UserIndex> cols;
  std::vector<std::int64_t> weights;
  std::vector<std::int64_t> degree;
  // D^{-1/2} A D^{-1/2} on the same sparsity pattern; empty until normalized.
  std::vector<double> normalized;

  std::size_t nnz() const { return cols.size(); }
  bool is_normalized() const { return normalized.size() == cols.size() && !cols.empty(); }

  std::span<const UserIndex> neighbors(UserIndex u) const {
    return {cols.data() + row_offsets[u], row_offsets[u + 1] - row_offsets[u]};
  }
  std::span<const std::int64_t> row_weights(UserIndex u) const {
    return {weights.data() + row_offsets[u], row_offsets[u + 1] - row_offsets[u]};
  }
  std::span<const double> row_normalized(UserIndex u) const {
    return {normalized.data() + row_offsets[u], row_offsets[u + 1] - row_offsets[u]};
  }

  std::int64_t weight(UserIndex u, UserIndex v) const {
    const auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), v);
    return it != nb.end() && *it == v ? weights[row_offsets[u] + (it - nb.begin())] : 0;
  }
  double normalized_weight(UserIndex u, UserIndex v) const {
    const auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), v);
    return it != nb.end() && *it == v ? normalized[row_offsets[u] + (it - nb.begin())] : 0.0;
  }
};

/// A = A_um A_um^T over public users with the diagonal removed, plus a unit
/// self-loop for every private user and for public users left without any
/// co-interaction edge.
inline UserGraph build_user_graph(const UserItemMatrix& m) {
  const std::size_t n = m.num_users();
  if (n < 1) throw ConfigError("the user graph needs at least one user");
  std::vector<std::vector<UserIndex>> item_users(m.num_items);
  for (UserIndex u = 0; u < n; ++u) {
    if (m.tiers[u] != Tier::kPublic) continue;
    for (ItemIndex i : m.rows[u]) item_users.at(i).push_back(u);
  }

  UserGraph g;
  g.num_users = n;
  g.row_offsets.reserve(n + 1);
  g.row_offsets.push_back(0);
  g.degree.assign(n, 0);
  std::vector<std::int64_t> counts(n, 0);
  std::vector<UserIndex> touched;
  for (UserIndex u = 0; u < n; ++u) {
    touched.clear();
    if (m.tiers[u] == Tier::kPublic) {
      for (ItemIndex i : m.rows[u]) {
        for (UserIndex v : item_users[i]) {
          if (v == u) continue;
          if (counts[v]++ == 0) touched.push_back(v);
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    if (touched.empty()) {
      g.cols.push_back(u);
      g.weights.push_back(1);
      g.degree[u] = 1;
    } else {
      for (UserIndex v : touched) {
        g.cols.push_back(v);
        g.weights.push_back(counts[v]);
        g.degree[u] += counts[v];
        counts[v] = 0;
      }
    }
    g.row_offsets.push_back(g.cols.size());
  }
  return g;
}

template <InteractionSource Source>
UserGraph build_user_graph(const Source& data, const PrivacyAssignment& privacy) {
  return build_user_graph(collect_public_interactions(data, privacy));
}

/// Fills graph.normalized with A[u][v] / sqrt(D[u] D[v]).
inline UserGraph normalize(UserGraph g) {
  for (UserIndex u = 0; u < g.num_users; ++u) {
    if (g.degree[u] <= 0) {
      throw std::logic_error("user " + std::to_string(u) +
                             " has zero degree; the self-loop fallback did not apply");
    }
  }
  g.normalized.resize(g.cols.size());
  for (UserIndex u = 0; u < g.num_users; ++u) {
    for (std::size_t e = g.row_offsets[u]; e < g.row_offsets[u + 1]; ++e) {
      const UserIndex v = g.cols[e];
      g.normalized[e] = static_cast<double>(g.weights[e]) /
                        std::sqrt(static_cast<double>(g.degree[u]) * static_cast<double>(g.degree[v]));
    }
  }
  return g;
}

/// Identity graph over n users: every user keeps its own table.
inline UserGraph identity_graph(std::size_t n) {
  UserGraph g;
  g.num_users = n;
  for (UserIndex u = 0; u <= n; ++u) g.row_offsets.push_back(u);
  for (UserIndex u = 0; u < n; ++u) {
    g.cols.push_back(u);
    g.weights.push_back(1);
  }
  g.degree.assign(n, 1);
  return normalize(std::move(g));
}

/// Sparse (row, col, weight) triplets of A and of the normalized matrix.
inline void write_triplets(const UserGraph& g, std::ostream& adjacency, std::ostream& normalized) {
  adjacency << "row\tcol\tweight\n";
  normalized << "row\tcol\tweight\n";
  const auto old_precision = normalized.precision(17);
  for (UserIndex u = 0; u < g.num_users; ++u) {
    for (std::size_t e = g.row_offsets[u]; e < g.row_offsets[u + 1]; ++e) {
      adjacency << u << '\t' << g.cols[e] << '\t' << g.weights[e] << '\n';
      if (g.is_normalized()) normalized << u << '\t' << g.cols[e] << '\t' << g.normalized[e] << '\n';
    }
  }
  normalized.precision(old_precision);
}

namespace detail {

// Column chunk width for blocked work on (N x items*dim) stacks. Fixed so that
// results do not depend on the number of workers.
inline constexpr std::size_t kColumnChunk = 4096;

// Above this fill ratio propagation switches to a dense GEMM.
inline constexpr double kDenseFill = 0.05;

inline std::size_t chunk_count(std::size_t width) {
  return (width + kColumnChunk - 1) / kColumnChunk;
}

template <typename Scalar>
void sparse_propagate_once(const UserGraph& g, const EmbeddingStack<Scalar>& in,
                           EmbeddingStack<Scalar>& out, std::size_t workers) {
  const std::size_t width = in.block_size();
  parallel_for(g.num_users, workers, [&](UserIndex u) {
    auto dst = out.block(u);
    std::fill(dst.begin(), dst.end(), Scalar(0));
    const auto nb = g.neighbors(u);
    const auto w = g.row_normalized(u);
    for (std::size_t e = 0; e < nb.size(); ++e) {
      const auto src = in.block(nb[e]);
      const auto a = static_cast<Scalar>(w[e]);
      for (std::size_t k = 0; k < width; ++k) dst[k] += a * src[k];
    }
  });
}

// Dense normalized adjacency raised to the given power.
inline Eigen::MatrixXd dense_power(const UserGraph& g, std::size_t layers) {
  const auto n = static_cast<Eigen::Index>(g.num_users);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (UserIndex u = 0; u < g.num_users; ++u) {
    for (std::size_t e = g.row_offsets[u]; e < g.row_offsets[u + 1]; ++e) {
      a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(g.cols[e])) = g.normalized[e];
    }
  }
  Eigen::MatrixXd p = a;
  for (std::size_t l = 1; l < layers; ++l) p = (a * p).eval();
  return p;
}

}  // namespace detail

/// Applies the normalized adjacency `layers` times to the stacked uploads. Each
/// user's new table is the weighted sum of its neighbours' tables.
template <typename Scalar>
EmbeddingStack<Scalar> propagate(const UserGraph& g, const EmbeddingStack<Scalar>& q,
                                 std::size_t layers, std::size_t workers = 1) {
  if (layers < 1) throw ConfigError("propagation needs at least one layer");
  if (!g.is_normalized()) throw std::logic_error("propagate requires a normalized graph");
  if (q.num_users() != g.num_users) {
    throw ConfigError("embedding stack has " + std::to_string(q.num_users()) +
                      " user blocks but the graph has " + std::to_string(g.num_users) + " users");
  }
  EmbeddingStack<Scalar> out(q.num_users(), q.num_items(), q.dim());
  const double fill = static_cast<double>(g.nnz()) /
                      (static_cast<double>(g.num_users) * static_cast<double>(g.num_users));
  if (fill < detail::kDenseFill || g.num_users < 2) {
    detail::sparse_propagate_once(g, q, out, workers);
    if (layers > 1) {
      EmbeddingStack<Scalar> tmp(q.num_users(), q.num_items(), q.dim());
      for (std::size_t l = 1; l < layers; ++l) {
        detail::sparse_propagate_once(g, out, tmp, workers);
        std::swap(out, tmp);
      }
    }
    return out;
  }

  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor power = detail::dense_power(g, layers).template cast<Scalar>();
  const auto n = static_cast<Eigen::Index>(q.num_users());
  const std::size_t width = q.block_size();
  Eigen::Map<const RowMajor> src(q.data(), n, static_cast<Eigen::Index>(width));
  Eigen::Map<RowMajor> dst(out.data(), n, static_cast<Eigen::Index>(width));
  parallel_for(detail::chunk_count(width), workers, [&](std::size_t c) {
    const auto begin = static_cast<Eigen::Index>(c * detail::kColumnChunk);
    const auto cols = static_cast<Eigen::Index>(std::min(detail::kColumnChunk, width - c * detail::kColumnChunk));
    dst.middleCols(begin, cols).noalias() = power * src.middleCols(begin, cols);
  });
  return out;
}

/// Mean of the selected user blocks (all users when `users` is empty),
/// reduced in ascending user order.
template <typename Scalar>
Matrix<Scalar> global_embedding(const EmbeddingStack<Scalar>& s, std::span<const UserIndex> users = {},
                                std::size_t workers = 1) {
  if (s.num_users() < 1) throw ConfigError("global embedding needs at least one user");
  std::vector<UserIndex> all;
  if (users.empty()) {
    all.resize(s.num_users());
    for (UserIndex u = 0; u < s.num_users(); ++u) all[u] = u;
    users = all;
  }
  Matrix<Scalar> out(s.num_items(), s.dim());
  const std::size_t width = s.block_size();
  const double inv = 1.0 / static_cast<double>(users.size());
  parallel_for(detail::chunk_count(width), workers, [&](std::size_t c) {
    const std::size_t begin = c * detail::kColumnChunk;
    const std::size_t end = std::min(width, begin + detail::kColumnChunk);
    std::vector<double> acc(end - begin, 0.0);
    for (UserIndex u : users) {
      const Scalar* src = s.block(u).data();
      for (std::size_t k = begin; k < end; ++k) acc[k - begin] += static_cast<double>(src[k]);
    }
    Scalar* dst = out.data();
    for (std::size_t k = begin; k < end; ++k) dst[k] = static_cast<Scalar>(acc[k - begin] * inv);
  });
  return out;
}

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
}

/// Table distributed to one user: alpha times its propagated table plus
/// (1 - alpha) times the global table when public, the global table when private. `out` may alias `propagated`.
template <typename Scalar>
void blend_into(std::span<const Scalar> propagated, std::span<const Scalar> global, double alpha,
                Tier tier, std::span<Scalar> out) {
  if (tier != Tier::kPublic || alpha == 0.0) {
    std::copy(global.begin(), global.end(), out.begin());
  } else if (alpha == 1.0) {
    if (out.data() != propagated.data()) std::copy(propagated.begin(), propagated.end(), out.begin());
  } else {
    const auto a = static_cast<Scalar>(alpha);
    const auto b = static_cast<Scalar>(1.0 - alpha);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * propagated[k] + b * global[k];
  }
}

/// Overwrites S with the per-user distributed tables (see blend_into).
template <typename Scalar>
void personalize_in_place(EmbeddingStack<Scalar>& s, const Matrix<Scalar>& global, double alpha,
                          std::span<const Tier> tiers, std::size_t workers = 1) {
  check_alpha(alpha);
  if (tiers.size() != s.num_users() || global.size() != s.block_size()) {
    throw ConfigError("personalize: shape mismatch between stack, global table and tiers");
  }
  parallel_for(s.num_users(), workers, [&](UserIndex u) {
    auto block = s.block(u);
    blend_into<Scalar>(block, global.values(), alpha, tiers[u], block);
  });
}

template <typename Scalar>
EmbeddingStack<Scalar> personalize(const EmbeddingStack<Scalar>& s, const Matrix<Scalar>& global,
                                   double alpha, std::span<const Tier> tiers,
                                   std::size_t workers = 1) {
  EmbeddingStack<Scalar> out = s;
  personalize_in_place(out, global, alpha, tiers, workers);
  return out;
}

/// Server-side buffers of one round.
template <typename Scalar>
struct ServerState {
  EmbeddingStack<Scalar> uploads;     // one uploaded item table per user
  EmbeddingStack<Scalar> propagated;  // user-specific item tables after propagation
  Matrix<Scalar> global;              // mean of the propagated tables
  std::size_t round = 0;
};

}  // namespace fedgraph

#endif  // FEDGRAPH_GRAPH_HPP_
