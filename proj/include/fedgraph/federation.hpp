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
#ifndef FEDGRAPH_FEDERATION_HPP_
#define FEDGRAPH_FEDERATION_HPP_

// Round orchestration. Each round the server propagates the uploaded item
// tables over the user graph and hands every client its starting table
// (personalized for public users, global for private users); clients then
// train locally and upload their (optionally noised) item tables.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedgraph/checkpoint.hpp"
#include "fedgraph/common.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/eval.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/ldp.hpp"
#include "fedgraph/model.hpp"
#include "fedgraph/parallel.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

struct Ablation {
  bool disable_iei = false;   // clients keep their own tables; no distribution
  bool disable_ugc = false;   // S := Q, no propagation
  bool disable_upie = false;  // every user receives the global table

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct FederationConfig {
  std::size_t rounds = 100;
  double alpha = 0.5;
  std::size_t gcn_layers = 1;
  double ldp_scale = 0.0;
  Ablation ablation;
  ModelConfig model;
  std::uint64_t seed = 0;
  // Average the global table over public users only instead of all users.
  bool global_average_public_only = false;
  std::size_t workers = 1;
  std::size_t eval_stride = 1;
  std::size_t checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const {
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    check_alpha(alpha);
    if (gcn_layers < 1) throw ConfigError("gcn layers must be at least 1");
    if (!(ldp_scale >= 0.0)) throw ConfigError("ldp noise scale must be non-negative");
    if (eval_stride < 1) throw ConfigError("eval stride must be at least 1");
    if (checkpoint_every > 0 && checkpoint_path.empty()) {
      throw ConfigError("checkpointing needs a checkpoint path");
    }
    model.validate();
  }
};

struct RoundEvaluation {
  std::optional<RoundMetrics> test;
  std::optional<RoundMetrics> validation;
};

struct RoundRecord {
  std::size_t round = 0;
  double mean_train_loss = 0.0;
  std::optional<RoundMetrics> test;
  std::optional<RoundMetrics> validation;
  double wall_time = 0.0;
};

template <typename Scalar>
using EvalHook = std::function<RoundEvaluation(std::size_t round,
                                               std::span<const ClientState<Scalar>> clients)>;

/// Client upload: the item table only, with Laplace noise when scale > 0.
/// User vector and score function never leave the client.
template <typename Scalar>
void upload_item_table(const Matrix<Scalar>& item_table, double ldp_scale, Rng& rng,
                       std::span<Scalar> slot) {
  const auto src = item_table.values();
  std::copy(src.begin(), src.end(), slot.begin());
  add_ldp_noise(slot, ldp_scale, rng);
}

/// Computes the propagated tables and the global table from the current uploads.
template <typename Scalar>
void server_update(ServerState<Scalar>& server, const UserGraph& graph, std::size_t layers,
                   const Ablation& ablation, std::span<const UserIndex> average_over,
                   std::size_t workers) {
  if (ablation.disable_ugc) {
    server.propagated = server.uploads;
  } else {
    server.propagated = propagate(graph, server.uploads, layers, workers);
  }
  server.global = global_embedding(server.propagated, average_over, workers);
}

/// Per-user starting tables under the ablation switches; nullopt when item
/// embedding initialization is disabled and clients keep their own tables.
template <typename Scalar>
std::optional<EmbeddingStack<Scalar>> distribute(const ServerState<Scalar>& server,
                                                 std::span<const Tier> tiers, double alpha,
                                                 const Ablation& ablation) {
  if (ablation.disable_iei) return std::nullopt;
  EmbeddingStack<Scalar> out(server.propagated.num_users(), server.propagated.num_items(),
                             server.propagated.dim());
  for (UserIndex u = 0; u < out.num_users(); ++u) {
    blend_into<Scalar>(server.propagated.block(u), server.global.values(),
                       ablation.disable_upie ? 0.0 : alpha, tiers[u], out.block(u));
  }
  return out;
}

template <typename Scalar, InteractionSource Source>
class Federation {
 public:
  Federation(const Source& data, const PrivacyAssignment& privacy, FederationConfig config)
      : data_(data), privacy_(privacy), config_(std::move(config)) {
    config_.validate();
    if (privacy_.num_users() != data_.num_users()) {
      throw ConfigError("privacy assignment and dataset disagree on the number of users");
    }
    const std::size_t n = data_.num_users();
    clients_.reserve(n);
    for (UserIndex u = 0; u < n; ++u) {
      clients_.push_back(init_client<Scalar>(config_.model, data_.num_items(), privacy_.tier(u),
                                             derive_seed(config_.seed, Stream::kClientInit, {u})));
    }
    public_interactions_ = collect_public_interactions(data_, privacy_);
    graph_ = normalize(build_user_graph(public_interactions_));
    if (config_.global_average_public_only) {
      for (UserIndex u = 0; u < n; ++u) {
        if (privacy_.is_public(u)) average_over_.push_back(u);
      }
    }
    // Round-1 uploads are the initial item tables.
    server_.uploads = EmbeddingStack<Scalar>(n, data_.num_items(), config_.model.embed_dim);
    for (UserIndex u = 0; u < n; ++u) {
      Rng unused(0);
      upload_item_table(clients_[u].item_table, 0.0, unused, server_.uploads.block(u));
    }
  }

  const std::vector<ClientState<Scalar>>& clients() const { return clients_; }
  const ServerState<Scalar>& server() const { return server_; }
  const UserGraph& graph() const { return graph_; }
  const FederationConfig& config() const { return config_; }
  std::size_t completed_rounds() const { return round_; }

  /// Server half of a round: propagation, global average and distribution
  /// into the client tables.
  void server_step() {
    if (config_.ablation.disable_iei) return;
    server_update(server_, graph_, config_.gcn_layers, config_.ablation, average_over_,
                  config_.workers);
    const double alpha = config_.ablation.disable_upie ? 0.0 : config_.alpha;
    parallel_for(clients_.size(), config_.workers, [&](UserIndex u) {
      blend_into<Scalar>(server_.propagated.block(u), server_.global.values(), alpha,
                         privacy_.tier(u), clients_[u].item_table.values());
    });
  }

  /// Client half of a round: local training followed by upload. Returns the
  /// mean training loss over clients.
  double client_step(std::size_t round) {
    const std::size_t n = clients_.size();
    std::vector<double> losses(n);
    parallel_for(n, config_.workers, [&](UserIndex u) {
      Rng rng = make_rng(config_.seed, Stream::kLocalTraining, {u, round});
      try {
        losses[u] = train_local(clients_[u], data_, u, config_.model, rng).mean_loss;
      } catch (const TrainingError& e) {
        throw TrainingError("round " + std::to_string(round) + ": " + e.what());
      }
      if (!config_.ablation.disable_iei) {
        Rng noise = make_rng(config_.seed, Stream::kLdpNoise, {u, round});
        upload_item_table(clients_[u].item_table, config_.ldp_scale, noise,
                          server_.uploads.block(u));
      }
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(n);
  }

  /// Runs the configured number of rounds, calling hook on evaluation rounds.
  std::vector<RoundRecord> run(const EvalHook<Scalar>& hook) {
    std::vector<RoundRecord> records;
    while (round_ < config_.rounds) {
      const auto start = std::chrono::steady_clock::now();
      const std::size_t round = round_ + 1;
      if (round == 2) check_graph_invariant();
      server_step();
      RoundRecord rec;
      rec.round = round;
      rec.mean_train_loss = client_step(round);
      server_.round = round;
      round_ = round;
      if (hook && (round % config_.eval_stride == 0 || round == config_.rounds)) {
        RoundEvaluation ev = hook(round, clients_);
        rec.test = std::move(ev.test);
        rec.validation = std::move(ev.validation);
      }
      if (config_.checkpoint_every > 0 && round % config_.checkpoint_every == 0) {
        write_snapshot<Scalar>(config_.checkpoint_path, clients_, server_);
      }
      rec.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      records.push_back(std::move(rec));
    }
    return records;
  }

 private:
  // Public training sets are static, so the graph built before round 1 must
  // equal a fresh rebuild.
  void check_graph_invariant() const {
    const UserGraph rebuilt = build_user_graph(collect_public_interactions(data_, privacy_));
    if (rebuilt.cols != graph_.cols || rebuilt.weights != graph_.weights) {
      throw std::logic_error("user graph changed between rounds");
    }
  }

  const Source& data_;
  const PrivacyAssignment& privacy_;
  FederationConfig config_;
  std::vector<ClientState<Scalar>> clients_;
  UserItemMatrix public_interactions_;
  UserGraph graph_;
  std::vector<UserIndex> average_over_;
  ServerState<Scalar> server_;
  std::size_t round_ = 0;
};

/// Evaluation hook that scores test (and, when available, validation)
/// rankings against fixed negatives.
template <typename Scalar, InteractionSource Source>
EvalHook<Scalar> make_eval_hook(const Source& data, const std::vector<std::vector<ItemIndex>>& negatives,
                                const PrivacyAssignment& privacy, std::size_t k,
                                bool with_validation, std::size_t workers) {
  return [&data, &negatives, &privacy, k, with_validation, workers](
             std::size_t, std::span<const ClientState<Scalar>> clients) {
    RoundEvaluation ev;
    ev.test = evaluate_round(clients, data, negatives, privacy, k, EvalTarget::kTest, workers);
    if (with_validation) {
      ev.validation =
          evaluate_round(clients, data, negatives, privacy, k, EvalTarget::kValidation, workers);
    }
    return ev;
  };
}

template <typename Scalar, InteractionSource Source>
std::vector<RoundRecord> run_federation(const Source& data, const PrivacyAssignment& privacy,
                                        const FederationConfig& config,
                                        const EvalHook<Scalar>& hook) {
  Federation<Scalar, Source> federation(data, privacy, config);
  return federation.run(hook);
}

}  // namespace fedgraph

#endif  // FEDGRAPH_FEDERATION_HPP_
