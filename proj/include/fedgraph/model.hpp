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
#ifndef FEDGRAPH_MODEL_HPP_
#define FEDGRAPH_MODEL_HPP_

// Per-client recommender: a user vector, a full item embedding table and an
// MLP score function over concat(user, item). Forward pass, backpropagation
// and plain mini-batch SGD are written out by hand.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fedgraph/common.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

// Initialisation of the score-function weights. kGaussian uses init_scale like
// the embeddings; kFanIn draws from N(0, 2 / fan_in).
enum class MlpInit : std::uint8_t { kGaussian = 0, kFanIn = 1 };

inline MlpInit parse_mlp_init(std::string_view name) {
  if (name == "gaussian") return MlpInit::kGaussian;
  if (name == "fan_in" || name == "fan-in") return MlpInit::kFanIn;
  throw ConfigError("unknown mlp_init '" + std::string(name) + "' (expected gaussian or fan_in)");
}

inline std::string_view to_string(MlpInit init) { return init == MlpInit::kFanIn ? "fan_in" : "gaussian"; }

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::vector<std::size_t> hidden = {32, 16};
  double learning_rate = 0.01;
  std::size_t local_epochs = 1;
  std::size_t neg_ratio = 4;
  std::size_t batch_size = 256;
  // Standard deviation of the Gaussian used for the embeddings (and for the
  // score function under MlpInit::kGaussian).
  double init_scale = 0.01;
  MlpInit mlp_init = MlpInit::kGaussian;
  // Item rows step with learning_rate * item_lr_scale.
  double item_lr_scale = 1.0;
  // Gradient-norm clipping threshold per mini-batch; 0 disables clipping.
  double clip_norm = 0.0;
  NegativePool negative_pool = NegativePool::kOutsideTrain;
  std::uint64_t seed = 0;

  void validate() const {
    if (embed_dim < 1) throw ConfigError("embed_dim must be at least 1");
    for (std::size_t h : hidden) {
      if (h < 1) throw ConfigError("hidden layer widths must be at least 1");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning rate must be a non-negative finite number");
    }
    if (local_epochs < 1) throw ConfigError("local_epochs must be at least 1");
    if (neg_ratio < 1) throw ConfigError("neg_ratio must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be non-negative");
    if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
    if (!(item_lr_scale >= 0.0) || !std::isfinite(item_lr_scale)) {
      throw ConfigError("item_lr_scale must be a non-negative finite number");
    }
  }
};

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  AlignedVector<Scalar> bias;

  std::size_t inputs() const { return weight.cols(); }
  std::size_t outputs() const { return weight.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// One client's parameters: user vector, item table and score function.
template <typename Scalar>
struct ClientState {
  AlignedVector<Scalar> user_vec;
  Matrix<Scalar> item_table;
  std::vector<DenseLayer<Scalar>> layers;
  Tier tier = Tier::kPrivate;

  std::size_t embed_dim() const { return user_vec.size(); }
  std::size_t num_items() const { return item_table.rows(); }

  friend bool operator==(const ClientState&, const ClientState&) = default;
};

struct TrainReport {
  double mean_loss = 0.0;
  std::size_t steps = 0;
  std::size_t examples = 0;
  double grad_norm = 0.0;
  // Sorted, unique item rows that received a gradient.
  std::vector<ItemIndex> touched_items;
};

struct ScoredItem {
  ItemIndex item;
  double score;
};

inline constexpr double kProbabilityEpsilon = 1e-7;

template <typename Scalar>
ClientState<Scalar> init_client(const ModelConfig& config, std::size_t num_items, Tier tier,
                                std::uint64_t seed) {
  config.validate();
  if (num_items < 1) throw ConfigError("a client needs at least one item");
  Rng rng(seed);
  const auto draw = [&] { return static_cast<Scalar>(config.init_scale * standard_normal(rng)); };
  ClientState<Scalar> s;
  s.tier = tier;
  s.user_vec.resize(config.embed_dim);
  for (auto& v : s.user_vec) v = draw();
  s.item_table = Matrix<Scalar>(num_items, config.embed_dim);
  for (auto& v : s.item_table.values()) v = draw();
  std::size_t fan_in = 2 * config.embed_dim;
  std::vector<std::size_t> widths = config.hidden;
  widths.push_back(1);
  for (std::size_t width : widths) {
    DenseLayer<Scalar> layer{Matrix<Scalar>(width, fan_in), AlignedVector<Scalar>(width, Scalar(0))};
    const double sd = config.mlp_init == MlpInit::kFanIn ? std::sqrt(2.0 / static_cast<double>(fan_in))
                                                         : config.init_scale;
    for (auto& v : layer.weight.values()) v = static_cast<Scalar>(sd * standard_normal(rng));
    s.layers.push_back(std::move(layer));
    fan_in = width;
  }
  return s;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Per-example binary cross-entropy with the prediction clamped to
/// [eps, 1 - eps].
inline double bce_term(double prediction, int label) {
  const double p = std::clamp(prediction, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return label ? -std::log(p) : -std::log1p(-p);
}

struct LossValue {
  double sum = 0.0;
  double mean = 0.0;
};

/// Summed and mean BCE over (prediction, label) pairs.
inline LossValue bce_loss(std::span<const std::pair<double, int>> predictions) {
  if (predictions.empty()) throw DataError("bce_loss needs at least one prediction");
  LossValue out;
  for (const auto& [p, y] : predictions) out.sum += bce_term(p, y);
  out.mean = out.sum / static_cast<double>(predictions.size());
  return out;
}

namespace detail {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
Eigen::Map<const RowMatrix<Scalar>> weight_map(const DenseLayer<Scalar>& layer) {
  return {layer.weight.data(), static_cast<Eigen::Index>(layer.outputs()),
          static_cast<Eigen::Index>(layer.inputs())};
}

template <typename Scalar>
Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> bias_map(const DenseLayer<Scalar>& layer) {
  return {layer.bias.data(), static_cast<Eigen::Index>(layer.bias.size())};
}

// Activations for a batch of examples, one row per example. activations[l]
// is the (post-ReLU) input of layer l; logits holds the final outputs.
template <typename Scalar>
struct BatchCache {
  std::vector<RowMatrix<Scalar>> activations;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logits;
  RowMatrix<Scalar> delta;
  RowMatrix<Scalar> delta_prev;
};

template <typename Scalar>
void forward_batch(const ClientState<Scalar>& s, std::span<const ItemIndex> items, BatchCache<Scalar>& cache) {
  const auto d = static_cast<Eigen::Index>(s.embed_dim());
  const auto n = static_cast<Eigen::Index>(items.size());
  const std::size_t depth = s.layers.size();
  cache.activations.resize(depth);
  auto& x0 = cache.activations[0];
  x0.resize(n, 2 * d);
  const Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> user(s.user_vec.data(), d);
  for (Eigen::Index r = 0; r < n; ++r) {
    x0.row(r).head(d) = user;
    x0.row(r).tail(d) =
        Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(s.item_table.row(items[r]).data(), d);
  }
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    const auto& layer = s.layers[l];
    auto& next = cache.activations[l + 1];
    next.noalias() = cache.activations[l] * weight_map(layer).transpose();
    next.rowwise() += bias_map(layer);
    next = next.cwiseMax(Scalar(0));
  }
  const auto& last = s.layers.back();
  cache.logits.noalias() = cache.activations[depth - 1] * weight_map(last).transpose();
  cache.logits.array() += last.bias[0];
}

}  // namespace detail

/// Predicted interaction probability sigmoid(MLP(concat(p, q[item]))).
template <typename Scalar>
double predict(const ClientState<Scalar>& s, ItemIndex item) {
  detail::BatchCache<Scalar> cache;
  const ItemIndex one[1] = {item};
  detail::forward_batch(s, std::span<const ItemIndex>(one), cache);
  return sigmoid(static_cast<double>(cache.logits[0]));
}

/// Summed gradient of a mini-batch. Item rows are stored sparsely: only rows
/// that appear in the batch have a slot.
template <typename Scalar>
class Gradient {
 public:
  explicit Gradient(const ClientState<Scalar>& s)
      : dim_(s.embed_dim()), user_vec_(s.embed_dim(), Scalar(0)), slot_(s.num_items(), kNoSlot) {
    for (const auto& layer : s.layers) {
      layers_.push_back(DenseLayer<Scalar>{Matrix<Scalar>(layer.outputs(), layer.inputs()),
                                           AlignedVector<Scalar>(layer.outputs(), Scalar(0))});
    }
  }

  void reset() {
    std::fill(user_vec_.begin(), user_vec_.end(), Scalar(0));
    for (auto& layer : layers_) {
      layer.weight.fill(Scalar(0));
      std::fill(layer.bias.begin(), layer.bias.end(), Scalar(0));
    }
    for (ItemIndex i : items_) slot_[i] = kNoSlot;
    items_.clear();
    item_rows_.clear();
  }

  std::span<Scalar> item_row(ItemIndex item) {
    if (slot_[item] == kNoSlot) {
      slot_[item] = items_.size();
      items_.push_back(item);
      item_rows_.resize(item_rows_.size() + dim_, Scalar(0));
    }
    return {item_rows_.data() + slot_[item] * dim_, dim_};
  }

  /// Gradient row for an item, or empty if the item was not touched.
  std::span<const Scalar> find_item_row(ItemIndex item) const {
    if (slot_[item] == kNoSlot) return {};
    return {item_rows_.data() + slot_[item] * dim_, dim_};
  }

  double squared_norm() const {
    double total = 0.0;
    const auto add = [&](std::span<const Scalar> v) {
      for (Scalar x : v) total += static_cast<double>(x) * static_cast<double>(x);
    };
    add(user_vec_);
    add(item_rows_);
    for (const auto& layer : layers_) {
      add(layer.weight.values());
      add(layer.bias);
    }
    return total;
  }

  void scale(Scalar factor) {
    for (auto& x : user_vec_) x *= factor;
    for (auto& x : item_rows_) x *= factor;
    for (auto& layer : layers_) {
      for (auto& x : layer.weight.values()) x *= factor;
      for (auto& x : layer.bias) x *= factor;
    }
  }

  std::span<Scalar> user_vec() { return user_vec_; }
  std::span<const Scalar> user_vec() const { return user_vec_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  std::span<const ItemIndex> items() const { return items_; }

 private:
  static constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);
  std::size_t dim_;
  AlignedVector<Scalar> user_vec_;
  std::vector<DenseLayer<Scalar>> layers_;
  std::vector<ItemIndex> items_;
  AlignedVector<Scalar> item_rows_;
  std::vector<std::size_t> slot_;
};

/// Forward + backward over a batch of (item, label) examples. Adds the summed
/// loss gradient into grad and returns the summed loss.
template <typename Scalar>
double accumulate_gradient(const ClientState<Scalar>& s, std::span<const ItemIndex> items,
                           std::span<const int> labels, Gradient<Scalar>& grad,
                           detail::BatchCache<Scalar>& cache) {
  detail::forward_batch(s, items, cache);
  const auto n = static_cast<Eigen::Index>(items.size());
  auto& delta = cache.delta;
  delta.resize(n, 1);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double p = sigmoid(static_cast<double>(cache.logits[r]));
    loss += bce_term(p, labels[r]);
    // d(-y log p - (1-y) log(1-p)) / dlogit = p - y.
    delta(r, 0) = static_cast<Scalar>(p - labels[r]);
  }
  auto& glayers = grad.layers();
  for (std::size_t l = s.layers.size(); l-- > 0;) {
    const auto& x = cache.activations[l];
    auto& g = glayers[l];
    Eigen::Map<detail::RowMatrix<Scalar>> gw(g.weight.data(), static_cast<Eigen::Index>(g.outputs()),
                                             static_cast<Eigen::Index>(g.inputs()));
    gw.noalias() += delta.transpose() * x;
    Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(g.bias.data(), static_cast<Eigen::Index>(g.bias.size())) +=
        delta.colwise().sum();
    cache.delta_prev.noalias() = delta * detail::weight_map(s.layers[l]);
    if (l > 0) {
      // ReLU mask: the stored input is the post-activation value.
      cache.delta_prev = (x.array() > Scalar(0)).select(cache.delta_prev, Scalar(0));
    }
    std::swap(delta, cache.delta_prev);
  }
  const auto d = static_cast<Eigen::Index>(s.embed_dim());
  auto gu = grad.user_vec();
  Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(gu.data(), d) += delta.leftCols(d).colwise().sum();
  for (Eigen::Index r = 0; r < n; ++r) {
    auto gq = grad.item_row(items[r]);
    Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(gq.data(), d) += delta.row(r).tail(d);
  }
  return loss;
}

/// Plain SGD step, touching only the item rows present in grad.
/// Item rows use item_lr when given.
template <typename Scalar>
void apply_gradient(ClientState<Scalar>& s, const Gradient<Scalar>& grad, double learning_rate,
                    std::optional<double> item_learning_rate = std::nullopt) {
  const auto lr = static_cast<Scalar>(learning_rate);
  const auto item_lr = static_cast<Scalar>(item_learning_rate.value_or(learning_rate));
  const auto gu = grad.user_vec();
  for (std::size_t k = 0; k < s.user_vec.size(); ++k) s.user_vec[k] -= lr * gu[k];
  for (ItemIndex item : grad.items()) {
    auto row = s.item_table.row(item);
    const auto g = grad.find_item_row(item);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] -= item_lr * g[k];
  }
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    auto w = s.layers[l].weight.values();
    const auto gw = grad.layers()[l].weight.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * gw[k];
    auto& b = s.layers[l].bias;
    const auto& gb = grad.layers()[l].bias;
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
  }
}

/// Summed loss and gradient over a list of (item, label) examples, without
/// updating the state.
template <typename Scalar>
double loss_and_gradient(const ClientState<Scalar>& s,
                         std::span<const std::pair<ItemIndex, int>> examples,
                         Gradient<Scalar>& grad) {
  if (examples.empty()) return 0.0;
  std::vector<ItemIndex> items;
  std::vector<int> labels;
  for (const auto& [item, label] : examples) {
    items.push_back(item);
    labels.push_back(label);
  }
  detail::BatchCache<Scalar> cache;
  return accumulate_gradient(s, std::span<const ItemIndex>(items), std::span<const int>(labels), grad, cache);
}

/// Local training for one client: config.local_epochs passes over the user's
/// training positives, each with freshly sampled negatives, shuffled into
/// mini-batches of summed-gradient SGD steps.
template <typename Scalar, InteractionSource Source>
TrainReport train_local(ClientState<Scalar>& s, const Source& data, UserIndex user,
                        const ModelConfig& config, Rng& rng) {
  const auto positives = data.train(user);
  if (positives.empty()) throw DataError("user " + std::to_string(user) + " has no training items");
  Gradient<Scalar> grad(s);
  detail::BatchCache<Scalar> cache;
  std::vector<std::pair<ItemIndex, int>> examples;
  std::vector<ItemIndex> batch_items;
  std::vector<int> batch_labels;
  std::vector<ItemIndex> touched;
  TrainReport report;
  double loss_total = 0.0;
  for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
    const auto negatives = sample_train_negatives(data, user, config.neg_ratio, rng, config.negative_pool);
    examples.clear();
    for (ItemIndex i : positives) examples.emplace_back(i, 1);
    for (ItemIndex i : negatives) examples.emplace_back(i, 0);
    shuffle(std::span(examples), rng);
    for (std::size_t begin = 0; begin < examples.size(); begin += config.batch_size) {
      const std::size_t end = std::min(examples.size(), begin + config.batch_size);
      grad.reset();
      batch_items.clear();
      batch_labels.clear();
      for (std::size_t n = begin; n < end; ++n) {
        batch_items.push_back(examples[n].first);
        batch_labels.push_back(examples[n].second);
      }
      const double batch_loss = accumulate_gradient(s, std::span<const ItemIndex>(batch_items),
                                                    std::span<const int>(batch_labels), grad, cache);
      double norm = std::sqrt(grad.squared_norm());
      if (!std::isfinite(batch_loss) || !std::isfinite(norm)) {
        throw TrainingError("non-finite loss or gradient for user " + std::to_string(user) +
                            " at step " + std::to_string(report.steps));
      }
      if (config.clip_norm > 0.0 && norm > config.clip_norm) {
        grad.scale(static_cast<Scalar>(config.clip_norm / norm));
        norm = config.clip_norm;
      }
      if (config.learning_rate != 0.0) apply_gradient(s, grad, config.learning_rate, config.learning_rate * config.item_lr_scale);
      touched.insert(touched.end(), grad.items().begin(), grad.items().end());
      loss_total += batch_loss;
      report.examples += end - begin;
      report.grad_norm = norm;
      ++report.steps;
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  report.touched_items = std::move(touched);
  report.mean_loss = loss_total / static_cast<double>(report.examples);
  return report;
}

/// Scores candidates and sorts by descending score, ties by ascending item.
template <typename Scalar>
std::vector<ScoredItem> rank_items(const ClientState<Scalar>& s,
                                   std::span<const ItemIndex> candidates) {
  if (candidates.empty()) throw DataError("rank_items needs at least one candidate");
  std::vector<ScoredItem> out;
  out.reserve(candidates.size());
  detail::BatchCache<Scalar> cache;
  detail::forward_batch(s, candidates, cache);
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    out.push_back({candidates[n], sigmoid(static_cast<double>(cache.logits[static_cast<Eigen::Index>(n)]))});
  }
  std::sort(out.begin(), out.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
  return out;
}

template <typename Scalar>
bool all_finite(const ClientState<Scalar>& s) {
  const auto finite = [](std::span<const Scalar> v) {
    return std::all_of(v.begin(), v.end(), [](Scalar x) { return std::isfinite(x); });
  };
  if (!finite(s.user_vec) || !finite(s.item_table.values())) return false;
  for (const auto& layer : s.layers) {
    if (!finite(layer.weight.values()) || !finite(layer.bias)) return false;
  }
  return true;
}

}  // namespace fedgraph

#endif  // FEDGRAPH_MODEL_HPP_
