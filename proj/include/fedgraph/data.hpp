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
#ifndef FEDGRAPH_DATA_HPP_
#define FEDGRAPH_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fedgraph/common.hpp"
#include "fedgraph/rng.hpp"

namespace fedgraph {

enum class InputFormat { kTabSeparated, kDoubleColonSeparated, kCommaSeparated };

inline InputFormat parse_input_format(std::string_view name) {
  if (name == "tsv" || name == "tab") return InputFormat::kTabSeparated;
  if (name == "dcs" || name == "::" || name == "ml-1m") return InputFormat::kDoubleColonSeparated;
  if (name == "csv") return InputFormat::kCommaSeparated;
  throw ConfigError("unknown input format '" + std::string(name) +
                    "' (expected tsv, dcs or csv)");
}

inline std::string_view to_string(InputFormat format) {
  switch (format) {
    case InputFormat::kTabSeparated: return "tsv";
    case InputFormat::kDoubleColonSeparated: return "dcs";
    case InputFormat::kCommaSeparated: return "csv";
  }
  return "tsv";
}

struct RawInteraction {
  std::string user_id;
  std::string item_id;
  double rating = 1.0;
  std::optional<std::int64_t> timestamp;
  // 1-based source line; doubles as recency when timestamps are missing.
  std::size_t line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, InputFormat format) {
  std::vector<std::string_view> fields;
  switch (format) {
    case InputFormat::kTabSeparated: {
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && (line[i] == '\t' || line[i] == ' ')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != '\t' && line[j] != ' ') ++j;
        fields.push_back(line.substr(i, j - i));
        i = j;
      }
      break;
    }
    case InputFormat::kDoubleColonSeparated:
    case InputFormat::kCommaSeparated: {
      const std::string_view sep = format == InputFormat::kCommaSeparated ? "," : "::";
      std::size_t start = 0;
      while (true) {
        const std::size_t pos = line.find(sep, start);
        fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + sep.size();
      }
      break;
    }
  }
  return fields;
}

inline bool parse_double(std::string_view s, double& out) {
  // std::from_chars for double is available in libstdc++ 11.
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool parse_timestamp(std::string_view s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec == std::errc() && ptr == end) return true;
  // Some exports write timestamps as floats ("881250949.0").
  double d;
  if (parse_double(s, d) && d == std::floor(d)) {
    out = static_cast<std::int64_t>(d);
    return true;
  }
  return false;
}

// True if a is more recent than b.
inline bool more_recent(const RawInteraction& a, const RawInteraction& b) {
  if (a.timestamp && b.timestamp && *a.timestamp != *b.timestamp) {
    return *a.timestamp > *b.timestamp;
  }
  return a.line > b.line;
}

}  // namespace detail

/// Parses interactions from a stream. Columns are user, item, rating and an
/// optional timestamp. Duplicate (user, item) pairs keep the most recent row;
/// the result is ordered by the source line of the kept row.
inline std::vector<RawInteraction> parse_interactions(std::istream& in, InputFormat format,
                                                      std::string_view source = "<input>") {
  std::vector<RawInteraction> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::string buffer;
  std::size_t line_no = 0;
  bool header_pending = format == InputFormat::kCommaSeparated;
  const auto fail = [&](const std::string& what) {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, buffer)) {
    ++line_no;
    const std::string_view line = detail::trim(buffer);
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split_fields(line, format);
    if (fields.size() != 3 && fields.size() != 4) {
      fail("expected 3 or 4 columns (user, item, rating[, timestamp]), got " +
           std::to_string(fields.size()));
    }
    RawInteraction row;
    row.user_id = std::string(fields[0]);
    row.item_id = std::string(fields[1]);
    row.line = line_no;
    if (row.user_id.empty() || row.item_id.empty()) fail("empty user or item id");
    if (!detail::parse_double(fields[2], row.rating)) {
      fail("rating '" + std::string(fields[2]) + "' is not a number");
    }
    if (fields.size() == 4 && !fields[3].empty()) {
      std::int64_t ts;
      if (!detail::parse_timestamp(fields[3], ts)) {
        fail("timestamp '" + std::string(fields[3]) + "' is not an integer");
      }
      row.timestamp = ts;
    }
    auto key = std::make_pair(row.user_id, row.item_id);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), rows.size());
      rows.push_back(std::move(row));
    } else if (detail::more_recent(row, rows[it->second])) {
      rows[it->second] = std::move(row);
    }
  }
  if (rows.empty()) throw DataError(std::string(source) + ": no interactions found");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RawInteraction& a, const RawInteraction& b) { return a.line < b.line; });
  return rows;
}

inline std::vector<RawInteraction> load_interactions(const std::string& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file '" + path + "'");
  return parse_interactions(in, format, path);
}

/// One user's leave-one-out split, in dense item indices.
struct UserSplit {
  std::vector<ItemIndex> train;
  std::optional<ItemIndex> validation;
  ItemIndex test = 0;
};

struct SplitReport {
  std::size_t input_interactions = 0;
  std::size_t dropped_users = 0;
  std::size_t dropped_interactions = 0;
};

/// Dense user/item index spaces with per-user train/validation/test items.
/// Immutable after construction.
class InteractionDataset {
 public:
  InteractionDataset() = default;

  /// Builds a dataset directly from per-user splits; tokens default to the
  /// decimal index. Throws DataError when an invariant is violated.
  static InteractionDataset from_splits(std::size_t num_items, std::vector<UserSplit> splits,
                                        std::vector<std::string> user_tokens = {},
                                        std::vector<std::string> item_tokens = {},
                                        SplitReport report = {}) {
    InteractionDataset ds;
    ds.num_items_ = num_items;
    if (user_tokens.empty()) {
      for (std::size_t u = 0; u < splits.size(); ++u) user_tokens.push_back(std::to_string(u));
    }
    if (item_tokens.empty()) {
      for (std::size_t i = 0; i < num_items; ++i) item_tokens.push_back(std::to_string(i));
    }
    if (user_tokens.size() != splits.size() || item_tokens.size() != num_items) {
      throw DataError("token table sizes do not match the index spaces");
    }
    if (splits.empty()) throw DataError("dataset has no users");
    ds.user_tokens_ = std::move(user_tokens);
    ds.item_tokens_ = std::move(item_tokens);
    for (std::size_t u = 0; u < ds.user_tokens_.size(); ++u) ds.user_lookup_[ds.user_tokens_[u]] = u;
    for (std::size_t i = 0; i < ds.item_tokens_.size(); ++i) ds.item_lookup_[ds.item_tokens_[i]] = i;
    ds.interacted_.resize(splits.size());
    for (std::size_t u = 0; u < splits.size(); ++u) {
      const UserSplit& s = splits[u];
      const auto in_range = [&](ItemIndex i) { return i < num_items; };
      if (s.train.empty()) throw DataError("user " + ds.user_tokens_[u] + " has no training items");
      if (!std::all_of(s.train.begin(), s.train.end(), in_range) || !in_range(s.test) ||
          (s.validation && !in_range(*s.validation))) {
        throw DataError("user " + ds.user_tokens_[u] + " references an out-of-range item");
      }
      auto& all = ds.interacted_[u];
      all = s.train;
      std::sort(all.begin(), all.end());
      if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw DataError("user " + ds.user_tokens_[u] + " has duplicate training items");
      }
      const auto in_train = [&](ItemIndex i) { return std::binary_search(all.begin(), all.end(), i); };
      if (in_train(s.test) || (s.validation && (in_train(*s.validation) || *s.validation == s.test))) {
        throw DataError("user " + ds.user_tokens_[u] + " has overlapping train/validation/test items");
      }
      all.push_back(s.test);
      if (s.validation) all.push_back(*s.validation);
      std::sort(all.begin(), all.end());
    }
    ds.splits_ = std::move(splits);
    ds.report_ = report;
    return ds;
  }

  std::size_t num_users() const { return splits_.size(); }
  std::size_t num_items() const { return num_items_; }

  std::span<const ItemIndex> train(UserIndex u) const { return splits_[u].train; }
  std::optional<ItemIndex> validation(UserIndex u) const { return splits_[u].validation; }
  ItemIndex test(UserIndex u) const { return splits_[u].test; }
  /// Sorted union of train, validation and test items.
  std::span<const ItemIndex> interacted(UserIndex u) const { return interacted_[u]; }
  bool has_interacted(UserIndex u, ItemIndex i) const {
    return std::binary_search(interacted_[u].begin(), interacted_[u].end(), i);
  }

  const std::string& user_token(UserIndex u) const { return user_tokens_[u]; }
  const std::string& item_token(ItemIndex i) const { return item_tokens_[i]; }
  std::optional<UserIndex> find_user(const std::string& token) const {
    auto it = user_lookup_.find(token);
    return it == user_lookup_.end() ? std::nullopt : std::optional<UserIndex>(it->second);
  }
  std::optional<ItemIndex> find_item(const std::string& token) const {
    auto it = item_lookup_.find(token);
    return it == item_lookup_.end() ? std::nullopt : std::optional<ItemIndex>(it->second);
  }

  const SplitReport& report() const { return report_; }

  std::size_t retained_interactions() const {
    std::size_t total = 0;
    for (const auto& all : interacted_) total += all.size();
    return total;
  }

 private:
  std::size_t num_items_ = 0;
  std::vector<UserSplit> splits_;
  std::vector<std::vector<ItemIndex>> interacted_;
  std::vector<std::string> user_tokens_;
  std::vector<std::string> item_tokens_;
  std::unordered_map<std::string, UserIndex> user_lookup_;
  std::unordered_map<std::string, ItemIndex> item_lookup_;
  SplitReport report_;
};

/// Read access a client needs to its own interaction data. The federation and
/// evaluation code is written against this so tests can substitute doubles.
template <typename T>
concept InteractionSource = requires(const T& t, UserIndex u) {
  { t.num_users() } -> std::convertible_to<std::size_t>;
  { t.num_items() } -> std::convertible_to<std::size_t>;
  { t.train(u) } -> std::convertible_to<std::span<const ItemIndex>>;
  { t.validation(u) } -> std::convertible_to<std::optional<ItemIndex>>;
  { t.test(u) } -> std::convertible_to<ItemIndex>;
  { t.interacted(u) } -> std::convertible_to<std::span<const ItemIndex>>;
};

/// Leave-one-out split: the most recent interaction of each user is the test
/// item, the second most recent the validation item (when held), the rest
/// train. Users below the size threshold are dropped along with any items only
/// they touched.
inline InteractionDataset leave_one_out_split(std::span<const RawInteraction> interactions,
                                              bool hold_validation) {
  const std::size_t min_count = hold_validation ? 3 : 2;
  std::vector<std::string> user_order;
  std::unordered_map<std::string, std::vector<const RawInteraction*>> by_user;
  for (const auto& row : interactions) {
    auto [it, inserted] = by_user.try_emplace(row.user_id);
    if (inserted) user_order.push_back(row.user_id);
    it->second.push_back(&row);
  }

  SplitReport report;
  report.input_interactions = interactions.size();
  std::vector<std::string> kept_users;
  for (const auto& user : user_order) {
    const auto& rows = by_user[user];
    if (rows.size() < min_count) {
      ++report.dropped_users;
      report.dropped_interactions += rows.size();
    } else {
      kept_users.push_back(user);
    }
  }
  if (kept_users.empty()) {
    throw DataError("no user has at least " + std::to_string(min_count) +
                    " interactions; nothing to split");
  }

  // Items indexed by first appearance among retained users, in file order.
  std::unordered_map<std::string, bool> kept_lookup;
  for (const auto& u : kept_users) kept_lookup[u] = true;
  std::vector<std::string> item_tokens;
  std::unordered_map<std::string, ItemIndex> item_index;
  for (const auto& row : interactions) {
    if (!kept_lookup.count(row.user_id)) continue;
    if (item_index.try_emplace(row.item_id, item_tokens.size()).second) {
      item_tokens.push_back(row.item_id);
    }
  }

  std::vector<UserSplit> splits;
  splits.reserve(kept_users.size());
  for (const auto& user : kept_users) {
    auto rows = by_user[user];
    const bool all_timestamped = std::all_of(
        rows.begin(), rows.end(), [](const RawInteraction* r) { return r->timestamp.has_value(); });
    std::stable_sort(rows.begin(), rows.end(), [&](const RawInteraction* a, const RawInteraction* b) {
      if (all_timestamped && *a->timestamp != *b->timestamp) return *a->timestamp < *b->timestamp;
      return a->line < b->line;
    });
    UserSplit split;
    split.test = item_index.at(rows.back()->item_id);
    rows.pop_back();
    if (hold_validation) {
      split.validation = item_index.at(rows.back()->item_id);
      rows.pop_back();
    }
    for (const auto* r : rows) split.train.push_back(item_index.at(r->item_id));
    splits.push_back(std::move(split));
  }
  const std::size_t num_items = item_tokens.size();
  return InteractionDataset::from_splits(num_items, std::move(splits), std::move(kept_users),
                                         std::move(item_tokens), report);
}

namespace detail {

// Items in [0, num_items) that are not in the sorted list seen.
inline std::vector<ItemIndex> complement(std::size_t num_items, std::span<const ItemIndex> seen) {
  std::vector<ItemIndex> pool;
  pool.reserve(num_items - std::min<std::size_t>(seen.size(), num_items));
  std::size_t k = 0;
  for (ItemIndex i = 0; i < num_items; ++i) {
    while (k < seen.size() && seen[k] < i) ++k;
    if (k < seen.size() && seen[k] == i) continue;
    pool.push_back(i);
  }
  return pool;
}

template <InteractionSource Source>
std::vector<ItemIndex> non_interacted_pool(const Source& data, UserIndex user) {
  return complement(data.num_items(), data.interacted(user));
}

}  // namespace detail

/// Which items count as unobserved when drawing training negatives.
/// kOutsideTrain leaves the held-out validation and test items in the pool, so
/// a client cannot single out its own test item by never pushing it down.
/// kOutsideAll removes every interaction of the user, held-out ones included.
enum class NegativePool : std::uint8_t { kOutsideTrain = 0, kOutsideAll = 1 };

inline NegativePool parse_negative_pool(std::string_view name) {
  if (name == "train") return NegativePool::kOutsideTrain;
  if (name == "all") return NegativePool::kOutsideAll;
  throw ConfigError("unknown negative pool '" + std::string(name) + "' (expected train or all)");
}

inline std::string_view to_string(NegativePool pool) {
  return pool == NegativePool::kOutsideTrain ? "train" : "all";
}

/// ratio * |train(user)| items drawn uniformly with replacement from the
/// items outside the user's training set (kOutsideTrain) or outside every
/// interaction of the user (kOutsideAll).
template <InteractionSource Source>
std::vector<ItemIndex> sample_train_negatives(const Source& data, UserIndex user, std::size_t ratio,
                                              Rng& rng, NegativePool which = NegativePool::kOutsideAll) {
  if (ratio < 1) throw ConfigError("negative sampling ratio must be at least 1");
  std::vector<ItemIndex> sorted_train;
  std::span<const ItemIndex> seen;
  if (which == NegativePool::kOutsideAll) {
    seen = data.interacted(user);
  } else {
    const auto train = data.train(user);
    sorted_train.assign(train.begin(), train.end());
    std::sort(sorted_train.begin(), sorted_train.end());
    seen = sorted_train;
  }
  const std::size_t pool_size = data.num_items() - seen.size();
  if (pool_size == 0) {
    throw DataError("user " + std::to_string(user) + " has no items left to sample negatives from");
  }
  const std::size_t count = ratio * data.train(user).size();
  std::vector<ItemIndex> out;
  out.reserve(count);
  if (2 * pool_size >= data.num_items()) {
    // Dense pool: rejection from the full catalog accepts at least half the time.
    while (out.size() < count) {
      const ItemIndex i = uniform_index(rng, data.num_items());
      if (!std::binary_search(seen.begin(), seen.end(), i)) out.push_back(i);
    }
  } else {
    const auto pool = detail::complement(data.num_items(), seen);
    for (std::size_t n = 0; n < count; ++n) out.push_back(pool[uniform_index(rng, pool.size())]);
  }
  return out;
}

/// count distinct non-interacted items, sampled without replacement.
template <InteractionSource Source>
std::vector<ItemIndex> sample_eval_negatives(const Source& data, UserIndex user, std::size_t count,
                                             Rng& rng) {
  auto pool = detail::non_interacted_pool(data, user);
  if (pool.size() < count) {
    throw DataError("user " + std::to_string(user) + " has only " + std::to_string(pool.size()) +
                    " non-interacted items but " + std::to_string(count) +
                    " evaluation negatives were requested");
  }
  // Partial Fisher-Yates.
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t j = n + uniform_index(rng, pool.size() - n);
    std::swap(pool[n], pool[j]);
  }
  pool.resize(count);
  return pool;
}

/// Evaluation negatives for every user, keyed by (seed, user) so the set is
/// fixed for the whole run.
template <InteractionSource Source>
std::vector<std::vector<ItemIndex>> build_eval_negatives(const Source& data, std::size_t count,
                                                         std::uint64_t seed) {
  std::vector<std::vector<ItemIndex>> out(data.num_users());
  for (UserIndex u = 0; u < data.num_users(); ++u) {
    Rng rng = make_rng(seed, Stream::kEvalNegatives, {u});
    out[u] = sample_eval_negatives(data, u, count, rng);
  }
  return out;
}

struct PrivacyAssignment {
  std::vector<Tier> tiers;
  double public_ratio = 1.0;
  std::uint64_t seed = 0;

  std::size_t num_users() const { return tiers.size(); }
  Tier tier(UserIndex u) const { return tiers[u]; }
  bool is_public(UserIndex u) const { return tiers[u] == Tier::kPublic; }
  std::size_t num_public() const {
    return static_cast<std::size_t>(std::count(tiers.begin(), tiers.end(), Tier::kPublic));
  }
};

/// Marks a uniformly random subset of round(public_ratio * N) users public.
inline PrivacyAssignment assign_privacy(std::size_t num_users, double public_ratio,
                                        std::uint64_t seed) {
  if (!(public_ratio >= 0.0 && public_ratio <= 1.0)) {
    throw ConfigError("public ratio must lie in [0, 1]");
  }
  PrivacyAssignment out;
  out.public_ratio = public_ratio;
  out.seed = seed;
  out.tiers.assign(num_users, Tier::kPrivate);
  const auto num_public =
      std::min<std::size_t>(num_users, static_cast<std::size_t>(std::llround(public_ratio * num_users)));
  std::vector<UserIndex> order(num_users);
  for (UserIndex u = 0; u < num_users; ++u) order[u] = u;
  Rng rng = make_rng(seed, Stream::kPrivacy, {num_users});
  for (std::size_t n = 0; n < num_public; ++n) {
    const std::size_t j = n + uniform_index(rng, num_users - n);
    std::swap(order[n], order[j]);
    out.tiers[order[n]] = Tier::kPublic;
  }
  return out;
}

}  // namespace fedgraph

#endif  // FEDGRAPH_DATA_HPP_
