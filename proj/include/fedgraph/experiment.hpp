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
#ifndef FEDGRAPH_EXPERIMENT_HPP_
#define FEDGRAPH_EXPERIMENT_HPP_

// Experiment front-end: flat key-value configuration, repeated runs with
// validation-based learning-rate selection, per-round CSVs, summaries,
// one- and two-axis sweeps, and the component ablation suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <charconv>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "fedgraph/common.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/eval.hpp"
#include "fedgraph/federation.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

// Precision of every CLI run.
using RunScalar = float;

struct ExperimentConfig {
  std::string dataset;
  InputFormat format = InputFormat::kTabSeparated;
  double public_ratio = 1.0;
  FederationConfig federation;
  // More than one value triggers selection by best validation HR@K.
  std::vector<double> learning_rates = {0.01};
  std::size_t k = 10;
  std::size_t eval_negatives = 99;
  std::size_t repetitions = 5;
  std::string out = "out";
  std::string label = "run";
  bool record_wall_time = true;

  void validate() const {
    if (dataset.empty()) throw ConfigError("no dataset given");
    if (!(public_ratio >= 0.0 && public_ratio <= 1.0)) throw ConfigError("public_ratio must lie in [0, 1]");
    if (learning_rates.empty()) throw ConfigError("at least one learning rate is required");
    for (double lr : learning_rates) {
      if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rates must be non-negative");
    }
    if (k < 1 || k > eval_negatives + 1) throw ConfigError("k must lie in [1, eval_negatives + 1]");
    if (repetitions < 1) throw ConfigError("reps must be at least 1");
    if (label.empty()) throw ConfigError("label must not be empty");
    federation.validate();
  }
};

namespace detail {

inline std::string trim_copy(std::string_view s) { return std::string(trim(s)); }

inline double to_double(const std::string& key, const std::string& value) {
  double d;
  if (!parse_double(trim(value), d)) throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  return d;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& value) {
  const std::string_view v = trim(value);
  std::uint64_t out;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return out;
}

inline bool to_bool(const std::string& key, const std::string& value) {
  const std::string v = trim_copy(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + value + "'");
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim_copy(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  std::string s = os.str();
  // Prefer the shortest representation that round-trips.
  for (int p = 1; p <= 17; ++p) {
    std::ostringstream t;
    t << std::setprecision(p) << v;
    double back;
    if (parse_double(t.str(), back) && back == v) return t.str();
  }
  return s;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_number(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw DataError("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string percent(double fraction, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << 100.0 * fraction;
  return os.str();
}

}  // namespace detail

/// Every recognised configuration key, in the order of the resolved config.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset",   "format",        "public_ratio",   "alpha",         "ldp_delta",
      "layers",    "embed_dim",     "hidden",         "lr",            "rounds",
      "local_epochs", "neg_ratio",  "batch_size",     "init_scale",    "clip_norm",
      "k",         "eval_negatives", "seed",          "reps",          "out",
      "label",     "ablate_iei",    "ablate_ugc",     "ablate_upie",   "workers",
      "eval_stride", "checkpoint_every", "global_average_public_only", "record_wall_time",
      "mlp_init",  "item_lr_scale", "negative_pool"};
  return keys;
}

/// Sets one key. Unknown keys and malformed values throw ConfigError.
inline void set_config_value(ExperimentConfig& c, const std::string& raw_key, const std::string& value) {
  std::string key = detail::trim_copy(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  auto& f = c.federation;
  auto& m = f.model;
  if (key == "dataset") c.dataset = detail::trim_copy(value);
  else if (key == "format") c.format = parse_input_format(detail::trim_copy(value));
  else if (key == "public_ratio") c.public_ratio = detail::to_double(key, value);
  else if (key == "alpha") f.alpha = detail::to_double(key, value);
  else if (key == "ldp_delta") f.ldp_scale = detail::to_double(key, value);
  else if (key == "layers") f.gcn_layers = detail::to_uint(key, value);
  else if (key == "embed_dim") m.embed_dim = detail::to_uint(key, value);
  else if (key == "hidden") {
    m.hidden.clear();
    for (const auto& h : detail::split_list(value)) m.hidden.push_back(detail::to_uint(key, h));
  } else if (key == "lr") {
    c.learning_rates.clear();
    for (const auto& v : detail::split_list(value)) c.learning_rates.push_back(detail::to_double(key, v));
  }
  else if (key == "rounds") f.rounds = detail::to_uint(key, value);
  else if (key == "local_epochs") m.local_epochs = detail::to_uint(key, value);
  else if (key == "neg_ratio") m.neg_ratio = detail::to_uint(key, value);
  else if (key == "batch_size") m.batch_size = detail::to_uint(key, value);
  else if (key == "init_scale") m.init_scale = detail::to_double(key, value);
  else if (key == "clip_norm") m.clip_norm = detail::to_double(key, value);
  else if (key == "mlp_init") m.mlp_init = parse_mlp_init(detail::trim_copy(value));
  else if (key == "item_lr_scale") m.item_lr_scale = detail::to_double(key, value);
  else if (key == "negative_pool") m.negative_pool = parse_negative_pool(detail::trim_copy(value));
  else if (key == "k") c.k = detail::to_uint(key, value);
  else if (key == "eval_negatives") c.eval_negatives = detail::to_uint(key, value);
  else if (key == "seed") f.seed = detail::to_uint(key, value);
  else if (key == "reps") c.repetitions = detail::to_uint(key, value);
  else if (key == "out") c.out = detail::trim_copy(value);
  else if (key == "label") c.label = detail::trim_copy(value);
  else if (key == "ablate_iei") f.ablation.disable_iei = detail::to_bool(key, value);
  else if (key == "ablate_ugc") f.ablation.disable_ugc = detail::to_bool(key, value);
  else if (key == "ablate_upie") f.ablation.disable_upie = detail::to_bool(key, value);
  else if (key == "workers") f.workers = detail::to_uint(key, value);
  else if (key == "eval_stride") f.eval_stride = detail::to_uint(key, value);
  else if (key == "checkpoint_every") f.checkpoint_every = detail::to_uint(key, value);
  else if (key == "global_average_public_only") f.global_average_public_only = detail::to_bool(key, value);
  else if (key == "record_wall_time") c.record_wall_time = detail::to_bool(key, value);
  else throw ConfigError("unknown config key '" + raw_key + "'");
}

/// Reads "key = value" lines; '#' starts a comment.
inline void apply_config_stream(ExperimentConfig& c, std::istream& in, std::string_view source = "<config>") {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(c, std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
  }
}

inline void apply_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  apply_config_stream(c, in, path);
}

/// The fully resolved configuration in the same flat format.
inline std::string format_config(const ExperimentConfig& c) {
  const auto& f = c.federation;
  const auto& m = f.model;
  std::ostringstream os;
  const auto b = [](bool v) { return v ? "true" : "false"; };
  os << "dataset = " << c.dataset << '\n'
     << "format = " << to_string(c.format) << '\n'
     << "public_ratio = " << detail::format_number(c.public_ratio) << '\n'
     << "alpha = " << detail::format_number(f.alpha) << '\n'
     << "ldp_delta = " << detail::format_number(f.ldp_scale) << '\n'
     << "layers = " << f.gcn_layers << '\n'
     << "embed_dim = " << m.embed_dim << '\n'
     << "hidden = " << detail::join(m.hidden) << '\n'
     << "lr = " << detail::join(c.learning_rates) << '\n'
     << "rounds = " << f.rounds << '\n'
     << "local_epochs = " << m.local_epochs << '\n'
     << "neg_ratio = " << m.neg_ratio << '\n'
     << "batch_size = " << m.batch_size << '\n'
     << "init_scale = " << detail::format_number(m.init_scale) << '\n'
     << "clip_norm = " << detail::format_number(m.clip_norm) << '\n'
     << "mlp_init = " << to_string(m.mlp_init) << '\n'
     << "item_lr_scale = " << detail::format_number(m.item_lr_scale) << '\n'
     << "negative_pool = " << to_string(m.negative_pool) << '\n'
     << "k = " << c.k << '\n'
     << "eval_negatives = " << c.eval_negatives << '\n'
     << "seed = " << f.seed << '\n'
     << "reps = " << c.repetitions << '\n'
     << "out = " << c.out << '\n'
     << "label = " << c.label << '\n'
     << "ablate_iei = " << b(f.ablation.disable_iei) << '\n'
     << "ablate_ugc = " << b(f.ablation.disable_ugc) << '\n'
     << "ablate_upie = " << b(f.ablation.disable_upie) << '\n'
     << "workers = " << f.workers << '\n'
     << "eval_stride = " << f.eval_stride << '\n'
     << "checkpoint_every = " << f.checkpoint_every << '\n'
     << "global_average_public_only = " << b(f.global_average_public_only) << '\n'
     << "record_wall_time = " << b(c.record_wall_time) << '\n';
  return os.str();
}

/// Loads and splits the configured dataset (validation item held out).
inline InteractionDataset load_dataset(const ExperimentConfig& c) {
  const auto rows = load_interactions(c.dataset, c.format);
  return leave_one_out_split(rows, /*hold_validation=*/true);
}

struct RepetitionResult {
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  std::vector<RoundRecord> rounds;
  std::size_t best_round = 0;  // index into rounds with the best validation HR
  std::size_t final_round = 0;

  const RoundMetrics& best_test() const { return *rounds[best_round].test; }
  const RoundMetrics& final_test() const { return *rounds[final_round].test; }
  double best_validation_hr() const { return rounds[best_round].validation->hr; }
};

struct Statistic {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::vector<double> values;
};

inline Statistic summarize(std::vector<double> values) {
  Statistic s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  double sum = 0.0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(s.values.size());
  if (s.values.size() > 1) {
    double sq = 0.0;
    for (double v : s.values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(s.values.size() - 1));
  }
  return s;
}

struct LearningRateTrial {
  double learning_rate = 0.0;
  std::optional<double> best_validation_hr;  // absent if training diverged
  std::string error;
};

struct ExperimentResult {
  ExperimentConfig config;
  double learning_rate = 0.0;
  std::vector<LearningRateTrial> lr_trials;
  std::vector<RepetitionResult> repetitions;

  // Test metrics at the best-validation round and at the final round.
  Statistic best_hr() const { return collect([](const RepetitionResult& r) { return r.best_test().hr; }); }
  Statistic best_ndcg() const { return collect([](const RepetitionResult& r) { return r.best_test().ndcg; }); }
  Statistic final_hr() const { return collect([](const RepetitionResult& r) { return r.final_test().hr; }); }
  Statistic final_ndcg() const { return collect([](const RepetitionResult& r) { return r.final_test().ndcg; }); }
  std::optional<Statistic> final_tier_hr(Tier t) const { return tier_stat(t, true); }
  std::optional<Statistic> final_tier_ndcg(Tier t) const { return tier_stat(t, false); }

 private:
  template <typename Fn>
  Statistic collect(Fn fn) const {
    std::vector<double> v;
    for (const auto& r : repetitions) v.push_back(fn(r));
    return summarize(std::move(v));
  }
  std::optional<Statistic> tier_stat(Tier t, bool hr) const {
    std::vector<double> v;
    for (const auto& r : repetitions) {
      const auto& tm = r.final_test().tier(t);
      if (!tm) return std::nullopt;
      v.push_back(hr ? tm->hr : tm->ndcg);
    }
    return summarize(std::move(v));
  }
};

/// One federation run for a repetition seed with validation tracking.
inline RepetitionResult run_repetition(const InteractionDataset& data, const ExperimentConfig& c,
                                       std::uint64_t seed, double learning_rate,
                                       std::ostream* log = nullptr) {
  RepetitionResult rep;
  rep.seed = seed;
  rep.learning_rate = learning_rate;
  FederationConfig fc = c.federation;
  fc.seed = seed;
  fc.model.seed = seed;
  fc.model.learning_rate = learning_rate;
  const auto privacy = assign_privacy(data.num_users(), c.public_ratio, seed);
  const auto negatives = build_eval_negatives(data, c.eval_negatives, seed);
  const bool with_validation = data.validation(0).has_value();
  auto hook = make_eval_hook<RunScalar>(data, negatives, privacy, c.k, with_validation, fc.workers);
  EvalHook<RunScalar> logged = [&](std::size_t round, std::span<const ClientState<RunScalar>> clients) {
    auto ev = hook(round, clients);
    if (log && ev.test) {
      *log << "  round " << round << ": test HR@" << c.k << " " << detail::percent(ev.test->hr, 2)
           << " NDCG@" << c.k << " " << detail::percent(ev.test->ndcg, 2);
      if (ev.validation) *log << " | val HR " << detail::percent(ev.validation->hr, 2);
      *log << '\n' << std::flush;
    }
    return ev;
  };
  rep.rounds = run_federation<RunScalar>(data, privacy, fc, logged);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rep.rounds.size(); ++i) {
    const auto& r = rep.rounds[i];
    if (!r.test) continue;
    rep.final_round = i;
    const double v = r.validation ? r.validation->hr : r.test->hr;
    if (!best || v > (rep.rounds[*best].validation ? rep.rounds[*best].validation->hr
                                                   : rep.rounds[*best].test->hr)) {
      best = i;
    }
  }
  rep.best_round = best.value_or(rep.rounds.size() - 1);
  if (!rep.rounds[rep.best_round].validation) rep.rounds[rep.best_round].validation = rep.rounds[rep.best_round].test;
  return rep;
}

inline std::string rounds_csv(const RepetitionResult& rep, bool record_wall_time) {
  std::ostringstream os;
  os << "round,loss,hr,ndcg,hr_public,ndcg_public,hr_private,ndcg_private,wall_time\n";
  os << std::fixed;
  for (const auto& r : rep.rounds) {
    if (!r.test) continue;
    os << r.round << ',' << std::setprecision(10) << r.mean_train_loss << ',';
    os << detail::percent(r.test->hr, 10) << ',' << detail::percent(r.test->ndcg, 10);
    for (Tier t : {Tier::kPublic, Tier::kPrivate}) {
      const auto& tm = r.test->tier(t);
      if (tm) {
        os << ',' << detail::percent(tm->hr, 10) << ',' << detail::percent(tm->ndcg, 10);
      } else {
        os << ",,";
      }
    }
    os << ',' << std::setprecision(3) << (record_wall_time ? r.wall_time : 0.0) << '\n';
  }
  return os.str();
}

inline std::string summary_csv(const ExperimentResult& res) {
  std::ostringstream os;
  os << "metric,mean,std";
  for (std::size_t r = 0; r < res.repetitions.size(); ++r) os << ",rep" << r;
  os << '\n' << std::setprecision(12);
  const auto row = [&](const std::string& name, const Statistic& s) {
    os << name << ',' << 100.0 * s.mean << ',' << 100.0 * s.std;
    for (double v : s.values) os << ',' << 100.0 * v;
    os << '\n';
  };
  row("best_val_test_hr", res.best_hr());
  row("best_val_test_ndcg", res.best_ndcg());
  row("final_test_hr", res.final_hr());
  row("final_test_ndcg", res.final_ndcg());
  for (Tier t : {Tier::kPublic, Tier::kPrivate}) {
    const std::string suffix(to_string(t));
    if (auto s = res.final_tier_hr(t)) row("final_test_hr_" + suffix, *s);
    if (auto s = res.final_tier_ndcg(t)) row("final_test_ndcg_" + suffix, *s);
  }
  return os.str();
}

inline std::string summary_text(const ExperimentResult& res) {
  std::ostringstream os;
  const auto k = std::to_string(res.config.k);
  const auto line = [&](const std::string& name, const Statistic& s) {
    os << name << " = " << detail::percent(s.mean, 2) << " +- " << detail::percent(s.std, 2) << '\n';
  };
  os << "label = " << res.config.label << '\n';
  os << "repetitions = " << res.repetitions.size() << '\n';
  os << "learning_rate = " << detail::format_number(res.learning_rate) << '\n';
  line("best_val_test_HR@" + k, res.best_hr());
  line("best_val_test_NDCG@" + k, res.best_ndcg());
  line("final_test_HR@" + k, res.final_hr());
  line("final_test_NDCG@" + k, res.final_ndcg());
  return os.str();
}

/// Runs all repetitions (seeds seed+0..seed+reps-1). With several learning
/// rates, repetition 0 is run for each and the rate with the best validation
/// HR is kept for the remaining repetitions. Writes per-round CSVs, the
/// summaries and the resolved config under out/label/.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const InteractionDataset& data,
                                       std::ostream* log = nullptr) {
  c.validate();
  ExperimentResult res;
  res.config = c;
  const std::uint64_t base = c.federation.seed;
  std::optional<RepetitionResult> first;
  if (c.learning_rates.size() == 1) {
    res.learning_rate = c.learning_rates.front();
  } else {
    double best = -1.0;
    for (double lr : c.learning_rates) {
      if (log) *log << "[" << c.label << "] lr " << detail::format_number(lr) << " rep 0\n";
      std::optional<RepetitionResult> trial;
      try {
        trial = run_repetition(data, c, base, lr, log);
      } catch (const TrainingError& e) {
        // A diverging rate drops out of the grid instead of ending the run.
        if (log) *log << "[" << c.label << "] lr " << detail::format_number(lr) << " diverged: " << e.what() << '\n';
        res.lr_trials.push_back({lr, std::nullopt, e.what()});
        continue;
      }
      auto& rep = *trial;
      res.lr_trials.push_back({lr, rep.best_validation_hr(), {}});
      if (rep.best_validation_hr() > best) {
        best = rep.best_validation_hr();
        res.learning_rate = lr;
        first = std::move(rep);
      }
    }
    if (!first) throw TrainingError("every learning rate in the grid diverged");
  }
  for (std::size_t r = 0; r < c.repetitions; ++r) {
    if (r == 0 && first) {
      res.repetitions.push_back(std::move(*first));
      continue;
    }
    if (log) {
      *log << "[" << c.label << "] lr " << detail::format_number(res.learning_rate) << " rep " << r << '\n';
    }
    res.repetitions.push_back(run_repetition(data, c, base + r, res.learning_rate, log));
  }

  const std::filesystem::path dir = std::filesystem::path(c.out) / c.label;
  for (std::size_t r = 0; r < res.repetitions.size(); ++r) {
    detail::write_file_atomic(dir / ("rounds_rep" + std::to_string(r) + ".csv"),
                              rounds_csv(res.repetitions[r], c.record_wall_time));
  }
  detail::write_file_atomic(dir / "summary.csv", summary_csv(res));
  detail::write_file_atomic(dir / "summary.txt", summary_text(res));
  detail::write_file_atomic(dir / "config.resolved", format_config(c));
  if (!res.lr_trials.empty()) {
    std::ostringstream os;
    os << "lr,best_val_hr,status\n" << std::setprecision(12);
    for (const auto& t : res.lr_trials) {
      os << detail::format_number(t.learning_rate) << ',';
      if (t.best_validation_hr) os << 100.0 * *t.best_validation_hr << ",ok\n";
      else os << ",diverged\n";
    }
    detail::write_file_atomic(dir / "lr_selection.csv", os.str());
  }
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c, std::ostream* log = nullptr) {
  c.validate();
  const auto data = load_dataset(c);
  if (log && data.report().dropped_users > 0) {
    *log << "warning: dropped " << data.report().dropped_users << " users with too few interactions ("
         << data.report().dropped_interactions << " interactions)\n";
  }
  return run_experiment(c, data, log);
}

enum class SweepAxis { kAlpha, kPublicRatio, kDelta, kLayers, kEmbedDim, kLearningRate };

inline SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "alpha") return SweepAxis::kAlpha;
  if (name == "public_ratio" || name == "public-ratio") return SweepAxis::kPublicRatio;
  if (name == "delta" || name == "ldp_delta") return SweepAxis::kDelta;
  if (name == "layers") return SweepAxis::kLayers;
  if (name == "embed_dim" || name == "embed-dim") return SweepAxis::kEmbedDim;
  if (name == "learning_rate" || name == "lr") return SweepAxis::kLearningRate;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

inline std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kPublicRatio: return "public_ratio";
    case SweepAxis::kDelta: return "delta";
    case SweepAxis::kLayers: return "layers";
    case SweepAxis::kEmbedDim: return "embed_dim";
    case SweepAxis::kLearningRate: return "learning_rate";
  }
  return "alpha";
}

inline void apply_axis(ExperimentConfig& c, SweepAxis axis, double value) {
  const auto as_count = [&](std::string_view what) {
    if (value < 1 || value != std::floor(value)) {
      throw ConfigError(std::string(what) + " values must be positive integers");
    }
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
    case SweepAxis::kAlpha: c.federation.alpha = value; break;
    case SweepAxis::kPublicRatio: c.public_ratio = value; break;
    case SweepAxis::kDelta: c.federation.ldp_scale = value; break;
    case SweepAxis::kLayers: c.federation.gcn_layers = as_count("layers"); break;
    case SweepAxis::kEmbedDim: c.federation.model.embed_dim = as_count("embed_dim"); break;
    case SweepAxis::kLearningRate: c.learning_rates = {value}; break;
  }
}

struct SweepDimension {
  SweepAxis axis;
  std::vector<double> values;
};

struct SweepCell {
  std::vector<double> coordinates;
  std::optional<ExperimentResult> result;
  std::string error;
};

namespace detail {

inline std::string result_columns_header() {
  return "status,hr_mean,hr_std,ndcg_mean,ndcg_std,final_hr_mean,final_hr_std,final_ndcg_mean,"
         "final_ndcg_std,hr_public_mean,hr_private_mean,lr,error";
}

inline std::string result_columns(const std::optional<ExperimentResult>& res, const std::string& error) {
  std::ostringstream os;
  os << std::setprecision(12);
  if (!res) {
    std::string msg = error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << "failed,,,,,,,,,,,," << msg;
    return os.str();
  }
  const auto pct = [](double v) { return 100.0 * v; };
  const auto b = res->best_hr(), bn = res->best_ndcg(), f = res->final_hr(), fn = res->final_ndcg();
  os << "ok," << pct(b.mean) << ',' << pct(b.std) << ',' << pct(bn.mean) << ',' << pct(bn.std) << ','
     << pct(f.mean) << ',' << pct(f.std) << ',' << pct(fn.mean) << ',' << pct(fn.std) << ',';
  if (auto s = res->final_tier_hr(Tier::kPublic)) os << pct(s->mean);
  os << ',';
  if (auto s = res->final_tier_hr(Tier::kPrivate)) os << pct(s->mean);
  os << ',' << format_number(res->learning_rate) << ',';
  return os.str();
}

}  // namespace detail

/// Runs the cross product of one or two axes and writes out/label/sweep.csv.
/// A failing cell is recorded and the sweep continues.
inline std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::vector<SweepDimension>& dims,
                                        const InteractionDataset& data, std::ostream* log = nullptr) {
  if (dims.empty() || dims.size() > 2) throw ConfigError("a sweep takes one or two axes");
  for (const auto& d : dims) {
    if (d.values.empty()) throw ConfigError("sweep axis '" + std::string(to_string(d.axis)) + "' has no values");
  }
  std::vector<std::vector<double>> grid;
  for (double a : dims[0].values) {
    if (dims.size() == 1) {
      grid.push_back({a});
    } else {
      for (double b : dims[1].values) grid.push_back({a, b});
    }
  }
  std::vector<SweepCell> cells;
  for (const auto& coords : grid) {
    SweepCell cell;
    cell.coordinates = coords;
    ExperimentConfig c = base;
    std::string label = base.label + "/sweep";
    for (std::size_t i = 0; i < coords.size(); ++i) {
      label += "_" + std::string(to_string(dims[i].axis)) + "=" + detail::format_number(coords[i]);
    }
    c.label = label;
    try {
      for (std::size_t i = 0; i < coords.size(); ++i) apply_axis(c, dims[i].axis, coords[i]);
      if (log) *log << "[sweep] " << label << '\n';
      cell.result = run_experiment(c, data, log);
    } catch (const std::exception& e) {
      cell.error = e.what();
      if (log) *log << "[sweep] " << label << " failed: " << e.what() << '\n';
    }
    cells.push_back(std::move(cell));
  }
  std::ostringstream os;
  for (const auto& d : dims) os << to_string(d.axis) << ',';
  os << detail::result_columns_header() << '\n';
  for (const auto& cell : cells) {
    for (double v : cell.coordinates) os << detail::format_number(v) << ',';
    os << detail::result_columns(cell.result, cell.error) << '\n';
  }
  detail::write_file_atomic(std::filesystem::path(base.out) / base.label / "sweep.csv", os.str());
  return cells;
}

struct AblationRow {
  std::string variant;
  Ablation ablation;
  std::optional<ExperimentResult> result;
  std::string error;
};

inline std::vector<std::pair<std::string, Ablation>> ablation_variants() {
  return {{"full", {}},
          {"w/o IEI", {true, false, false}},
          {"w/o UGC", {false, true, false}},
          {"w/o U-PIE", {false, false, true}}};
}

/// Full model plus each single-component ablation; writes out/label/ablation.csv.
inline std::vector<AblationRow> run_ablation_suite(const ExperimentConfig& base, const InteractionDataset& data,
                                                   std::ostream* log = nullptr) {
  std::vector<AblationRow> rows;
  for (const auto& [name, ablation] : ablation_variants()) {
    AblationRow row{name, ablation, std::nullopt, {}};
    ExperimentConfig c = base;
    c.federation.ablation = ablation;
    std::string slug = name;
    std::replace(slug.begin(), slug.end(), '/', '-');
    std::replace(slug.begin(), slug.end(), ' ', '_');
    c.label = base.label + "/ablation_" + slug;
    try {
      if (log) *log << "[ablation] " << name << '\n';
      row.result = run_experiment(c, data, log);
    } catch (const std::exception& e) {
      row.error = e.what();
      if (log) *log << "[ablation] " << name << " failed: " << e.what() << '\n';
    }
    rows.push_back(std::move(row));
  }
  std::ostringstream os;
  os << "variant," << detail::result_columns_header() << '\n';
  for (const auto& row : rows) os << row.variant << ',' << detail::result_columns(row.result, row.error) << '\n';
  detail::write_file_atomic(std::filesystem::path(base.out) / base.label / "ablation.csv", os.str());
  return rows;
}

}  // namespace fedgraph

#endif  // FEDGRAPH_EXPERIMENT_HPP_
