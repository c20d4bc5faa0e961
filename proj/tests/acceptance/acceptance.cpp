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
// Acceptance runner: checks the nine release criteria and prints one
// PASS/FAIL line for each. Exit status is 0 only if every selected criterion
// passes. Long experiment logs go to <out>/acceptance.log.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedgraph.hpp"
#include "oracles.hpp"

namespace fedgraph {
namespace {

using namespace oracles;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string pct(double fraction) { return detail::percent(fraction, 2); }

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Runner {
 public:
  Runner(std::string source_dir, std::string ml100k, std::string out, std::ostream& log)
      : source_dir_(std::move(source_dir)), ml100k_(std::move(ml100k)), out_(std::move(out)), log_(log) {}

  // ---- experiment criteria

  Outcome headline_accuracy() {
    const auto& res = headline();
    const auto hr = res.best_hr(), ndcg = res.best_ndcg();
    std::ostringstream os;
    os << "MovieLens-100K, " << res.repetitions.size() << " reps, lr " << detail::format_number(res.learning_rate)
       << ": HR@10 " << pct(hr.mean) << " +- " << pct(hr.std) << ", NDCG@10 " << pct(ndcg.mean) << " +- "
       << pct(ndcg.std) << " (need >= 70.00 / 41.00)";
    return {hr.mean >= 0.70 && ndcg.mean >= 0.41, os.str()};
  }

  Outcome ablation_ordering() {
    const double full = headline().best_hr().mean;
    std::ostringstream os;
    os << "full " << pct(full);
    bool pass = true;
    for (const auto& [name, ablation] : ablation_variants()) {
      if (name == "full") continue;
      ExperimentConfig c = recipe("ablation_" + slug(name));
      c.learning_rates = {headline().learning_rate};
      c.federation.ablation = ablation;
      const double hr = run(c).best_hr().mean;
      os << ", " << name << " " << pct(hr);
      pass = pass && full > hr;
    }
    os << " (full must exceed each)";
    return {pass, os.str()};
  }

  Outcome ldp_degradation() {
    const double clean = headline().best_hr().mean;
    ExperimentConfig c = recipe("ldp_0.5");
    c.learning_rates = {headline().learning_rate};
    c.federation.ldp_scale = 0.5;
    const double noisy = run(c).best_hr().mean;
    std::ostringstream os;
    os << "HR@10 delta=0 " << pct(clean) << ", delta=0.5 " << pct(noisy) << ", drop " << pct(clean - noisy)
       << " (need 0 < drop <= 4.00)";
    return {noisy < clean && clean - noisy <= 0.04, os.str()};
  }

  Outcome public_ratio_tendency() {
    SyntheticSpec spec;
    spec.num_users = 300;
    spec.num_items = 500;
    spec.interactions_per_user = 20;
    spec.clusters = 10;
    spec.seed = 11;
    const auto path = std::filesystem::path(out_) / "synthetic-300.tsv";
    std::filesystem::create_directories(out_);
    {
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      write_synthetic(spec, f);
    }
    std::map<double, double> hr;
    std::ostringstream os;
    for (double ratio : {0.1, 0.5, 0.9}) {
      ExperimentConfig c = recipe("ratio_" + detail::format_number(ratio));
      c.dataset = path.string();
      c.public_ratio = ratio;
      hr[ratio] = run(c).best_hr().mean;
      os << (ratio == 0.1 ? "" : ", ") << "ratio " << ratio << " HR@10 " << pct(hr[ratio]);
    }
    os << " (need ratio 0.9 >= ratio 0.1)";
    return {hr[0.9] >= hr[0.1], os.str()};
  }

  Outcome determinism() {
    ExperimentConfig a = recipe("determinism_w1");
    a.learning_rates = {headline().learning_rate};
    a.repetitions = 1;
    ExperimentConfig b = a;
    b.label = "determinism_w4";
    b.federation.workers = 4;
    run(a);
    run(b);
    const auto dir = std::filesystem::path(out_);
    bool pass = true;
    std::ostringstream os;
    for (const char* f : {"rounds_rep0.csv", "summary.csv"}) {
      const bool same = read_all(dir / a.label / f) == read_all(dir / b.label / f);
      os << f << (same ? " identical" : " DIFFERS") << "; ";
      pass = pass && same;
    }
    os << "workers 1 vs 4";
    return {pass, os.str()};
  }

  // ---- oracle criteria

  static Outcome gradient_oracle() {
    std::mt19937_64 gen(5);
    double worst = 0.0;
    int checked = 0;
    while (checked < 100) {
      auto inst = random_instance(gen);
      if (min_hidden_margin(inst.state, inst.examples) < 1e-3) continue;
      worst = std::max(worst, worst_gradient_error(inst));
      ++checked;
    }
    std::ostringstream os;
    os << checked << " random instances, worst relative error " << worst << " (need <= 1e-4)";
    return {worst <= 1e-4, os.str()};
  }

  static Outcome graph_oracle() {
    std::mt19937_64 gen(6);
    std::size_t adjacency_mismatches = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + gen() % 8;
      const std::size_t items = 1 + gen() % 6;
      const auto m = random_matrix(gen, n, items, 0.7);
      const auto raw = build_user_graph(m);
      const auto a = oracle_adjacency(m);
      for (UserIndex u = 0; u < n; ++u) {
        for (UserIndex v = 0; v < n; ++v) adjacency_mismatches += raw.weight(u, v) != a[u][v];
      }
      const auto q = random_stack(gen, n, items, 1 + gen() % 3);
      const std::size_t layers = 1 + gen() % 3;
      worst = std::max(worst, max_abs_diff(propagate(normalize(raw), q, layers),
                                            oracle_propagate(oracle_normalized(a), q, layers)));
    }
    std::ostringstream os;
    os << "1000 instances: " << adjacency_mismatches << " adjacency mismatches, worst propagation error " << worst
       << " (need 0 and <= 1e-10)";
    return {adjacency_mismatches == 0 && worst <= 1e-10, os.str()};
  }

  static Outcome blend_boundaries() {
    std::mt19937_64 gen(7);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 1 + gen() % 8;
      const std::size_t items = 1 + gen() % 6;
      const std::size_t dim = 1 + gen() % 4;
      std::vector<Tier> tiers(n);
      for (auto& t : tiers) t = gen() % 2 ? Tier::kPublic : Tier::kPrivate;
      ServerState<double> server;
      server.propagated = random_stack(gen, n, items, dim);
      server.global = global_embedding(server.propagated);
      const auto zero = *distribute(server, tiers, 0.0, Ablation{});
      const auto one = *distribute(server, tiers, 1.0, Ablation{});
      for (UserIndex u = 0; u < n; ++u) {
        const auto qg = server.global.values();
        const auto s = server.propagated.block(u);
        for (std::size_t k = 0; k < qg.size(); ++k) {
          worst = std::max(worst, std::abs(zero.block(u)[k] - qg[k]));
          const double want = tiers[u] == Tier::kPublic ? s[k] : qg[k];
          worst = std::max(worst, std::abs(one.block(u)[k] - want));
        }
      }
      // Identity graph: no public co-interactions.
      std::vector<std::vector<ItemIndex>> rows(n);
      const auto identity = normalize(build_user_graph(make_matrix(items, std::vector<Tier>(n, Tier::kPrivate), rows)));
      ServerState<double> fresh;
      fresh.uploads = random_stack(gen, n, items, dim);
      server_update(fresh, identity, 1 + gen() % 3, Ablation{}, {}, 1);
      worst = std::max(worst, max_abs_diff(fresh.propagated, fresh.uploads));
    }
    std::ostringstream os;
    os << "500 random server states, worst deviation " << worst << " (need <= 1e-12)";
    return {worst <= 1e-12, os.str()};
  }

  static Outcome evaluation_oracle() {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> normal;
    std::size_t mismatches = 0;
    std::set<std::size_t> ranks;
    for (int trial = 0; trial < 10000; ++trial) {
      const std::size_t items = 120;
      std::vector<double> logits(items);
      const bool coarse = trial % 4 == 0;
      for (auto& v : logits) v = coarse ? static_cast<double>(gen() % 4) : normal(gen);
      std::vector<ItemIndex> perm(items);
      for (std::size_t i = 0; i < items; ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), gen);
      const ItemIndex target = perm[0];
      const std::vector<ItemIndex> negatives(perm.begin() + 1, perm.begin() + 100);
      if (!coarse) {
        std::vector<double> neg;
        for (ItemIndex i : negatives) neg.push_back(logits[i]);
        std::sort(neg.begin(), neg.end(), std::greater<>());
        const std::size_t above = trial % 100;
        const double hi = above == 0 ? neg[0] + 1.0 : neg[above - 1];
        const double lo = above == 99 ? neg[98] - 1.0 : neg[above];
        logits[target] = 0.5 * (hi + lo);
      }
      const std::size_t want = oracle_rank(logits, target, negatives);
      const auto got = evaluate_user(scoring_client(logits), target, negatives, 10);
      const double want_ndcg = want <= 10 ? 1.0 / std::log2(static_cast<double>(want) + 1.0) : 0.0;
      mismatches += got.rank != want || got.hit != (want <= 10 ? 1 : 0) || std::abs(got.ndcg - want_ndcg) > 1e-12;
      ranks.insert(got.rank);
    }
    std::vector<double> logits(100, 0.0);
    for (ItemIndex i = 1; i <= 4; ++i) logits[i] = 1.0;
    logits[0] = 0.5;
    std::vector<ItemIndex> negatives;
    for (ItemIndex i = 1; i < 100; ++i) negatives.push_back(i);
    const auto fifth = evaluate_user(scoring_client(logits), 0, negatives, 10);
    const double err = std::abs(fifth.ndcg - 1.0 / std::log2(6.0));
    std::ostringstream os;
    os << "10000 score vectors: " << mismatches << " mismatches, " << ranks.size()
       << " distinct ranks; rank-5 NDCG error " << err << " (need 0, 100 and <= 1e-12)";
    return {mismatches == 0 && ranks.size() == 100 && fifth.rank == 5 && err <= 1e-12, os.str()};
  }

 private:
  static std::string slug(std::string s) {
    for (char& ch : s) {
      if (ch == '/' || ch == ' ') ch = '_';
    }
    return s;
  }

  ExperimentConfig recipe(const std::string& label) const {
    ExperimentConfig c;
    apply_config_file(c, source_dir_ + "/configs/ml100k.cfg");
    c.dataset = ml100k_;
    c.out = out_;
    c.label = label;
    c.record_wall_time = false;
    return c;
  }

  ExperimentResult run(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    log_ << "== " << c.label << '\n';
    auto res = run_experiment(c, &log_);
    log_ << "== " << c.label << " done in "
         << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n"
         << summary_text(res) << std::flush;
    return res;
  }

  const ExperimentResult& headline() {
    if (!headline_) headline_ = run(recipe("headline"));
    return *headline_;
  }

  std::string source_dir_;
  std::string ml100k_;
  std::string out_;
  std::ostream& log_;
  std::optional<ExperimentResult> headline_;
};

}  // namespace
}  // namespace fedgraph

int main(int argc, char** argv) {
  CLI::App app{"Release acceptance criteria"};
  std::string source_dir = FEDGRAPH_SOURCE_DIR;
  std::string ml100k = std::string(FEDGRAPH_SOURCE_DIR) + "/data/ml-100k/u.data";
  std::string out = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--source-dir", source_dir, "Repository root (for configs/)");
  app.add_option("--ml100k", ml100k, "Path to MovieLens-100K u.data");
  app.add_option("--out", out, "Directory for experiment outputs and the log");
  app.add_option("--only", only, "Criteria to run (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out);
  std::ofstream log(std::filesystem::path(out) / "acceptance.log", std::ios::app);
  fedgraph::Runner runner(source_dir, ml100k, out, log);

  using Check = std::function<fedgraph::Outcome()>;
  const std::vector<std::pair<std::string, Check>> criteria = {
      {"headline accuracy", [&] { return runner.headline_accuracy(); }},
      {"ablation ordering", [&] { return runner.ablation_ordering(); }},
      {"LDP degradation", [&] { return runner.ldp_degradation(); }},
      {"public-ratio tendency", [&] { return runner.public_ratio_tendency(); }},
      {"gradient oracle", [] { return fedgraph::Runner::gradient_oracle(); }},
      {"graph oracle", [] { return fedgraph::Runner::graph_oracle(); }},
      {"blend boundaries", [] { return fedgraph::Runner::blend_boundaries(); }},
      {"evaluation oracle", [] { return fedgraph::Runner::evaluation_oracle(); }},
      {"determinism", [&] { return runner.determinism(); }},
  };
  // Oracle checks first so their verdicts appear before the long runs.
  const std::vector<int> order = {5, 6, 7, 8, 1, 2, 3, 4, 9};
  const std::set<int> selected(only.begin(), only.end());
  bool all = true;
  std::ofstream report(std::filesystem::path(out) / "acceptance_report.txt", std::ios::trunc);
  for (int id : order) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto& [name, check] = criteria[static_cast<std::size_t>(id - 1)];
    fedgraph::Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::ostringstream line;
    line << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << '\n';
    std::cout << line.str() << std::flush;
    report << line.str() << std::flush;
  }
  return all ? 0 : 1;
}
