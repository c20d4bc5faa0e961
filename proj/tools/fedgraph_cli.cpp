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
// Command-line front-end: run, sweep, ablate, gen-synth, inspect-graph.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fedgraph.hpp"

namespace {

using fedgraph::ConfigError;
using fedgraph::ExperimentConfig;

// Flag name -> config key for every flag that maps onto the flat config.
const std::vector<std::pair<std::string, std::string>> kValueFlags = {
    {"--dataset", "dataset"},       {"--format", "format"},         {"--public-ratio", "public_ratio"},
    {"--alpha", "alpha"},           {"--ldp-delta", "ldp_delta"},   {"--layers", "layers"},
    {"--embed-dim", "embed_dim"},   {"--lr", "lr"},                 {"--rounds", "rounds"},
    {"--local-epochs", "local_epochs"}, {"--neg-ratio", "neg_ratio"}, {"--batch-size", "batch_size"},
    {"--k", "k"},                   {"--eval-negatives", "eval_negatives"}, {"--seed", "seed"},
    {"--reps", "reps"},             {"--out", "out"},               {"--workers", "workers"},
    {"--label", "label"},           {"--eval-stride", "eval_stride"},
    {"--checkpoint-every", "checkpoint_every"}};

const std::vector<std::pair<std::string, std::string>> kSwitchFlags = {
    {"--ablate-iei", "ablate_iei"}, {"--ablate-ugc", "ablate_ugc"}, {"--ablate-upie", "ablate_upie"}};

struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
};

void add_config_options(CLI::App& app, ConfigOptions& opts) {
  app.add_option("--config", opts.config_file, "Flat key = value config file; flags override it");
  for (const auto& [flag, key] : kValueFlags) {
    app.add_option(flag, opts.values[key], key);
  }
  for (const auto& [flag, key] : kSwitchFlags) {
    app.add_flag(flag, opts.switches[key], key);
  }
}

// Precedence: defaults < FEDREC_SEED < config file < flags.
ExperimentConfig resolve_config(const CLI::App& app, const ConfigOptions& opts) {
  ExperimentConfig c;
  if (const char* env = std::getenv("FEDREC_SEED"); env && *env) {
    fedgraph::set_config_value(c, "seed", env);
  }
  if (!opts.config_file.empty()) fedgraph::apply_config_file(c, opts.config_file);
  for (const auto& [flag, key] : kValueFlags) {
    if (app.count(flag) > 0) fedgraph::set_config_value(c, key, opts.values.at(key));
  }
  for (const auto& [flag, key] : kSwitchFlags) {
    if (app.count(flag) > 0) fedgraph::set_config_value(c, key, "true");
  }
  c.validate();
  return c;
}

std::vector<double> parse_values(const std::string& flag, const std::string& text) {
  std::vector<double> out;
  for (const auto& v : fedgraph::detail::split_list(text)) out.push_back(fedgraph::detail::to_double(flag, v));
  if (out.empty()) throw ConfigError(flag + " needs at least one value");
  return out;
}

void print_result(const fedgraph::ExperimentResult& res) {
  std::cout << fedgraph::summary_text(res);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated recommendation with a server-side user graph"};
  app.require_subcommand(1);

  ConfigOptions run_opts, sweep_opts, ablate_opts;
  auto* run = app.add_subcommand("run", "Run repetitions of one configuration");
  add_config_options(*run, run_opts);

  auto* sweep = app.add_subcommand("sweep", "Sweep one axis or a two-axis grid");
  add_config_options(*sweep, sweep_opts);
  std::string axis, values, axis2, values2;
  sweep->add_option("--axis", axis, "alpha, public_ratio, delta, layers, embed_dim or learning_rate")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--axis2", axis2, "Optional second axis");
  sweep->add_option("--values2", values2, "Values for the second axis");

  auto* ablate = app.add_subcommand("ablate", "Full model and each single-component ablation");
  add_config_options(*ablate, ablate_opts);

  fedgraph::SyntheticSpec synth;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "Write a clustered synthetic dataset");
  gen->add_option("--users", synth.num_users);
  gen->add_option("--items", synth.num_items);
  gen->add_option("--per-user", synth.interactions_per_user);
  gen->add_option("--clusters", synth.clusters);
  gen->add_option("--in-cluster", synth.in_cluster, "Probability of drawing from the cluster pool");
  gen->add_option("--seed", synth.seed);
  gen->add_option("--out", synth_out, "Output TSV path")->required();

  std::string g_dataset, g_format = "tsv", g_out;
  double g_ratio = 1.0;
  std::uint64_t g_seed = 0;
  auto* inspect = app.add_subcommand("inspect-graph", "Dump the server's user graph as sparse triplets");
  inspect->add_option("--dataset", g_dataset)->required();
  inspect->add_option("--format", g_format);
  inspect->add_option("--public-ratio", g_ratio);
  inspect->add_option("--seed", g_seed);
  inspect->add_option("--out", g_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const auto c = resolve_config(*run, run_opts);
      print_result(fedgraph::run_experiment(c, &std::cerr));
    } else if (*sweep) {
      const auto c = resolve_config(*sweep, sweep_opts);
      std::vector<fedgraph::SweepDimension> dims;
      dims.push_back({fedgraph::parse_sweep_axis(axis), parse_values("--values", values)});
      if (!axis2.empty()) dims.push_back({fedgraph::parse_sweep_axis(axis2), parse_values("--values2", values2)});
      else if (!values2.empty()) throw ConfigError("--values2 given without --axis2");
      const auto data = fedgraph::load_dataset(c);
      const auto cells = fedgraph::run_sweep(c, dims, data, &std::cerr);
      std::size_t failed = 0;
      for (const auto& cell : cells) failed += cell.result ? 0 : 1;
      std::cout << "sweep: " << cells.size() - failed << " of " << cells.size() << " cells completed\n";
      return failed == 0 ? 0 : 2;
    } else if (*ablate) {
      const auto c = resolve_config(*ablate, ablate_opts);
      const auto data = fedgraph::load_dataset(c);
      const auto rows = fedgraph::run_ablation_suite(c, data, &std::cerr);
      bool failed = false;
      for (const auto& row : rows) {
        if (row.result) {
          const auto hr = row.result->best_hr();
          std::cout << row.variant << ": HR@" << c.k << " " << fedgraph::detail::percent(hr.mean, 2) << " +- "
                    << fedgraph::detail::percent(hr.std, 2) << '\n';
        } else {
          std::cout << row.variant << ": failed: " << row.error << '\n';
          failed = true;
        }
      }
      return failed ? 2 : 0;
    } else if (*gen) {
      synth.validate();
      const std::filesystem::path path(synth_out);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw fedgraph::DataError("cannot write '" + synth_out + "'");
      fedgraph::write_synthetic(synth, out);
    } else if (*inspect) {
      const auto rows = fedgraph::load_interactions(g_dataset, fedgraph::parse_input_format(g_format));
      const auto data = fedgraph::leave_one_out_split(rows, true);
      const auto privacy = fedgraph::assign_privacy(data.num_users(), g_ratio, g_seed);
      const auto graph = fedgraph::normalize(fedgraph::build_user_graph(data, privacy));
      std::filesystem::create_directories(g_out);
      const std::filesystem::path dir(g_out);
      std::ofstream adjacency(dir / "adjacency.tsv"), normalized(dir / "normalized.tsv");
      if (!adjacency || !normalized) throw fedgraph::DataError("cannot write into '" + g_out + "'");
      fedgraph::write_triplets(graph, adjacency, normalized);
      std::cout << "users " << graph.num_users << ", public " << privacy.num_public() << ", nonzeros "
                << graph.nnz() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
