// Command-line harness: dataset ingestion, k-hop sampling with a reusable
// cache, seeded training runs and the ablation experiments, all emitting
// replayable CSV/JSON artifacts.
//
// Exit codes: 0 success, 2 configuration error, 3 dataset error,
// 4 numerical divergence.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hoga/harness.hpp"

namespace {

struct CliOptions {
  std::string dataset;
  std::string model = "hoga-gat";
  std::string sampler = "heuristic-walk";
  std::vector<std::string> samplers;  // compare-samplers only
  int k_max = -1;                     // -1: default per model (3 hoga, 1 single-hop)
  int layers = 2;
  int heads = 8;
  int heads_rest = 1;
  int hidden = 64;
  double dropout = 0.6;
  std::vector<std::uint64_t> seeds;
  std::vector<int> k_values;
  std::vector<int> layer_values;
  double gamma = 0.9;
  double jump_prob = 0.05;
  std::int64_t edge_cap = 90000;
  int history_size = 16;
  double lr = 0.005;
  double weight_decay = 5e-4;
  int epochs = 500;
  int patience = 100;
  std::string split;  // "", "public", "random"
  std::uint64_t split_seed = 0;
  std::string out = "runs";
  std::string cache_dir = "cache";
  int workers = 1;
  double grand_time = 4.0;
  double grand_step = 0.5;
  bool grand_literal = false;
  std::string baseline_csv;
  bool save_checkpoints = false;
};

void add_common_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--dataset", o.dataset, "dataset directory")->required();
  cmd->add_option("--model", o.model, "gat | hoga-gat | grand | hoga-grand");
  cmd->add_option("--sampler", o.sampler, "k-hop sampling method");
  cmd->add_option("--k-max", o.k_max, "maximum hop order K");
  cmd->add_option("--layers", o.layers, "message-passing layers");
  cmd->add_option("--heads", o.heads, "attention heads in the first layer");
  cmd->add_option("--heads-rest", o.heads_rest, "heads in subsequent layers");
  cmd->add_option("--hidden", o.hidden, "hidden width");
  cmd->add_option("--dropout", o.dropout, "dropout probability");
  cmd->add_option("--seeds", o.seeds, "run seeds")->delimiter(',');
  cmd->add_option("--gamma", o.gamma, "walk decay rate");
  cmd->add_option("--jump-prob", o.jump_prob, "walk random-jump probability");
  cmd->add_option("--edge-cap", o.edge_cap, "max sampled pairs per set");
  cmd->add_option("--history-size", o.history_size, "walk history buffer length");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--weight-decay", o.weight_decay, "decoupled weight decay");
  cmd->add_option("--epochs", o.epochs, "max training epochs");
  cmd->add_option("--patience", o.patience, "early-stopping patience");
  cmd->add_option("--split", o.split, "public | random")
      ->check(CLI::IsMember({"public", "random"}));
  cmd->add_option("--split-seed", o.split_seed, "seed for random splits");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--cache-dir", o.cache_dir, "sample cache directory");
  cmd->add_option("--workers", o.workers, "parallel seed workers");
  cmd->add_option("--grand-time", o.grand_time, "GRAND integration time T");
  cmd->add_option("--grand-step", o.grand_step, "GRAND Euler step tau");
  cmd->add_flag("--grand-literal", o.grand_literal,
                "integrate dx/dt = A x verbatim (no diffusive normalization)");
  cmd->add_option("--baseline-csv", o.baseline_csv,
                  "runs CSV to compare against (Wilcoxon)");
  cmd->add_flag("--save-checkpoints", o.save_checkpoints,
                "write a parameter checkpoint per run");
}

hoga::ExperimentSpec build_spec(const CliOptions& o, bool sample_cmd) {
  hoga::ExperimentSpec spec;
  spec.dataset_dir = o.dataset;
  spec.model = hoga::parse_model_kind(o.model);
  spec.sampler.method = hoga::parse_sample_method(o.sampler);
  spec.sampler.gamma = o.gamma;
  spec.sampler.jump_prob = o.jump_prob;
  spec.sampler.edge_cap = o.edge_cap;
  spec.sampler.history_size = o.history_size;
  spec.hoga.k_max = o.k_max >= 0
                        ? o.k_max
                        : (hoga::is_single_hop(spec.model) ? 1 : 3);
  spec.hoga.layers = o.layers;
  spec.hoga.heads_first = o.heads;
  spec.hoga.heads_rest = o.heads_rest;
  spec.hoga.hidden = o.hidden;
  spec.hoga.dropout = o.dropout;
  spec.grand.time = o.grand_time;
  spec.grand.step = o.grand_step;
  spec.grand.literal_flow = o.grand_literal;
  spec.trainc.lr = o.lr;
  spec.trainc.weight_decay = o.weight_decay;
  spec.trainc.max_epochs = o.epochs;
  spec.trainc.patience = o.patience;
  spec.seeds = o.seeds;
  if (spec.seeds.empty() && sample_cmd) spec.seeds = {0};
  if (o.split == "public") spec.split.mode = hoga::SplitMode::public_split;
  if (o.split == "random") spec.split.mode = hoga::SplitMode::random_split;
  spec.split.seed = o.split_seed;
  spec.out_dir = o.out;
  spec.cache_dir = o.cache_dir;
  spec.workers = o.workers;
  spec.baseline_csv = o.baseline_csv;
  spec.save_checkpoints = o.save_checkpoints;
  return spec;
}

std::vector<hoga::SampleMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<hoga::SampleMethod> out;
  for (const auto& n : names) out.push_back(hoga::parse_sample_method(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"higher-order graph attention toolkit"};
  app.require_subcommand(1);
  CliOptions o;

  auto* sample = app.add_subcommand("sample", "materialize the k-hop sample cache");
  auto* train = app.add_subcommand("train", "train over seeds, emit CSV + JSON");
  auto* ablate_k = app.add_subcommand("ablate-k", "accuracy as a function of K");
  auto* ablate_depth =
      app.add_subcommand("ablate-depth", "accuracy and Dirichlet energy vs depth");
  auto* compare =
      app.add_subcommand("compare-samplers", "compare sampling methods, shared seeds");
  auto* stats = app.add_subcommand("khop-stats", "print |E_k| and branching factor");

  for (auto* cmd : {sample, train, ablate_k, ablate_depth, compare, stats})
    add_common_options(cmd, o);
  ablate_k->add_option("--k-values", o.k_values, "K values to sweep")
      ->delimiter(',')
      ->required();
  ablate_depth->add_option("--layer-values", o.layer_values, "layer counts to sweep")
      ->delimiter(',')
      ->required();
  compare->add_option("--samplers", o.samplers, "methods to compare")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (sample->parsed()) return hoga::cmd_sample(build_spec(o, true));
    hoga::ExperimentSpec spec = build_spec(o, false);
    if (train->parsed()) return hoga::cmd_train(spec);
    if (ablate_k->parsed()) return hoga::cmd_ablate_k(spec, o.k_values);
    if (ablate_depth->parsed()) return hoga::cmd_ablate_depth(spec, o.layer_values);
    if (compare->parsed()) {
      auto methods = o.samplers.empty()
                         ? std::vector<hoga::SampleMethod>{
                               hoga::SampleMethod::heuristic_walk,
                               hoga::SampleMethod::random_sample,
                               hoga::SampleMethod::random_walk,
                               hoga::SampleMethod::breadth_first,
                               hoga::SampleMethod::depth_first}
                         : parse_methods(o.samplers);
      return hoga::cmd_compare_samplers(spec, methods);
    }
    if (stats->parsed()) return hoga::cmd_khop_stats(spec);
  } catch (const hoga::config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const hoga::dataset_error& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return 3;
  } catch (const hoga::numeric_error& e) {
    std::cerr << "numerical divergence: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
