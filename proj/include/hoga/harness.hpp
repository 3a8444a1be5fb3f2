// Experiment drivers behind the CLI: cached sampling, seeded training runs,
// the K and depth ablations, and the sampler comparison. Outputs are tidy
// CSVs whose rows echo the complete effective configuration, plus one JSON
// per training run. Repetitions are parallelized over seeds; rows are always
// emitted in seed order.

#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hoga/attention.hpp"
#include "hoga/dataset.hpp"
#include "hoga/khop.hpp"
#include "hoga/model_io.hpp"
#include "hoga/sampler.hpp"
#include "hoga/stats.hpp"
#include "hoga/train.hpp"

namespace hoga {

enum class ModelKind { gat, hoga_gat, grand, hoga_grand };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::gat: return "gat";
    case ModelKind::hoga_gat: return "hoga-gat";
    case ModelKind::grand: return "grand";
    case ModelKind::hoga_grand: return "hoga-grand";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "gat") return ModelKind::gat;
  if (s == "hoga-gat") return ModelKind::hoga_gat;
  if (s == "grand") return ModelKind::grand;
  if (s == "hoga-grand") return ModelKind::hoga_grand;
  throw config_error("unknown model '" + s + "'");
}

inline bool is_grand(ModelKind m) {
  return m == ModelKind::grand || m == ModelKind::hoga_grand;
}
inline bool is_single_hop(ModelKind m) {
  return m == ModelKind::gat || m == ModelKind::grand;
}

struct ExperimentSpec {
  std::filesystem::path dataset_dir;
  ModelKind model = ModelKind::hoga_gat;
  SamplerConfig sampler;
  HogaConfig hoga;
  GrandConfig grand;
  TrainConfig trainc;
  std::vector<std::uint64_t> seeds;  // empty: 0..repetitions-1
  SplitSpec split;
  std::filesystem::path out_dir = "runs";
  std::filesystem::path cache_dir = "cache";
  int workers = 1;
  std::filesystem::path baseline_csv;  // optional paired comparison input
  bool save_checkpoints = false;
};

inline std::vector<std::uint64_t> effective_seeds(const ExperimentSpec& spec) {
  if (!spec.seeds.empty()) return spec.seeds;
  std::vector<std::uint64_t> out;
  for (int i = 0; i < spec.trainc.repetitions; ++i)
    out.push_back(static_cast<std::uint64_t>(i));
  return out;
}

// Single-hop models are the K = 1 special case by construction.
inline void validate_spec(const ExperimentSpec& spec) {
  validate(spec.sampler);
  validate(spec.hoga);
  validate(spec.grand);
  validate(spec.trainc);
  if (is_single_hop(spec.model) && spec.hoga.k_max != 1)
    throw config_error(std::string(to_string(spec.model)) +
                       " is single-hop; it requires K = 1");
  if (spec.workers < 1) throw config_error("workers must be >= 1");
  if (effective_seeds(spec).empty()) throw config_error("no seeds given");
}

namespace detail {

inline std::string num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

template <class Fn>
void parallel_for_index(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::scoped_lock lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sample cache
//
// cache/<dataset>/<method>/k<k>_seed<seed>_head<h>.txt in the khop pair
// format, with a sidecar .json echoing the full sampler configuration.

inline std::filesystem::path cache_stem(const ExperimentSpec& spec,
                                        const std::string& dataset, int k,
                                        std::uint64_t base_seed, int head) {
  return spec.cache_dir / dataset / to_string(spec.sampler.method) /
         ("k" + std::to_string(k) + "_seed" + std::to_string(base_seed) +
          "_head" + std::to_string(head));
}

inline void write_sample_cache(const std::filesystem::path& stem,
                               const std::string& dataset, std::uint64_t base_seed,
                               int head, const SampleSet& s) {
  std::filesystem::create_directories(stem.parent_path());
  save_pairs(stem.string() + ".txt", s.pairs);
  nlohmann::json j{
      {"dataset", dataset},
      {"method", to_string(s.provenance.method)},
      {"k", s.k},
      {"base_seed", base_seed},
      {"head", head},
      {"seed", s.provenance.seed},
      {"gamma", s.provenance.gamma},
      {"jump_prob", s.provenance.jump_prob},
      {"edge_cap", s.provenance.edge_cap},
      {"history_size", s.provenance.history_size},
      {"pairs", s.pairs.size()},
      {"status", static_cast<int>(s.status)},
  };
  std::ofstream out(stem.string() + ".json");
  if (!out) throw error("cannot write sample sidecar " + stem.string() + ".json");
  out << j.dump(2) << '\n';
}

// Returns the cached set only when the sidecar matches the requested config.
inline std::optional<SampleSet> load_sample_cache(const std::filesystem::path& stem,
                                                  int k, const SamplerConfig& want) {
  const auto txt = stem.string() + ".txt";
  const auto side = stem.string() + ".json";
  if (!std::filesystem::exists(txt) || !std::filesystem::exists(side))
    return std::nullopt;
  std::ifstream in(side);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (j.value("method", "") != std::string(to_string(want.method))) return std::nullopt;
  if (j.value("k", -1) != k) return std::nullopt;
  if (j.value("seed", std::uint64_t{0}) != want.seed) return std::nullopt;
  if (j.value("gamma", -1.0) != want.gamma) return std::nullopt;
  if (j.value("jump_prob", -1.0) != want.jump_prob) return std::nullopt;
  if (j.value("edge_cap", std::int64_t{-1}) != want.edge_cap) return std::nullopt;
  if (j.value("history_size", -1) != want.history_size) return std::nullopt;
  SampleSet s;
  s.k = k;
  s.provenance = want;
  s.status = static_cast<SampleStatus>(j.value("status", 0));
  s.pairs = load_pairs(txt);
  return s;
}

// Per-run sample preparation: cache hit or fresh sampling, one head sample
// set per k in 2..K, then edge batches (k = 1 always the full edge set).
inline std::vector<PreparedOrder> prepare_run_orders(
    const Dataset& ds, const SparseMatrix& feats, const ExperimentSpec& spec,
    std::uint64_t run_seed, bool use_cache, std::vector<std::string>* warnings) {
  const int max_heads = is_grand(spec.model)
                            ? spec.hoga.heads_first
                            : std::max(spec.hoga.heads_first, spec.hoga.heads_rest);
  std::vector<HeadSampleSet> higher;
  for (int k = 2; k <= spec.hoga.k_max; ++k) {
    KhopNeighborCache cache(ds.graph, k);
    HeadSampleSet hs;
    hs.k = k;
    for (int h = 0; h < max_heads; ++h) {
      SamplerConfig cfg = spec.sampler;
      cfg.seed = run_seed + static_cast<std::uint64_t>(h);
      std::optional<SampleSet> cached;
      if (use_cache)
        cached = load_sample_cache(cache_stem(spec, ds.name, k, run_seed, h), k, cfg);
      hs.heads.push_back(cached ? std::move(*cached)
                                : sample_edges(ds.graph, feats, k, cfg, &cache));
      if (warnings && hs.heads.back().status == SampleStatus::empty_khop && h == 0)
        warnings->push_back("E_" + std::to_string(k) +
                            " is empty; order k=" + std::to_string(k) +
                            " contributes nothing");
    }
    higher.push_back(std::move(hs));
  }
  return prepare_orders(ds.graph, higher, max_heads);
}

// ---------------------------------------------------------------------------
// Runs and CSV rows

struct RunResult {
  std::uint64_t seed = 0;
  TrainReport report;
};

inline TrainReport run_single(const Dataset& ds,
                              std::shared_ptr<const SparseMatrix> feats,
                              const ExperimentSpec& spec, std::uint64_t seed,
                              const std::vector<PreparedOrder>& orders) {
  DataBundle data{&ds.graph, feats, &ds.split};
  TrainConfig tc = spec.trainc;
  tc.seed = seed;
  if (is_grand(spec.model)) {
    auto model = HogaGrandModel::init(spec.hoga, spec.grand, ds.features.cols,
                                      ds.split.num_classes, seed);
    auto report = train(model, data, orders, tc);
    if (spec.save_checkpoints && !report.diverged) {
      std::filesystem::create_directories(spec.out_dir);
      save_checkpoint(spec.out_dir / ("checkpoint_seed" + std::to_string(seed) + ".json"),
                      model);
    }
    return report;
  }
  auto model = HogaGatModel::init(spec.hoga, ds.features.cols,
                                  ds.split.num_classes, seed);
  auto report = train(model, data, orders, tc);
  if (spec.save_checkpoints && !report.diverged) {
    std::filesystem::create_directories(spec.out_dir);
    save_checkpoint(spec.out_dir / ("checkpoint_seed" + std::to_string(seed) + ".json"),
                    model);
  }
  return report;
}

inline std::vector<RunResult> run_all_seeds(const Dataset& ds,
                                            std::shared_ptr<const SparseMatrix> feats,
                                            const ExperimentSpec& spec,
                                            bool use_cache) {
  const auto seeds = effective_seeds(spec);
  std::vector<RunResult> results(seeds.size());
  std::mutex warn_mu;
  detail::parallel_for_index(
      static_cast<int>(seeds.size()), spec.workers, [&](int i) {
        std::vector<std::string> warnings;
        auto orders = prepare_run_orders(ds, *feats, spec, seeds[static_cast<std::size_t>(i)],
                                         use_cache, &warnings);
        if (!warnings.empty()) {
          std::scoped_lock lk(warn_mu);
          for (const auto& w : warnings)
            std::cerr << "warning (seed " << seeds[static_cast<std::size_t>(i)]
                      << "): " << w << '\n';
        }
        results[static_cast<std::size_t>(i)] = RunResult{
            seeds[static_cast<std::size_t>(i)],
            run_single(ds, feats, spec, seeds[static_cast<std::size_t>(i)], orders)};
      });
  return results;
}

// Configuration echo appended to every CSV row, fixed order.
inline std::string config_echo_header() {
  return "heads_first,heads_rest,hidden,dropout,lr,weight_decay,max_epochs,"
         "patience,gamma,jump_prob,edge_cap,history_size,split,split_seed,"
         "grand_time,grand_step";
}

inline std::string config_echo_row(const ExperimentSpec& spec) {
  using detail::num;
  const char* split = spec.split.mode == SplitMode::public_split ? "public"
                      : spec.split.mode == SplitMode::random_split ? "random"
                                                                   : "auto";
  std::string out;
  out += std::to_string(spec.hoga.heads_first) + ',' +
         std::to_string(spec.hoga.heads_rest) + ',' +
         std::to_string(spec.hoga.hidden) + ',' + num(spec.hoga.dropout) + ',' +
         num(spec.trainc.lr) + ',' + num(spec.trainc.weight_decay) + ',' +
         std::to_string(spec.trainc.max_epochs) + ',' +
         std::to_string(spec.trainc.patience) + ',' + num(spec.sampler.gamma) +
         ',' + num(spec.sampler.jump_prob) + ',' +
         std::to_string(spec.sampler.edge_cap) + ',' +
         std::to_string(spec.sampler.history_size) + ',' + split + ',' +
         std::to_string(spec.split.seed) + ',' + num(spec.grand.time) + ',' +
         num(spec.grand.step);
  return out;
}

inline void write_runs_csv(const std::filesystem::path& path,
                           const ExperimentSpec& spec, const std::string& dataset,
                           const std::vector<RunResult>& results) {
  using detail::num;
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path.string());
  out << "seed,model,dataset,sampler,K,layers,test_acc,best_val_acc,epochs,"
         "seconds,"
      << config_echo_header() << '\n';
  auto common = [&](const std::string& seed_field) {
    out << seed_field << ',' << to_string(spec.model) << ',' << dataset << ','
        << to_string(spec.sampler.method) << ',' << spec.hoga.k_max << ','
        << (is_grand(spec.model) ? grand_steps(spec.grand) : spec.hoga.layers)
        << ',';
  };
  for (const auto& r : results) {
    common(std::to_string(r.seed));
    out << num(r.report.test_acc) << ',' << num(r.report.best_val_acc) << ','
        << r.report.epochs.size() << ',' << num(r.report.seconds) << ','
        << config_echo_row(spec) << '\n';
  }
  std::vector<TrainReport> ok;
  for (const auto& r : results)
    if (!r.report.diverged) ok.push_back(r.report);
  if (ok.size() >= 2) {
    auto [mean, sd] = aggregate_runs(ok);
    double mean_val = 0.0, mean_epochs = 0.0, total_seconds = 0.0;
    for (const auto& r : ok) {
      mean_val += r.best_val_acc;
      mean_epochs += static_cast<double>(r.epochs.size());
      total_seconds += r.seconds;
    }
    mean_val /= static_cast<double>(ok.size());
    mean_epochs /= static_cast<double>(ok.size());
    common("mean");
    out << num(mean) << ',' << num(mean_val) << ',' << num(mean_epochs) << ','
        << num(total_seconds) << ',' << config_echo_row(spec) << '\n';
    common("std");
    out << num(sd) << ",,,," << config_echo_row(spec) << '\n';
  }
}

inline void write_run_json(const std::filesystem::path& path,
                           const ExperimentSpec& spec, const std::string& dataset,
                           std::uint64_t seed, const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc}});
  nlohmann::json j{
      {"seed", seed},
      {"model", to_string(spec.model)},
      {"dataset", dataset},
      {"sampler", to_string(spec.sampler.method)},
      {"k_max", spec.hoga.k_max},
      {"layers", spec.hoga.layers},
      {"heads_first", spec.hoga.heads_first},
      {"heads_rest", spec.hoga.heads_rest},
      {"hidden", spec.hoga.hidden},
      {"dropout", spec.hoga.dropout},
      {"lr", spec.trainc.lr},
      {"weight_decay", spec.trainc.weight_decay},
      {"max_epochs", spec.trainc.max_epochs},
      {"patience", spec.trainc.patience},
      {"gamma", spec.sampler.gamma},
      {"jump_prob", spec.sampler.jump_prob},
      {"edge_cap", spec.sampler.edge_cap},
      {"history_size", spec.sampler.history_size},
      {"grand_time", spec.grand.time},
      {"grand_step", spec.grand.step},
      {"best_val_epoch", r.best_val_epoch},
      {"best_val_acc", r.best_val_acc},
      {"test_acc", r.test_acc},
      {"dirichlet_energies", r.dirichlet_energies},
      {"seconds", r.seconds},
      {"diverged", r.diverged},
      {"epochs", epochs},
  };
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Reads (seed, test_acc) pairs back out of a runs CSV, skipping aggregates.
inline std::vector<std::pair<std::uint64_t, double>> read_accuracy_rows(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot read baseline CSV " + path.string());
  std::vector<std::pair<std::uint64_t, double>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (fields.size() < 7) continue;
    try {
      std::size_t used = 0;
      const std::uint64_t seed = std::stoull(fields[0], &used);
      if (used != fields[0].size()) continue;  // aggregate rows
      rows.emplace_back(seed, std::stod(fields[6]));
    } catch (const std::exception&) {
      continue;
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Commands (exit code 0 on success, 4 when any run diverged)

inline int cmd_sample(const ExperimentSpec& spec) {
  validate_spec(spec);
  Dataset ds = load_dataset(spec.dataset_dir, spec.split);
  auto feats = SparseMatrix::from_dense(ds.features);
  const int max_heads = is_grand(spec.model)
                            ? spec.hoga.heads_first
                            : std::max(spec.hoga.heads_first, spec.hoga.heads_rest);
  std::mt19937_64 check_rng(12345);
  for (std::uint64_t seed : effective_seeds(spec)) {
    for (int k = 2; k <= spec.hoga.k_max; ++k) {
      KhopNeighborCache cache(ds.graph, k);
      for (int h = 0; h < max_heads; ++h) {
        SamplerConfig cfg = spec.sampler;
        cfg.seed = seed + static_cast<std::uint64_t>(h);
        SampleSet s = sample_edges(ds.graph, feats, k, cfg, &cache);
        write_sample_cache(cache_stem(spec, ds.name, k, seed, h), ds.name, seed, h, s);

        // spot check up to 200 pairs against exact BFS distances
        bool ok = true;
        const std::size_t checks = std::min<std::size_t>(s.pairs.size(), 200);
        for (std::size_t c = 0; c < checks && ok; ++c) {
          const auto& [i, j] = s.pairs[uniform_index(check_rng, s.pairs.size())];
          auto dist = bfs_distances(ds.graph, i, k);
          ok = dist[static_cast<std::size_t>(j)] == k;
        }
        std::cout << "k=" << k << " seed=" << seed << " head=" << h << ": "
                  << s.pairs.size() << " pairs, verification "
                  << (ok ? "OK" : "FAILED") << (s.status == SampleStatus::empty_khop
                                                    ? " (warning: E_k empty)"
                                                    : "")
                  << '\n';
        if (!ok) throw error("sample verification failed against khop oracle");
      }
    }
  }
  return 0;
}

inline int cmd_train(const ExperimentSpec& spec) {
  validate_spec(spec);
  Dataset ds = load_dataset(spec.dataset_dir, spec.split);
  auto feats = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(ds.features));
  auto results = run_all_seeds(ds, feats, spec, /*use_cache=*/true);

  std::filesystem::create_directories(spec.out_dir);
  write_runs_csv(spec.out_dir / "runs.csv", spec, ds.name, results);
  for (const auto& r : results)
    write_run_json(spec.out_dir / ("run_seed" + std::to_string(r.seed) + ".json"),
                   spec, ds.name, r.seed, r.report);

  std::vector<TrainReport> ok;
  for (const auto& r : results)
    if (!r.report.diverged) ok.push_back(r.report);
  if (ok.size() >= 2) {
    auto [mean, sd] = aggregate_runs(ok);
    std::cout << to_string(spec.model) << " on " << ds.name << ": "
              << detail::num(mean * 100.0) << " +/- " << detail::num(sd * 100.0)
              << " (" << ok.size() << " seeds)\n";
  }

  if (!spec.baseline_csv.empty()) {
    auto baseline = read_accuracy_rows(spec.baseline_csv);
    std::sort(baseline.begin(), baseline.end());
    std::vector<std::pair<std::uint64_t, double>> ours;
    for (const auto& r : results)
      if (!r.report.diverged) ours.emplace_back(r.seed, r.report.test_acc);
    std::sort(ours.begin(), ours.end());
    if (baseline.size() != ours.size())
      throw config_error("baseline CSV has " + std::to_string(baseline.size()) +
                         " rows, expected " + std::to_string(ours.size()));
    std::vector<double> a, b;
    for (std::size_t i = 0; i < ours.size(); ++i) {
      if (ours[i].first != baseline[i].first)
        throw config_error("baseline CSV seeds do not match this run");
      a.push_back(ours[i].second);
      b.push_back(baseline[i].second);
    }
    const double p = wilcoxon_signed_rank(a, b);
    std::cout << "wilcoxon vs " << spec.baseline_csv.string() << ": p = "
              << detail::num(p) << '\n';
    nlohmann::json j{{"baseline", spec.baseline_csv.string()}, {"p_value", p}};
    std::ofstream cmp(spec.out_dir / "comparison.json");
    cmp << j.dump(2) << '\n';
  }

  for (const auto& r : results)
    if (r.report.diverged) {
      std::cerr << "seed " << r.seed << " diverged: "
                << r.report.divergence_message << '\n';
      return 4;
    }
  return 0;
}

inline int cmd_ablate_k(const ExperimentSpec& spec, const std::vector<int>& k_values) {
  if (is_single_hop(spec.model))
    throw config_error("ablate-k requires a hoga model");
  if (k_values.empty()) throw config_error("ablate-k: no K values given");
  Dataset ds = load_dataset(spec.dataset_dir, spec.split);
  auto feats = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(ds.features));

  std::filesystem::create_directories(spec.out_dir);
  std::ofstream out(spec.out_dir / "ablate_k.csv");
  if (!out) throw error("cannot write ablate_k.csv");
  out << "k_max,model,dataset,sampler,layers,n_seeds,mean_test_acc,std_test_acc,"
      << config_echo_header() << '\n';

  int exit_code = 0;
  for (int K : k_values) {
    ExperimentSpec sk = spec;
    sk.hoga.k_max = K;
    validate_spec(sk);
    auto results = run_all_seeds(ds, feats, sk, true);
    std::vector<TrainReport> ok;
    for (const auto& r : results)
      if (!r.report.diverged) ok.push_back(r.report);
      else exit_code = 4;
    if (ok.size() < 2) continue;
    auto [mean, sd] = aggregate_runs(ok);
    out << K << ',' << to_string(sk.model) << ',' << ds.name << ','
        << to_string(sk.sampler.method) << ',' << sk.hoga.layers << ','
        << ok.size() << ',' << detail::num(mean) << ',' << detail::num(sd) << ','
        << config_echo_row(sk) << '\n';
    std::cout << "K=" << K << ": " << detail::num(mean * 100.0) << " +/- "
              << detail::num(sd * 100.0) << '\n';
  }
  return exit_code;
}

inline int cmd_ablate_depth(const ExperimentSpec& spec,
                            const std::vector<int>& layer_values) {
  if (layer_values.empty()) throw config_error("ablate-depth: no layer counts");
  Dataset ds = load_dataset(spec.dataset_dir, spec.split);
  auto feats = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(ds.features));

  std::filesystem::create_directories(spec.out_dir);
  std::ofstream out(spec.out_dir / "ablate_depth.csv");
  if (!out) throw error("cannot write ablate_depth.csv");
  out << "layers,model,dataset,sampler,k_max,n_seeds,mean_test_acc,std_test_acc,"
         "mean_final_dirichlet,"
      << config_echo_header() << '\n';

  int exit_code = 0;
  for (int L : layer_values) {
    ExperimentSpec sl = spec;
    if (is_grand(spec.model)) {
      // depth for the flow model = number of Euler steps
      sl.grand.time = sl.grand.step * L;
    } else {
      sl.hoga.layers = L;
    }
    validate_spec(sl);
    auto results = run_all_seeds(ds, feats, sl, true);
    std::vector<TrainReport> ok;
    for (const auto& r : results)
      if (!r.report.diverged) ok.push_back(r.report);
      else exit_code = 4;
    if (ok.size() < 2) continue;
    auto [mean, sd] = aggregate_runs(ok);
    double mean_energy = 0.0;
    for (const auto& r : ok)
      mean_energy += r.dirichlet_energies.empty() ? 0.0 : r.dirichlet_energies.back();
    mean_energy /= static_cast<double>(ok.size());
    out << L << ',' << to_string(sl.model) << ',' << ds.name << ','
        << to_string(sl.sampler.method) << ',' << sl.hoga.k_max << ','
        << ok.size() << ',' << detail::num(mean) << ',' << detail::num(sd) << ','
        << detail::num(mean_energy) << ',' << config_echo_row(sl) << '\n';
    std::cout << "layers=" << L << ": " << detail::num(mean * 100.0) << " +/- "
              << detail::num(sd * 100.0) << ", final-layer energy "
              << detail::num(mean_energy) << '\n';
  }
  return exit_code;
}

inline int cmd_compare_samplers(const ExperimentSpec& spec,
                                const std::vector<SampleMethod>& methods) {
  if (is_single_hop(spec.model))
    throw config_error("compare-samplers requires a hoga model");
  if (methods.empty()) throw config_error("compare-samplers: no methods given");
  Dataset ds = load_dataset(spec.dataset_dir, spec.split);
  auto feats = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(ds.features));

  struct MethodRow {
    SampleMethod method;
    std::vector<double> accs;  // seed order, diverged runs excluded pairwise
    std::vector<std::uint64_t> seeds;
    double mean = 0.0, sd = 0.0;
  };
  std::vector<MethodRow> rows;
  int exit_code = 0;
  for (SampleMethod m : methods) {
    ExperimentSpec sm = spec;
    sm.sampler.method = m;
    validate_spec(sm);
    auto results = run_all_seeds(ds, feats, sm, true);
    MethodRow row;
    row.method = m;
    std::vector<TrainReport> ok;
    for (const auto& r : results) {
      if (r.report.diverged) {
        exit_code = 4;
        continue;
      }
      ok.push_back(r.report);
      row.accs.push_back(r.report.test_acc);
      row.seeds.push_back(r.seed);
    }
    if (ok.size() >= 2) {
      auto [mean, sd] = aggregate_runs(ok);
      row.mean = mean;
      row.sd = sd;
    }
    rows.push_back(std::move(row));
  }

  const MethodRow* heuristic = nullptr;
  for (const auto& r : rows)
    if (r.method == SampleMethod::heuristic_walk) heuristic = &r;

  std::filesystem::create_directories(spec.out_dir);
  std::ofstream out(spec.out_dir / "compare_samplers.csv");
  if (!out) throw error("cannot write compare_samplers.csv");
  out << "sampler,model,dataset,k_max,layers,n_seeds,mean_test_acc,std_test_acc,"
         "p_vs_heuristic,"
      << config_echo_header() << '\n';
  for (const auto& r : rows) {
    std::string p = "";
    if (heuristic && r.accs.size() == heuristic->accs.size() &&
        r.accs.size() >= 5 && r.seeds == heuristic->seeds)
      p = detail::num(wilcoxon_signed_rank(heuristic->accs, r.accs));
    out << to_string(r.method) << ',' << to_string(spec.model) << ',' << ds.name
        << ',' << spec.hoga.k_max << ',' << spec.hoga.layers << ','
        << r.accs.size() << ',' << detail::num(r.mean) << ',' << detail::num(r.sd)
        << ',' << p << ',' << config_echo_row(spec) << '\n';
    std::cout << to_string(r.method) << ": " << detail::num(r.mean * 100.0)
              << " +/- " << detail::num(r.sd * 100.0)
              << (p.empty() ? "" : ("  p_vs_heuristic=" + p)) << '\n';
  }
  return exit_code;
}

inline int cmd_khop_stats(const ExperimentSpec& spec) {
  Dataset ds = load_dataset(spec.dataset_dir, spec.split);
  std::cout << "dataset " << ds.name << ": " << ds.graph.num_nodes << " nodes, "
            << ds.graph.num_edges << " undirected edges, branching factor "
            << detail::num(branching_factor(ds.graph)) << '\n';
  for (int k = 1; k <= spec.hoga.k_max; ++k) {
    const std::int64_t ek = count_khop_edges(ds.graph, k);
    const double avg =
        ds.graph.num_nodes > 0
            ? 2.0 * static_cast<double>(ek) / static_cast<double>(ds.graph.num_nodes)
            : 0.0;
    std::cout << "k=" << k << ": |E_k| = " << ek << ", avg |N_k| = "
              << detail::num(avg) << '\n';
  }
  return 0;
}

}  // namespace hoga
