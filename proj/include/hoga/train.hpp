// Training loop, evaluation metrics and the oversmoothing diagnostic.
//
// Optimizer: adaptive moment estimation with bias correction and decoupled
// weight decay, applied to every parameter. Model selection is by validation
// accuracy with ties broken toward the earlier epoch; the reported test
// accuracy always comes from that checkpoint. Runs are deterministic given
// the seed (wall-clock time excepted), so seeded repetitions may execute
// concurrently.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hoga/attention.hpp"
#include "hoga/graph.hpp"
#include "hoga/tensor.hpp"

namespace hoga {

struct TrainConfig {
  double lr = 0.005;
  double weight_decay = 5e-4;
  int max_epochs = 500;
  int patience = 100;  // epochs without a new best validation accuracy
  std::uint64_t seed = 0;
  int repetitions = 20;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.lr < 0.0 || !std::isfinite(cfg.lr))
    throw config_error("train: bad learning rate");
  if (cfg.weight_decay < 0.0) throw config_error("train: bad weight decay");
  if (cfg.max_epochs < 1) throw config_error("train: max epochs must be >= 1");
  if (cfg.patience < 1) throw config_error("train: patience must be >= 1");
  if (cfg.repetitions < 1) throw config_error("train: repetitions must be >= 1");
}

struct EpochStats {
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_val_epoch = -1;  // index into epochs
  double best_val_acc = 0.0;
  double test_acc = 0.0;
  std::vector<double> dirichlet_energies;  // per layer (or Euler step) at the checkpoint
  double seconds = 0.0;
  bool diverged = false;
  std::string divergence_message;
};

// Fraction of masked nodes whose argmax matches the label; argmax ties break
// toward the lowest class index.
inline double accuracy(const Tensor& logits, const std::vector<std::int32_t>& labels,
                       const std::vector<std::uint8_t>& mask) {
  const std::int64_t n = logits.rows(), c = logits.cols();
  std::int64_t hits = 0, count = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ++count;
    std::int64_t arg = 0;
    double best = logits.at(i, 0);
    for (std::int64_t j = 1; j < c; ++j)
      if (logits.at(i, j) > best) {
        best = logits.at(i, j);
        arg = j;
      }
    if (arg == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  if (count == 0) throw error("accuracy: empty mask");
  return static_cast<double>(hits) / static_cast<double>(count);
}

// Half the sum of squared feature differences over undirected edges; zero iff
// features are constant within each connected component.
inline double dirichlet_energy(const Tensor& x, const Graph& g) {
  if (x.rows() != g.num_nodes) throw error("dirichlet_energy: row mismatch");
  const std::int64_t d = x.cols();
  double acc = 0.0;
  for (node_t i = 0; i < g.num_nodes; ++i)
    for (node_t j : g.neighbors(i)) {
      if (j <= i) continue;  // each undirected edge once
      for (std::int64_t f = 0; f < d; ++f) {
        const double diff = x.at(i, f) - x.at(j, f);
        acc += diff * diff;
      }
    }
  return 0.5 * acc;
}

// Mean and Bessel-corrected standard deviation of test accuracies.
inline std::pair<double, double> aggregate_runs(const std::vector<TrainReport>& reports) {
  if (reports.size() < 2) throw error("aggregate_runs: need at least 2 reports");
  double mean = 0.0;
  for (const auto& r : reports) mean += r.test_acc;
  mean /= static_cast<double>(reports.size());
  double ss = 0.0;
  for (const auto& r : reports) {
    const double d = r.test_acc - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / static_cast<double>(reports.size() - 1))};
}

// AdamW: m, v with bias correction, weight decay decoupled from the moment
// update and scaled by the learning rate.
class AdamW {
 public:
  explicit AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Tensor*>& params,
            const std::vector<std::vector<double>>& grads, double lr, double wd) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i]->v().size(), 0.0);
        v_[i].assign(params[i]->v().size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& theta = params[i]->v_mut();
      const auto& g = grads[i];
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        theta[j] -= lr * (mhat / (std::sqrt(vhat) + eps_) + wd * theta[j]);
      }
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct DataBundle {
  const Graph* graph = nullptr;
  std::shared_ptr<const SparseMatrix> features;
  const LabeledSplit* split = nullptr;
};

// Full training run. On numeric divergence the partial report is returned
// with diverged = true.
template <class Model>
TrainReport train(Model& model, const DataBundle& data,
                  const std::vector<PreparedOrder>& orders,
                  const TrainConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  AdamW opt;
  std::vector<std::vector<double>> best_snapshot;
  const auto& split = *data.split;

  auto snapshot_params = [&]() {
    std::vector<std::vector<double>> snap;
    for (Tensor* p : model.flat_params()) snap.push_back(p->v());
    return snap;
  };
  auto restore_params = [&](const std::vector<std::vector<double>>& snap) {
    auto ps = model.flat_params();
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->v_mut() = snap[i];
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    try {
      Tape tape;
      auto bound = model.bind(&tape);
      Tensor logits = model.forward(&tape, bound, data.features, orders,
                                    /*train=*/true, mix_seed(cfg.seed, epoch));
      Tensor loss =
          nll_from_log_softmax(&tape, logits, split.labels, split.train_mask);
      tape.backward(loss);
      std::vector<std::vector<double>> grads;
      grads.reserve(bound.size());
      for (const auto& b : bound) grads.push_back(tape.grad(b));
      opt.step(model.flat_params(), grads, cfg.lr, cfg.weight_decay);

      auto eval_bound = model.bind(nullptr);
      Tensor eval_logits =
          model.forward(nullptr, eval_bound, data.features, orders, false, 0);
      EpochStats st;
      st.train_loss = nll_from_log_softmax(nullptr, eval_logits, split.labels,
                                           split.train_mask)
                          .item();
      st.train_acc = accuracy(eval_logits, split.labels, split.train_mask);
      st.val_loss = nll_from_log_softmax(nullptr, eval_logits, split.labels,
                                         split.val_mask)
                        .item();
      st.val_acc = accuracy(eval_logits, split.labels, split.val_mask);
      report.epochs.push_back(st);

      if (st.val_acc > report.best_val_acc || report.best_val_epoch < 0) {
        report.best_val_acc = st.val_acc;
        report.best_val_epoch = epoch;
        best_snapshot = snapshot_params();
      }
      if (epoch - report.best_val_epoch >= cfg.patience) break;
    } catch (const numeric_error& e) {
      report.diverged = true;
      report.divergence_message = e.what();
      break;
    }
  }

  if (!best_snapshot.empty()) restore_params(best_snapshot);
  if (!report.diverged && report.best_val_epoch >= 0) {
    auto eval_bound = model.bind(nullptr);
    std::vector<Tensor> layer_outputs;
    Tensor logits = model.forward(nullptr, eval_bound, data.features, orders,
                                  false, 0, &layer_outputs);
    report.test_acc = accuracy(logits, split.labels, split.test_mask);
    for (const auto& out : layer_outputs)
      report.dirichlet_energies.push_back(dirichlet_energy(out, *data.graph));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace hoga
