// The higher-order attention mechanism and its two host models.
//
// Per hop order k and head h, a GAT-style scorer
//   e_ij = leaky_relu(a^T [W x_i || W x_j])
// is normalized by a destination-grouped softmax over the sampled pairs (the
// k = 1 block always uses the full edge set and includes the self pair in its
// normalization; k >= 2 blocks normalize over sampled endpoints alone). Head
// matrices are averaged within each order, orders are combined with the
// harmonic weights beta(k) = 1/k.
//
// HoGA-GAT stacks such layers discretely; HoGA-GRAND integrates a shared
// attention operator with forward Euler steps. Sample sets are fixed across
// layers/steps of one run.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hoga/common.hpp"
#include "hoga/graph.hpp"
#include "hoga/sampler.hpp"
#include "hoga/sparse.hpp"
#include "hoga/tensor.hpp"

namespace hoga {

// Hop-distance weighting: the harmonic series.
inline double beta(int k) {
  if (k < 1) throw error("beta: k must be >= 1");
  return 1.0 / static_cast<double>(k);
}

// Feature transform W (d_in x d_out) and scoring vector a (2 d_out), stored
// split into its destination and source halves so scores reduce to two
// column products plus a per-edge gather.
struct AttentionHeadParams {
  Tensor weight;    // d_in x d_out
  Tensor attn_dst;  // d_out x 1, first half of a
  Tensor attn_src;  // d_out x 1, second half of a

  std::int64_t count() const {
    return weight.size() + attn_dst.size() + attn_src.size();
  }
};

// Directed realization of a pair list. Expansion emits both directions of
// each pair adjacently in list order and appends self pairs last; per-node
// accumulation order is therefore stable under node relabeling, which keeps
// permutation equivariance exact in floating point.
inline EdgeIndexPtr make_edge_index(std::span<const edge_pair> pairs,
                                    std::int64_t num_nodes, bool include_self) {
  auto idx = std::make_shared<EdgeIndex>();
  idx->num_nodes = num_nodes;
  idx->dst.reserve(pairs.size() * 2 + (include_self ? num_nodes : 0));
  idx->src.reserve(idx->dst.capacity());
  for (const auto& [i, j] : pairs) {
    idx->dst.push_back(i);
    idx->src.push_back(j);
    idx->dst.push_back(j);
    idx->src.push_back(i);
  }
  if (include_self)
    for (std::int64_t i = 0; i < num_nodes; ++i) {
      idx->dst.push_back(static_cast<std::int32_t>(i));
      idx->src.push_back(static_cast<std::int32_t>(i));
    }
  return idx;
}

// Layer input: sparse for the raw feature matrix, dense afterwards.
struct LayerInput {
  std::shared_ptr<const SparseMatrix> sparse;
  Tensor dense;

  std::int64_t rows() const { return sparse ? sparse->rows : dense.rows(); }
};

inline Tensor transform(Tape* tape, const LayerInput& in, const Tensor& w) {
  return in.sparse ? sparse_matmul(tape, in.sparse, w) : matmul(tape, in.dense, w);
}

struct HeadActivation {
  Tensor alpha;        // per directed edge, rows sum to 1 per destination
  Tensor transformed;  // x W, reused by the aggregation step
};

inline HeadActivation attention_head(Tape* tape, const AttentionHeadParams& p,
                                     const LayerInput& x, const EdgeIndexPtr& edges,
                                     double leaky_slope) {
  Tensor h = transform(tape, x, p.weight);
  Tensor pd = matmul(tape, h, p.attn_dst);
  Tensor ps = matmul(tape, h, p.attn_src);
  Tensor raw = edge_gather_sum(tape, pd, ps, edges);
  Tensor scored = leaky_relu(tape, raw, leaky_slope);
  Tensor alpha = segment_softmax(tape, scored, edges->dst, edges->num_nodes);
  return {std::move(alpha), std::move(h)};
}

// Spec surface: normalized coefficients for one head over one sample set.
struct AttentionCoefficients {
  Tensor alpha;
  EdgeIndexPtr edges;
};

inline AttentionCoefficients attention_coefficients(Tape* tape,
                                                    const AttentionHeadParams& p,
                                                    const Tensor& x,
                                                    const SampleSet& sample,
                                                    bool include_self,
                                                    double leaky_slope = 0.2) {
  auto edges = make_edge_index(sample.pairs, x.rows(), include_self);
  LayerInput in;
  in.dense = x;
  auto act = attention_head(tape, p, in, edges, leaky_slope);
  return {std::move(act.alpha), std::move(edges)};
}

struct HogaConfig {
  int k_max = 3;
  int heads_first = 8;  // attention heads in the first layer
  int heads_rest = 1;   // heads in subsequent layers
  int layers = 2;
  int hidden = 64;
  double dropout = 0.6;
  double leaky_slope = 0.2;
};

inline void validate(const HogaConfig& cfg) {
  if (cfg.k_max < 1) throw config_error("hoga: K must be >= 1");
  if (cfg.heads_first < 1 || cfg.heads_rest < 1)
    throw config_error("hoga: head counts must be >= 1");
  if (cfg.layers < 2) throw config_error("hoga: need at least 2 layers");
  if (cfg.hidden < 1) throw config_error("hoga: hidden dim must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw config_error("hoga: dropout must be in [0,1)");
}

// Edge batches for one hop order, one per head. For k = 1 all heads share the
// full edge set (S_1 = E, never sampled); for k >= 2 each head carries its own
// resampled set without self pairs.
struct PreparedOrder {
  int k = 1;
  std::vector<EdgeIndexPtr> heads;
  SampleStatus status = SampleStatus::ok;
};

// Builds the k = 1 order from the graph and the k >= 2 orders from sampled
// head sets (which must provide at least max_heads sets each).
inline std::vector<PreparedOrder> prepare_orders(
    const Graph& g, const std::vector<HeadSampleSet>& higher, int max_heads) {
  std::vector<PreparedOrder> orders;
  PreparedOrder base;
  base.k = 1;
  auto e1 = make_edge_index(g.edge_pairs(), g.num_nodes, /*include_self=*/true);
  base.heads.assign(static_cast<std::size_t>(max_heads), e1);
  orders.push_back(std::move(base));

  for (const auto& hs : higher) {
    if (hs.k < 2) throw error("prepare_orders: sampled orders must have k >= 2");
    if (static_cast<int>(hs.heads.size()) < max_heads)
      throw error("prepare_orders: order k=" + std::to_string(hs.k) +
                  " provides fewer sample sets than heads required");
    PreparedOrder o;
    o.k = hs.k;
    o.status = hs.heads.front().status;
    for (int h = 0; h < max_heads; ++h)
      o.heads.push_back(make_edge_index(hs.heads[static_cast<std::size_t>(h)].pairs,
                                        g.num_nodes, /*include_self=*/false));
    orders.push_back(std::move(o));
  }
  return orders;
}

// Samples every order 2..K with max_heads heads and assembles the batches.
inline std::vector<PreparedOrder> prepare_orders(const Graph& g,
                                                 const SparseMatrix& feats,
                                                 const HogaConfig& cfg,
                                                 const SamplerConfig& scfg) {
  const int max_heads = std::max(cfg.heads_first, cfg.heads_rest);
  std::vector<HeadSampleSet> higher;
  for (int k = 2; k <= cfg.k_max; ++k)
    higher.push_back(sample_heads(g, feats, k, scfg, max_heads));
  return prepare_orders(g, higher, max_heads);
}

// One multi-hop attention layer: per order k average the per-head aggregates
// A_{k,h} (x W_{k,h}), combine orders with beta(k), then elu except at the
// output layer. Orders whose sample came back empty contribute nothing.
inline Tensor hoga_combine(Tape* tape, const LayerInput& x,
                           const std::vector<PreparedOrder>& orders,
                           const std::vector<std::vector<AttentionHeadParams>>& params,
                           int heads_used, bool apply_elu, double leaky_slope) {
  if (orders.size() != params.size())
    throw error("hoga_combine: missing sample set or parameters for some order");
  Tensor acc;
  bool have_acc = false;
  for (std::size_t ki = 0; ki < orders.size(); ++ki) {
    const auto& order = orders[ki];
    if (static_cast<int>(order.heads.size()) < heads_used ||
        static_cast<int>(params[ki].size()) < heads_used)
      throw error("hoga_combine: not enough heads prepared for order k=" +
                  std::to_string(order.k));
    if (order.heads.front()->size() == 0) continue;  // empty E_k

    Tensor head_sum;
    for (int h = 0; h < heads_used; ++h) {
      const auto& batch = order.heads[static_cast<std::size_t>(h)];
      auto act = attention_head(tape, params[ki][static_cast<std::size_t>(h)], x,
                                batch, leaky_slope);
      Tensor m = weighted_scatter(tape, act.alpha, batch, act.transformed);
      head_sum = h == 0 ? std::move(m) : add(tape, head_sum, m);
    }
    Tensor contribution = scale(
        tape, head_sum, beta(order.k) / static_cast<double>(heads_used));
    acc = have_acc ? add(tape, acc, contribution) : std::move(contribution);
    have_acc = true;
  }
  if (!have_acc) throw error("hoga_combine: every order is empty");
  return apply_elu ? elu(tape, acc) : acc;
}

// Seeded inverted dropout on the stored nonzeros of a sparse matrix. Zero
// entries stay zero under dropout, so this equals dense dropout on the
// materialized matrix.
inline std::shared_ptr<const SparseMatrix> sparse_dropout(
    std::shared_ptr<const SparseMatrix> s, double p, std::uint64_t seed,
    bool train) {
  if (p < 0.0 || p >= 1.0) throw error("sparse_dropout: p must be in [0,1)");
  if (!train || p == 0.0) return s;
  auto out = std::make_shared<SparseMatrix>(*s);
  std::mt19937_64 rng(seed);
  const double inv = 1.0 / (1.0 - p);
  for (double& v : out->val) v = uniform_real01(rng) >= p ? v * inv : 0.0;
  return out;
}

namespace detail {

inline Tensor glorot(std::mt19937_64& rng, std::int64_t fan_in,
                     std::int64_t fan_out, std::vector<std::int64_t> shape) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.v_mut()) v = (2.0 * uniform_real01(rng) - 1.0) * limit;
  return t;
}

inline AttentionHeadParams init_head(std::mt19937_64& rng, std::int64_t d_in,
                                     std::int64_t d_out) {
  AttentionHeadParams p;
  p.weight = glorot(rng, d_in, d_out, {d_in, d_out});
  p.attn_dst = glorot(rng, 2 * d_out, 1, {d_out, 1});
  p.attn_src = glorot(rng, 2 * d_out, 1, {d_out, 1});
  return p;
}

inline void collect(std::vector<Tensor*>& out, AttentionHeadParams& p) {
  out.push_back(&p.weight);
  out.push_back(&p.attn_dst);
  out.push_back(&p.attn_src);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// HoGA-GAT: stacked multi-hop attention layers with input and inter-layer
// dropout. With k_max = 1 this is architecturally a plain GAT.

struct HogaGatModel {
  HogaConfig cfg;
  std::int64_t d_in = 0;
  std::int64_t num_classes = 0;
  // [layer][k-1][head]
  std::vector<std::vector<std::vector<AttentionHeadParams>>> layers;

  int heads_at(int layer) const {
    return layer == 0 ? cfg.heads_first : cfg.heads_rest;
  }

  static HogaGatModel init(const HogaConfig& cfg, std::int64_t d_in,
                           std::int64_t num_classes, std::uint64_t seed) {
    validate(cfg);
    if (d_in < 1 || num_classes < 1) throw config_error("hoga-gat: bad widths");
    HogaGatModel m;
    m.cfg = cfg;
    m.d_in = d_in;
    m.num_classes = num_classes;
    std::mt19937_64 rng(seed);
    for (int l = 0; l < cfg.layers; ++l) {
      const std::int64_t in = l == 0 ? d_in : cfg.hidden;
      const std::int64_t out = l == cfg.layers - 1 ? num_classes : cfg.hidden;
      std::vector<std::vector<AttentionHeadParams>> per_k;
      for (int k = 1; k <= cfg.k_max; ++k) {
        std::vector<AttentionHeadParams> heads;
        for (int h = 0; h < m.heads_at(l); ++h)
          heads.push_back(detail::init_head(rng, in, out));
        per_k.push_back(std::move(heads));
      }
      m.layers.push_back(std::move(per_k));
    }
    return m;
  }

  std::vector<Tensor*> flat_params() {
    std::vector<Tensor*> out;
    for (auto& layer : layers)
      for (auto& per_k : layer)
        for (auto& head : per_k) detail::collect(out, head);
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& layer : layers)
      for (const auto& per_k : layer)
        for (const auto& head : per_k) n += head.count();
    return n;
  }

  // Leafs every parameter onto the tape (plain copies when tape is null),
  // in flat_params() order.
  std::vector<Tensor> bind(Tape* tape) const {
    std::vector<Tensor> out;
    for (const auto& layer : layers)
      for (const auto& per_k : layer)
        for (const auto& head : per_k) {
          out.push_back(tape ? tape->leaf(head.weight) : head.weight);
          out.push_back(tape ? tape->leaf(head.attn_dst) : head.attn_dst);
          out.push_back(tape ? tape->leaf(head.attn_src) : head.attn_src);
        }
    return out;
  }

  // Sample sets are fixed across layers: the same `orders` feed every layer.
  // layer_outputs, when given, receives each layer's post-activation output.
  Tensor forward(Tape* tape, const std::vector<Tensor>& bound,
                 std::shared_ptr<const SparseMatrix> x0,
                 const std::vector<PreparedOrder>& orders, bool train,
                 std::uint64_t dropout_seed,
                 std::vector<Tensor>* layer_outputs = nullptr) const {
    if (static_cast<int>(orders.size()) != cfg.k_max)
      throw error("hoga-gat forward: expected one prepared order per k <= K");
    std::size_t cursor = 0;
    auto next_params = [&](int l) {
      std::vector<std::vector<AttentionHeadParams>> per_k;
      for (int k = 0; k < cfg.k_max; ++k) {
        std::vector<AttentionHeadParams> heads;
        for (int h = 0; h < heads_at(l); ++h) {
          AttentionHeadParams p;
          p.weight = bound[cursor++];
          p.attn_dst = bound[cursor++];
          p.attn_src = bound[cursor++];
          heads.push_back(std::move(p));
        }
        per_k.push_back(std::move(heads));
      }
      return per_k;
    };

    LayerInput cur;
    cur.sparse = sparse_dropout(std::move(x0), cfg.dropout,
                                mix_seed(dropout_seed, 0), train);
    Tensor out;
    for (int l = 0; l < cfg.layers; ++l) {
      const bool last = l == cfg.layers - 1;
      auto params = next_params(l);
      out = hoga_combine(tape, cur, orders, params, heads_at(l), !last,
                         cfg.leaky_slope);
      if (layer_outputs) layer_outputs->push_back(out);
      if (!last) {
        Tensor dropped = dropout(tape, out, cfg.dropout,
                                 mix_seed(dropout_seed, static_cast<std::uint64_t>(l) + 1),
                                 train);
        cur = LayerInput{};
        cur.dense = std::move(dropped);
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// HoGA-GRAND: affine encoder, forward-Euler integration of the shared
// attention operator, affine decoder.

struct GrandConfig {
  double time = 4.0;        // integration horizon T
  double step = 0.5;        // Euler step tau
  bool literal_flow = false;  // dx/dt = A x verbatim instead of the diffusive form
};

inline void validate(const GrandConfig& cfg) {
  if (!(cfg.time > 0.0)) throw config_error("grand: T must be positive");
  if (!(cfg.step > 0.0) || cfg.step > cfg.time)
    throw config_error("grand: step must satisfy 0 < tau <= T");
}

inline int grand_steps(const GrandConfig& cfg) {
  return static_cast<int>(std::ceil(cfg.time / cfg.step - 1e-12));
}

// Exact row sums of the combined operator: D_i = sum_k beta(k) * (heads
// covering node i at order k) / heads. Dividing rows by D makes the operator
// row-stochastic even when a node lacks sampled pairs at some order; with
// full coverage D_i reduces to the global sum of beta(k). The k = 1 block
// always covers every node via its self pair, so D_i >= beta(1)/heads > 0.
inline std::shared_ptr<const std::vector<double>> grand_row_factors(
    const std::vector<PreparedOrder>& orders, int heads_used) {
  if (orders.empty()) throw error("grand_row_factors: no orders");
  const auto n = static_cast<std::size_t>(orders.front().heads.front()->num_nodes);
  std::vector<double> rowsum(n, 0.0);
  std::vector<std::uint8_t> covered(n);
  for (const auto& order : orders) {
    const double bk = beta(order.k) / static_cast<double>(heads_used);
    for (int h = 0; h < heads_used; ++h) {
      const auto& e = *order.heads[static_cast<std::size_t>(h)];
      std::fill(covered.begin(), covered.end(), 0);
      for (auto d : e.dst) covered[static_cast<std::size_t>(d)] = 1;
      for (std::size_t i = 0; i < n; ++i)
        if (covered[i]) rowsum[i] += bk;
    }
  }
  auto factors = std::make_shared<std::vector<double>>(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rowsum[i] > 0.0))
      throw error("grand_row_factors: node with zero operator row");
    (*factors)[i] = 1.0 / rowsum[i];
  }
  return factors;
}

struct HogaGrandModel {
  HogaConfig cfg;  // k_max, heads_first (heads of the shared block), hidden, dropout
  GrandConfig gcfg;
  std::int64_t d_in = 0;
  std::int64_t num_classes = 0;
  Tensor enc_w, enc_b, dec_w, dec_b;
  std::vector<std::vector<AttentionHeadParams>> attn;  // [k-1][head], shared across steps

  int heads() const { return cfg.heads_first; }

  static HogaGrandModel init(const HogaConfig& cfg, const GrandConfig& gcfg,
                             std::int64_t d_in, std::int64_t num_classes,
                             std::uint64_t seed) {
    if (cfg.k_max < 1) throw config_error("hoga-grand: K must be >= 1");
    if (cfg.heads_first < 1) throw config_error("hoga-grand: need >= 1 head");
    if (cfg.hidden < 1) throw config_error("hoga-grand: hidden dim must be >= 1");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
      throw config_error("hoga-grand: dropout must be in [0,1)");
    validate(gcfg);
    if (d_in < 1 || num_classes < 1) throw config_error("hoga-grand: bad widths");
    HogaGrandModel m;
    m.cfg = cfg;
    m.gcfg = gcfg;
    m.d_in = d_in;
    m.num_classes = num_classes;
    std::mt19937_64 rng(seed);
    m.enc_w = detail::glorot(rng, d_in, cfg.hidden, {d_in, cfg.hidden});
    m.enc_b = Tensor::zeros({cfg.hidden});
    for (int k = 1; k <= cfg.k_max; ++k) {
      std::vector<AttentionHeadParams> heads;
      for (int h = 0; h < cfg.heads_first; ++h)
        heads.push_back(detail::init_head(rng, cfg.hidden, cfg.hidden));
      m.attn.push_back(std::move(heads));
    }
    m.dec_w = detail::glorot(rng, cfg.hidden, num_classes, {cfg.hidden, num_classes});
    m.dec_b = Tensor::zeros({num_classes});
    return m;
  }

  std::vector<Tensor*> flat_params() {
    std::vector<Tensor*> out{&enc_w, &enc_b};
    for (auto& per_k : attn)
      for (auto& head : per_k) detail::collect(out, head);
    out.push_back(&dec_w);
    out.push_back(&dec_b);
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = enc_w.size() + enc_b.size() + dec_w.size() + dec_b.size();
    for (const auto& per_k : attn)
      for (const auto& head : per_k) n += head.count();
    return n;
  }

  std::vector<Tensor> bind(Tape* tape) const {
    auto grab = [&](const Tensor& t) { return tape ? tape->leaf(t) : t; };
    std::vector<Tensor> out{grab(enc_w), grab(enc_b)};
    for (const auto& per_k : attn)
      for (const auto& head : per_k) {
        out.push_back(grab(head.weight));
        out.push_back(grab(head.attn_dst));
        out.push_back(grab(head.attn_src));
      }
    out.push_back(grab(dec_w));
    out.push_back(grab(dec_b));
    return out;
  }

  // One Euler step of the diffusive flow moves x toward the row-normalized
  // multi-hop aggregate: x <- (1 - tau) x + tau (A_bar x). The literal flow
  // instead applies x <- x + tau (A_{1:K} x) with no normalization.
  Tensor forward(Tape* tape, const std::vector<Tensor>& bound,
                 std::shared_ptr<const SparseMatrix> x0,
                 const std::vector<PreparedOrder>& orders, bool train,
                 std::uint64_t dropout_seed,
                 std::vector<Tensor>* step_outputs = nullptr) const {
    if (static_cast<int>(orders.size()) != cfg.k_max)
      throw error("hoga-grand forward: expected one prepared order per k <= K");
    std::size_t cursor = 0;
    Tensor b_enc_w = bound[cursor++];
    Tensor b_enc_b = bound[cursor++];
    std::vector<std::vector<AttentionHeadParams>> params;
    for (int k = 0; k < cfg.k_max; ++k) {
      std::vector<AttentionHeadParams> heads;
      for (int h = 0; h < cfg.heads_first; ++h) {
        AttentionHeadParams p;
        p.weight = bound[cursor++];
        p.attn_dst = bound[cursor++];
        p.attn_src = bound[cursor++];
        heads.push_back(std::move(p));
      }
      params.push_back(std::move(heads));
    }
    Tensor b_dec_w = bound[cursor++];
    Tensor b_dec_b = bound[cursor++];

    auto dropped = sparse_dropout(std::move(x0), cfg.dropout,
                                  mix_seed(dropout_seed, 0), train);
    Tensor x = add_bias(tape, sparse_matmul(tape, dropped, b_enc_w), b_enc_b);

    auto factors = gcfg.literal_flow ? nullptr : grand_row_factors(orders, heads());
    const int steps = grand_steps(gcfg);
    const double tau = gcfg.step;
    for (int s = 0; s < steps; ++s) {
      try {
        Tensor agg;
        bool have = false;
        for (std::size_t ki = 0; ki < orders.size(); ++ki) {
          const auto& order = orders[ki];
          if (order.heads.front()->size() == 0) continue;
          Tensor head_sum;
          for (int h = 0; h < heads(); ++h) {
            const auto& batch = order.heads[static_cast<std::size_t>(h)];
            LayerInput in;
            in.dense = x;
            auto act = attention_head(tape, params[ki][static_cast<std::size_t>(h)],
                                      in, batch, cfg.leaky_slope);
            Tensor m = weighted_scatter(tape, act.alpha, batch, x);
            head_sum = h == 0 ? std::move(m) : add(tape, head_sum, m);
          }
          Tensor contribution =
              scale(tape, head_sum, beta(order.k) / static_cast<double>(heads()));
          agg = have ? add(tape, agg, contribution) : std::move(contribution);
          have = true;
        }
        if (!have) throw error("hoga-grand: every order is empty");
        if (gcfg.literal_flow) {
          x = add(tape, x, scale(tape, agg, tau));
        } else {
          Tensor y = row_scale(tape, agg, factors);
          x = add(tape, scale(tape, x, 1.0 - tau), scale(tape, y, tau));
        }
      } catch (const numeric_error& e) {
        throw numeric_error("hoga-grand diverged at Euler step " +
                            std::to_string(s) + ": " + e.what());
      }
      if (step_outputs) step_outputs->push_back(x);
    }
    return add_bias(tape, matmul(tape, x, b_dec_w), b_dec_b);
  }
};

}  // namespace hoga
