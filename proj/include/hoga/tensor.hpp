// Dense 64-bit tensors with reverse-mode differentiation on an eager tape,
// plus the segment-softmax and gather/scatter primitives sparse attention
// needs. The op set is deliberately small and closed: no broadcasting beyond
// bias-add, explicit shapes everywhere, so every backward rule below can be
// checked against finite differences (see grad_check).
//
// Tensors share immutable value buffers; every op allocates a fresh output
// buffer, so backward closures capture inputs without copying. A Tape is
// single-threaded; independent tapes may run concurrently. Any op producing
// a non-finite value throws numeric_error.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <unordered_set>
#include <vector>

#include "hoga/common.hpp"
#include "hoga/sparse.hpp"

namespace hoga {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::shared_ptr<std::vector<double>> buf;
  int id = -1;  // tape node id; -1 means constant w.r.t. any tape

  Tensor() = default;
  Tensor(std::vector<std::int64_t> s, std::vector<double> values)
      : shape(std::move(s)),
        buf(std::make_shared<std::vector<double>>(std::move(values))) {
    if (size() != static_cast<std::int64_t>(buf->size()))
      throw error("Tensor: shape does not match value count");
  }

  static Tensor zeros(std::vector<std::int64_t> s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  }
  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  std::int64_t size() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  std::int64_t rows() const { return shape.at(0); }
  std::int64_t cols() const { return shape.at(1); }
  bool tracked() const { return id >= 0; }

  const std::vector<double>& v() const { return *buf; }
  std::vector<double>& v_mut() { return *buf; }
  double at(std::int64_t i, std::int64_t j) const { return (*buf)[i * cols() + j]; }
  double item() const {
    if (size() != 1) throw error("Tensor::item: not a scalar");
    return (*buf)[0];
  }

  // Fresh buffer, same values. Needed before in-place mutation of a tensor
  // whose buffer may be shared (e.g. finite-difference perturbations).
  Tensor clone() const {
    Tensor t(shape, *buf);
    return t;
  }
};

class Tape {
 public:
  using BackFn = std::function<void(Tape&, std::span<const double>)>;

  // Registers a parameter leaf. The returned tensor shares the input buffer.
  Tensor leaf(const Tensor& t) {
    Tensor out = t;
    out.id = record(t.size(), nullptr);
    return out;
  }

  int record(std::int64_t out_size, BackFn back) {
    nodes_.push_back(Node{out_size, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Reverse sweep from a scalar loss. Gradients of all reachable nodes are
  // accumulated in exact reverse recording order.
  void backward(const Tensor& loss) {
    if (!loss.tracked()) throw error("backward: loss is not on this tape");
    if (loss.size() != 1) throw error("backward: loss must be a scalar");
    grads_.assign(nodes_.size(), {});
    grad_buffer(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
      if (grads_[static_cast<std::size_t>(id)].empty()) continue;
      const auto& node = nodes_[static_cast<std::size_t>(id)];
      if (node.back) node.back(*this, grads_[static_cast<std::size_t>(id)]);
    }
  }

  // Gradient buffer of a node, zero-initialized on first touch.
  std::vector<double>& grad_buffer(int id) {
    if (grads_.size() != nodes_.size())
      throw error("grad: backward has not been run on this tape");
    auto& g = grads_.at(static_cast<std::size_t>(id));
    if (g.empty())
      g.assign(static_cast<std::size_t>(nodes_[static_cast<std::size_t>(id)].size), 0.0);
    return g;
  }

  const std::vector<double>& grad(const Tensor& t) {
    if (!t.tracked()) throw error("grad: tensor is not on this tape");
    return grad_buffer(t.id);
  }

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::int64_t size;
    BackFn back;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

// Directed edge arrays consumed by gather/scatter/softmax ops. Passed around
// as shared_ptr so backward closures keep them alive.
struct EdgeIndex {
  std::vector<std::int32_t> dst, src;
  std::int64_t num_nodes = 0;

  std::size_t size() const { return dst.size(); }
};

using EdgeIndexPtr = std::shared_ptr<const EdgeIndex>;

namespace detail {

inline void check_finite(const Tensor& t, const char* op) {
  for (double x : t.v())
    if (!std::isfinite(x)) throw numeric_error(std::string(op) + ": non-finite value produced");
}

inline Tensor finish(Tape* tape, Tensor out, bool any_tracked, Tape::BackFn back,
                     const char* op) {
  check_finite(out, op);
  if (tape && any_tracked) out.id = tape->record(out.size(), std::move(back));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dense ops

inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.cols() != b.rows())
    throw error("matmul: shape mismatch");
  const std::int64_t n = a.rows(), p = a.cols(), m = b.cols();
  Tensor out = Tensor::zeros({n, m});
  {
    const double* av = a.v().data();
    const double* bv = b.v().data();
    double* ov = out.v_mut().data();
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t k = 0; k < p; ++k) {
        const double aik = av[i * p + k];
        if (aik == 0.0) continue;
        const double* brow = bv + k * m;
        double* orow = ov + i * m;
        for (std::int64_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
      }
  }
  const int aid = a.id, bid = b.id;
  auto back = [a, b, aid, bid, n, p, m](Tape& t, std::span<const double> g) {
    if (aid >= 0) {
      auto& ga = t.grad_buffer(aid);
      const double* bv = b.v().data();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t k = 0; k < p; ++k) {
          double acc = 0.0;
          const double* grow = g.data() + i * m;
          const double* brow = bv + k * m;
          for (std::int64_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[static_cast<std::size_t>(i * p + k)] += acc;
        }
    }
    if (bid >= 0) {
      auto& gb = t.grad_buffer(bid);
      const double* av = a.v().data();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t k = 0; k < p; ++k) {
          const double aik = av[i * p + k];
          if (aik == 0.0) continue;
          const double* grow = g.data() + i * m;
          double* gbrow = gb.data() + k * m;
          for (std::int64_t j = 0; j < m; ++j) gbrow[j] += aik * grow[j];
        }
    }
  };
  return detail::finish(tape, std::move(out), a.tracked() || b.tracked(),
                        std::move(back), "matmul");
}

// Constant sparse matrix times dense weights; gradient flows into w only.
// The matrix is captured by shared_ptr so the backward pass keeps it alive.
inline Tensor sparse_matmul(Tape* tape, std::shared_ptr<const SparseMatrix> sp,
                            const Tensor& w) {
  const SparseMatrix& s = *sp;
  if (w.shape.size() != 2 || s.cols != w.rows())
    throw error("sparse_matmul: shape mismatch");
  const std::int64_t n = s.rows, m = w.cols();
  Tensor out = Tensor::zeros({n, m});
  {
    const double* wv = w.v().data();
    double* ov = out.v_mut().data();
    for (std::int64_t i = 0; i < n; ++i) {
      auto cols = s.row_cols(i);
      auto vals = s.row_vals(i);
      double* orow = ov + i * m;
      for (std::size_t e = 0; e < cols.size(); ++e) {
        const double sv = vals[e];
        const double* wrow = wv + static_cast<std::int64_t>(cols[e]) * m;
        for (std::int64_t j = 0; j < m; ++j) orow[j] += sv * wrow[j];
      }
    }
  }
  const int wid = w.id;
  auto back = [sp, wid, n, m](Tape& t, std::span<const double> g) {
    if (wid < 0) return;
    auto& gw = t.grad_buffer(wid);
    for (std::int64_t i = 0; i < n; ++i) {
      auto cols = sp->row_cols(i);
      auto vals = sp->row_vals(i);
      const double* grow = g.data() + i * m;
      for (std::size_t e = 0; e < cols.size(); ++e) {
        const double sv = vals[e];
        double* gwrow = gw.data() + static_cast<std::int64_t>(cols[e]) * m;
        for (std::int64_t j = 0; j < m; ++j) gwrow[j] += sv * grow[j];
      }
    }
  };
  return detail::finish(tape, std::move(out), w.tracked(), std::move(back),
                        "sparse_matmul");
}

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw error("add: shape mismatch");
  Tensor out = Tensor::zeros(a.shape);
  for (std::size_t i = 0; i < a.v().size(); ++i)
    out.v_mut()[i] = a.v()[i] + b.v()[i];
  const int aid = a.id, bid = b.id;
  auto back = [aid, bid](Tape& t, std::span<const double> g) {
    if (aid >= 0) {
      auto& ga = t.grad_buffer(aid);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (bid >= 0) {
      auto& gb = t.grad_buffer(bid);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  };
  return detail::finish(tape, std::move(out), a.tracked() || b.tracked(),
                        std::move(back), "add");
}

// x[n x d] + b[d], the one permitted broadcast.
inline Tensor add_bias(Tape* tape, const Tensor& x, const Tensor& b) {
  if (x.shape.size() != 2 || b.size() != x.cols())
    throw error("add_bias: shape mismatch");
  const std::int64_t n = x.rows(), d = x.cols();
  Tensor out = Tensor::zeros(x.shape);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      out.v_mut()[i * d + j] = x.v()[i * d + j] + b.v()[static_cast<std::size_t>(j)];
  const int xid = x.id, bid = b.id;
  auto back = [xid, bid, n, d](Tape& t, std::span<const double> g) {
    if (xid >= 0) {
      auto& gx = t.grad_buffer(xid);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (bid >= 0) {
      auto& gb = t.grad_buffer(bid);
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < d; ++j)
          gb[static_cast<std::size_t>(j)] += g[i * d + j];
    }
  };
  return detail::finish(tape, std::move(out), x.tracked() || b.tracked(),
                        std::move(back), "add_bias");
}

inline Tensor scale(Tape* tape, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape);
  for (std::size_t i = 0; i < x.v().size(); ++i) out.v_mut()[i] = c * x.v()[i];
  const int xid = x.id;
  auto back = [xid, c](Tape& t, std::span<const double> g) {
    if (xid < 0) return;
    auto& gx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  };
  return detail::finish(tape, std::move(out), x.tracked(), std::move(back), "scale");
}

inline Tensor ewise_mul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw error("ewise_mul: shape mismatch");
  Tensor out = Tensor::zeros(a.shape);
  for (std::size_t i = 0; i < a.v().size(); ++i)
    out.v_mut()[i] = a.v()[i] * b.v()[i];
  const int aid = a.id, bid = b.id;
  auto back = [a, b, aid, bid](Tape& t, std::span<const double> g) {
    if (aid >= 0) {
      auto& ga = t.grad_buffer(aid);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.v()[i];
    }
    if (bid >= 0) {
      auto& gb = t.grad_buffer(bid);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.v()[i];
    }
  };
  return detail::finish(tape, std::move(out), a.tracked() || b.tracked(),
                        std::move(back), "ewise_mul");
}

inline Tensor sum_all(Tape* tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.v()) acc += v;
  Tensor out = Tensor::scalar(acc);
  const int xid = x.id;
  const std::int64_t sz = x.size();
  auto back = [xid, sz](Tape& t, std::span<const double> g) {
    if (xid < 0) return;
    auto& gx = t.grad_buffer(xid);
    for (std::int64_t i = 0; i < sz; ++i) gx[static_cast<std::size_t>(i)] += g[0];
  };
  return detail::finish(tape, std::move(out), x.tracked(), std::move(back), "sum_all");
}

inline Tensor leaky_relu(Tape* tape, const Tensor& x, double slope) {
  Tensor out = Tensor::zeros(x.shape);
  for (std::size_t i = 0; i < x.v().size(); ++i) {
    double v = x.v()[i];
    out.v_mut()[i] = v > 0.0 ? v : slope * v;
  }
  const int xid = x.id;
  auto back = [x, xid, slope](Tape& t, std::span<const double> g) {
    if (xid < 0) return;
    auto& gx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i] += (x.v()[i] > 0.0 ? 1.0 : slope) * g[i];
  };
  return detail::finish(tape, std::move(out), x.tracked(), std::move(back),
                        "leaky_relu");
}

inline Tensor elu(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape);
  for (std::size_t i = 0; i < x.v().size(); ++i) {
    double v = x.v()[i];
    out.v_mut()[i] = v > 0.0 ? v : std::expm1(v);
  }
  const int xid = x.id;
  const Tensor saved = out;  // elu'(v) = out + 1 for v <= 0
  auto back = [x, saved, xid](Tape& t, std::span<const double> g) {
    if (xid < 0) return;
    auto& gx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i] += (x.v()[i] > 0.0 ? 1.0 : saved.v()[i] + 1.0) * g[i];
  };
  return detail::finish(tape, std::move(out), x.tracked(), std::move(back), "elu");
}

// Inverted dropout: survivors are rescaled by 1/(1-p) so eval is an identity
// (and is literally a pass-through here, preserving the input node).
inline Tensor dropout(Tape* tape, const Tensor& x, double p, std::uint64_t seed,
                      bool train) {
  if (p < 0.0 || p >= 1.0) throw error("dropout: p must be in [0,1)");
  if (!train || p == 0.0) return x;
  std::mt19937_64 rng(seed);
  auto mask = std::make_shared<std::vector<std::uint8_t>>(x.v().size());
  const double inv = 1.0 / (1.0 - p);
  Tensor out = Tensor::zeros(x.shape);
  for (std::size_t i = 0; i < x.v().size(); ++i) {
    bool keep = uniform_real01(rng) >= p;
    (*mask)[i] = keep;
    out.v_mut()[i] = keep ? x.v()[i] * inv : 0.0;
  }
  const int xid = x.id;
  auto back = [mask, xid, inv](Tape& t, std::span<const double> g) {
    if (xid < 0) return;
    auto& gx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i)
      if ((*mask)[i]) gx[i] += inv * g[i];
  };
  return detail::finish(tape, std::move(out), x.tracked(), std::move(back), "dropout");
}

// ---------------------------------------------------------------------------
// Sparse attention primitives

// out[e] = p[dst(e)] + q[src(e)] for column vectors p, q of length n.
inline Tensor edge_gather_sum(Tape* tape, const Tensor& p, const Tensor& q,
                              const EdgeIndexPtr& ep) {
  const EdgeIndex& e = *ep;
  if (p.size() != e.num_nodes || q.size() != e.num_nodes)
    throw error("edge_gather_sum: vector length mismatch");
  const std::int64_t m = static_cast<std::int64_t>(e.size());
  Tensor out = Tensor::zeros({m});
  for (std::int64_t i = 0; i < m; ++i)
    out.v_mut()[static_cast<std::size_t>(i)] =
        p.v()[static_cast<std::size_t>(e.dst[static_cast<std::size_t>(i)])] +
        q.v()[static_cast<std::size_t>(e.src[static_cast<std::size_t>(i)])];
  const int pid = p.id, qid = q.id;
  auto back = [pid, qid, ep](Tape& t, std::span<const double> g) {
    if (pid >= 0) {
      auto& gp = t.grad_buffer(pid);
      for (std::size_t i = 0; i < g.size(); ++i)
        gp[static_cast<std::size_t>(ep->dst[i])] += g[i];
    }
    if (qid >= 0) {
      auto& gq = t.grad_buffer(qid);
      for (std::size_t i = 0; i < g.size(); ++i)
        gq[static_cast<std::size_t>(ep->src[i])] += g[i];
    }
  };
  return detail::finish(tape, std::move(out), p.tracked() || q.tracked(),
                        std::move(back), "edge_gather_sum");
}

// Softmax within each segment, max-subtracted for stability. Segment ids must
// lie in [0, num_segments); every segment named by `segments` is normalized
// independently and sums to 1.
inline Tensor segment_softmax(Tape* tape, const Tensor& scores,
                              const std::vector<std::int32_t>& segments,
                              std::int64_t num_segments) {
  if (scores.size() != static_cast<std::int64_t>(segments.size()))
    throw error("segment_softmax: segment id count mismatch");
  if (scores.size() == 0) throw error("segment_softmax: empty segment set");
  const std::size_t m = segments.size();
  const auto ns = static_cast<std::size_t>(num_segments);
  for (auto s : segments)
    if (s < 0 || s >= num_segments) throw error("segment_softmax: segment id out of range");

  std::vector<double> seg_max(ns, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m; ++i)
    seg_max[static_cast<std::size_t>(segments[i])] =
        std::max(seg_max[static_cast<std::size_t>(segments[i])], scores.v()[i]);
  Tensor out = Tensor::zeros(scores.shape);
  std::vector<double> seg_sum(ns, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double e = std::exp(scores.v()[i] - seg_max[static_cast<std::size_t>(segments[i])]);
    out.v_mut()[i] = e;
    seg_sum[static_cast<std::size_t>(segments[i])] += e;
  }
  for (std::size_t i = 0; i < m; ++i)
    out.v_mut()[i] /= seg_sum[static_cast<std::size_t>(segments[i])];

  const int sid = scores.id;
  const Tensor y = out;
  auto seg = std::make_shared<std::vector<std::int32_t>>(segments);
  auto back = [sid, y, seg, ns](Tape& t, std::span<const double> g) {
    if (sid < 0) return;
    // d/ds_e = y_e * (g_e - sum_{e' in seg} g_{e'} y_{e'})
    std::vector<double> seg_dot(ns, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
      seg_dot[static_cast<std::size_t>((*seg)[i])] += g[i] * y.v()[i];
    auto& gs = t.grad_buffer(sid);
    for (std::size_t i = 0; i < g.size(); ++i)
      gs[i] += y.v()[i] * (g[i] - seg_dot[static_cast<std::size_t>((*seg)[i])]);
  };
  return detail::finish(tape, std::move(out), scores.tracked(), std::move(back),
                        "segment_softmax");
}

// Sparse A * X: out[i] = sum over edges with dst i of alpha[e] * x[src(e)].
// Rows with no incident edge stay zero.
inline Tensor weighted_scatter(Tape* tape, const Tensor& alpha,
                               const EdgeIndexPtr& ep, const Tensor& x) {
  const EdgeIndex& e = *ep;
  if (alpha.size() != static_cast<std::int64_t>(e.size()))
    throw error("weighted_scatter: alpha length mismatch");
  if (x.shape.size() != 2) throw error("weighted_scatter: x must be 2-D");
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e.dst[i] < 0 || e.dst[i] >= e.num_nodes || e.src[i] < 0 ||
        e.src[i] >= x.rows())
      throw error("weighted_scatter: edge index out of range");
  const std::int64_t d = x.cols();
  Tensor out = Tensor::zeros({e.num_nodes, d});
  {
    double* ov = out.v_mut().data();
    const double* xv = x.v().data();
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double a = alpha.v()[i];
      double* orow = ov + static_cast<std::int64_t>(e.dst[i]) * d;
      const double* xrow = xv + static_cast<std::int64_t>(e.src[i]) * d;
      for (std::int64_t j = 0; j < d; ++j) orow[j] += a * xrow[j];
    }
  }
  const int aid = alpha.id, xid = x.id;
  auto back = [alpha, x, aid, xid, ep, d](Tape& t, std::span<const double> g) {
    if (aid >= 0) {
      auto& ga = t.grad_buffer(aid);
      const double* xv = x.v().data();
      for (std::size_t i = 0; i < ep->size(); ++i) {
        const double* grow = g.data() + static_cast<std::int64_t>(ep->dst[i]) * d;
        const double* xrow = xv + static_cast<std::int64_t>(ep->src[i]) * d;
        double acc = 0.0;
        for (std::int64_t j = 0; j < d; ++j) acc += grow[j] * xrow[j];
        ga[i] += acc;
      }
    }
    if (xid >= 0) {
      auto& gx = t.grad_buffer(xid);
      for (std::size_t i = 0; i < ep->size(); ++i) {
        const double a = alpha.v()[i];
        const double* grow = g.data() + static_cast<std::int64_t>(ep->dst[i]) * d;
        double* gxrow = gx.data() + static_cast<std::int64_t>(ep->src[i]) * d;
        for (std::int64_t j = 0; j < d; ++j) gxrow[j] += a * grow[j];
      }
    }
  };
  return detail::finish(tape, std::move(out), alpha.tracked() || x.tracked(),
                        std::move(back), "weighted_scatter");
}

// Row-wise scaling by a constant per-node factor (GRAND normalization).
inline Tensor row_scale(Tape* tape, const Tensor& x,
                        std::shared_ptr<const std::vector<double>> factors) {
  if (x.shape.size() != 2 ||
      x.rows() != static_cast<std::int64_t>(factors->size()))
    throw error("row_scale: factor length mismatch");
  const std::int64_t n = x.rows(), d = x.cols();
  Tensor out = Tensor::zeros(x.shape);
  for (std::int64_t i = 0; i < n; ++i) {
    const double f = (*factors)[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < d; ++j)
      out.v_mut()[i * d + j] = f * x.v()[i * d + j];
  }
  const int xid = x.id;
  auto back = [xid, factors, n, d](Tape& t, std::span<const double> g) {
    if (xid < 0) return;
    auto& gx = t.grad_buffer(xid);
    for (std::int64_t i = 0; i < n; ++i) {
      const double f = (*factors)[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < d; ++j) gx[i * d + j] += f * g[i * d + j];
    }
  };
  return detail::finish(tape, std::move(out), x.tracked(), std::move(back),
                        "row_scale");
}

// Mean over masked nodes of -log softmax(logits)[label].
inline Tensor nll_from_log_softmax(Tape* tape, const Tensor& logits,
                                   const std::vector<std::int32_t>& labels,
                                   const std::vector<std::uint8_t>& mask) {
  if (logits.shape.size() != 2) throw error("nll: logits must be 2-D");
  const std::int64_t n = logits.rows(), c = logits.cols();
  if (static_cast<std::int64_t>(labels.size()) != n ||
      static_cast<std::int64_t>(mask.size()) != n)
    throw error("nll: label/mask length mismatch");
  std::int64_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw error("nll: empty mask");

  // log softmax per masked row, max-subtracted
  double loss = 0.0;
  auto log_z = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n), 0.0);
  auto row_max = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    if (labels[static_cast<std::size_t>(i)] < 0 ||
        labels[static_cast<std::size_t>(i)] >= c)
      throw error("nll: label out of range");
    double mx = logits.v()[static_cast<std::size_t>(i * c)];
    for (std::int64_t j = 1; j < c; ++j)
      mx = std::max(mx, logits.v()[static_cast<std::size_t>(i * c + j)]);
    double z = 0.0;
    for (std::int64_t j = 0; j < c; ++j)
      z += std::exp(logits.v()[static_cast<std::size_t>(i * c + j)] - mx);
    (*row_max)[static_cast<std::size_t>(i)] = mx;
    (*log_z)[static_cast<std::size_t>(i)] = std::log(z);
    const double ls =
        logits.v()[static_cast<std::size_t>(i * c + labels[static_cast<std::size_t>(i)])] -
        mx - std::log(z);
    loss -= ls;
  }
  loss /= static_cast<double>(count);

  Tensor out = Tensor::scalar(loss);
  const int lid = logits.id;
  auto lab = std::make_shared<std::vector<std::int32_t>>(labels);
  auto msk = std::make_shared<std::vector<std::uint8_t>>(mask);
  const Tensor lg = logits;
  auto back = [lid, lab, msk, lg, row_max, log_z, n, c, count](
                  Tape& t, std::span<const double> g) {
    if (lid < 0) return;
    auto& gl = t.grad_buffer(lid);
    const double scale = g[0] / static_cast<double>(count);
    for (std::int64_t i = 0; i < n; ++i) {
      if (!(*msk)[static_cast<std::size_t>(i)]) continue;
      const double mx = (*row_max)[static_cast<std::size_t>(i)];
      const double lz = (*log_z)[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < c; ++j) {
        const double p =
            std::exp(lg.v()[static_cast<std::size_t>(i * c + j)] - mx - lz);
        const double onehot =
            (j == (*lab)[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        gl[static_cast<std::size_t>(i * c + j)] += scale * (p - onehot);
      }
    }
  };
  return detail::finish(tape, std::move(out), logits.tracked(), std::move(back),
                        "nll_from_log_softmax");
}

// ---------------------------------------------------------------------------
// Finite-difference validation harness

// Rebuilds f at theta +/- eps per coordinate (a seeded subsample of at most
// max_coords coordinates on large parameters) and returns the worst relative
// error against the tape gradient.
inline double grad_check(
    const std::function<Tensor(Tape*, const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& params, double eps = 1e-5,
    std::int64_t max_coords = 100, std::uint64_t seed = 0) {
  if (eps <= 0.0) throw error("grad_check: eps must be positive");

  Tape tape;
  std::vector<Tensor> bound;
  bound.reserve(params.size());
  for (const auto& p : params) bound.push_back(tape.leaf(p));
  Tensor loss = f(&tape, bound);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(bound.size());
  for (const auto& b : bound) analytic.push_back(tape.grad(b));

  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const std::int64_t sz = params[pi].size();
    std::vector<std::int64_t> coords;
    if (sz <= max_coords) {
      coords.resize(static_cast<std::size_t>(sz));
      std::iota(coords.begin(), coords.end(), 0);
    } else {
      std::unordered_set<std::int64_t> picked;
      while (static_cast<std::int64_t>(picked.size()) < max_coords)
        picked.insert(static_cast<std::int64_t>(
            uniform_index(rng, static_cast<std::uint64_t>(sz))));
      coords.assign(picked.begin(), picked.end());
      std::sort(coords.begin(), coords.end());
    }
    for (std::int64_t c : coords) {
      auto eval_at = [&](double delta) {
        std::vector<Tensor> shifted = params;
        shifted[pi] = params[pi].clone();
        shifted[pi].v_mut()[static_cast<std::size_t>(c)] += delta;
        return f(nullptr, shifted).item();
      };
      const double fd = (eval_at(eps) - eval_at(-eps)) / (2.0 * eps);
      const double an = analytic[pi][static_cast<std::size_t>(c)];
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-3});
      worst = std::max(worst, std::abs(an - fd) / denom);
    }
  }
  return worst;
}

}  // namespace hoga
