#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "readapt/autodiff/tensor.hpp"
#include "readapt/errors.hpp"

namespace readapt {

/// A named, persistent tensor that graphs can reference. Frozen parameters
/// (trainable == false) enter a graph but never receive gradients.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
};

using NodeId = std::size_t;

enum class OpKind {
  kParameter,
  kConstant,
  kMatMul,
  kMatMulNT,
  kAdd,
  kAddRow,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kTanh,
  kSigmoid,
  kRelu,
  kSquare,
  kConcatCols,
  kConcatRows,
  kSliceCols,
  kGatherRows,
  kMaxOverTime,
  kSum,
  kMean,
  kDropout,
  kCosine,
  kNormalizeRows,
  kPick,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::kParameter: return "parameter";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kMatMulNT: return "matmul_nt";
    case OpKind::kAdd: return "add";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kSquare: return "square";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kMaxOverTime: return "max_over_time";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kDropout: return "dropout";
    case OpKind::kCosine: return "cosine";
    case OpKind::kNormalizeRows: return "normalize_rows";
    case OpKind::kPick: return "pick";
  }
  return "?";
}

class Graph;

/// Lazily-allocated gradient accumulators used during one backward sweep.
class GradBuffer {
 public:
  GradBuffer(const Graph& g, std::size_t n) : graph_(g), grads_(n), present_(n, false) {}

  bool wants(NodeId id) const;
  Tensor& at(NodeId id);
  bool has(NodeId id) const { return present_[id]; }
  Tensor& raw(NodeId id) { return grads_[id]; }

 private:
  const Graph& graph_;
  std::vector<Tensor> grads_;
  std::vector<bool> present_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradBuffer& grads)>;

/// Gradients of a scalar loss, keyed by parameter node id.
using Gradients = std::unordered_map<NodeId, Tensor>;

/// Append-only computation graph with eager forward evaluation and
/// reverse-mode differentiation.
///
/// Every op computes its output on construction; inputs always precede the
/// node that consumes them, so the node list is a topological order.
class Graph {
 public:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Graph() = default;
  // Backward closures hold `this`; a graph stays where it was built.
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const {
    check(id);
    return nodes_[id];
  }
  const Tensor& value(NodeId id) const { return node(id).value; }
  bool requires_grad(NodeId id) const { return node(id).requires_grad; }
  Parameter* parameter_of(NodeId id) const { return node(id).param; }

  /// Returns the node bound to p, creating it on first use.
  NodeId parameter(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return it->second;
    Node n{OpKind::kParameter, {}, p.value, p.trainable, &p, {}};
    NodeId id = push(std::move(n));
    param_nodes_.emplace(&p, id);
    return id;
  }

  NodeId constant(Tensor t) { return push(Node{OpKind::kConstant, {}, std::move(t), false, nullptr, {}}); }

  NodeId matmul(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    if (B.rows() != k) dim_error(OpKind::kMatMul, A, B);
    Tensor out = Tensor::matrix(n, m);
    gemm(A, B, out, false);
    return make(OpKind::kMatMul, {a, b}, std::move(out), [this, a, b](const Tensor& go, GradBuffer& gb) {
      const Tensor& A = value(a);
      const Tensor& B = value(b);
      const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
      if (gb.wants(a)) {
        Tensor& ga = gb.at(a);  // go(n,m) * B^T(m,k)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double g = go[i * m + j];
            if (g == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += g * B[p * m + j];
          }
      }
      if (gb.wants(b)) {
        Tensor& gbb = gb.at(b);  // A^T(k,n) * go(n,m)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) gbb[p * m + j] += av * go[i * m + j];
          }
      }
    });
  }

  /// a * b^T
  NodeId matmul_nt(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
    if (B.cols() != k) dim_error(OpKind::kMatMulNT, A, B);
    Tensor out = Tensor::matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += A[i * k + p] * B[j * k + p];
        out[i * m + j] = s;
      }
    return make(OpKind::kMatMulNT, {a, b}, std::move(out), [this, a, b](const Tensor& go, GradBuffer& gb) {
      const Tensor& A = value(a);
      const Tensor& B = value(b);
      const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
      if (gb.wants(a)) {
        Tensor& ga = gb.at(a);  // go(n,m) * B(m,k)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double g = go[i * m + j];
            if (g == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += g * B[j * k + p];
          }
      }
      if (gb.wants(b)) {
        Tensor& gbb = gb.at(b);  // go^T(m,n) * A(n,k)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double g = go[i * m + j];
            if (g == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) gbb[j * k + p] += g * A[i * k + p];
          }
      }
    });
  }

  NodeId add(NodeId a, NodeId b) { return binary(OpKind::kAdd, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary(OpKind::kSub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary(OpKind::kMul, a, b); }

  /// Adds a 1×c row to every row of a (bias broadcast).
  NodeId add_row(NodeId a, NodeId row) {
    const Tensor& A = value(a);
    const Tensor& R = value(row);
    if (R.size() != A.cols()) dim_error(OpKind::kAddRow, A, R);
    Tensor out = A;
    const std::size_t c = A.cols();
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] += R[j];
    return make(OpKind::kAddRow, {a, row}, std::move(out), [this, a, row](const Tensor& go, GradBuffer& gb) {
      if (gb.wants(a)) gb.at(a) += go;
      if (gb.wants(row)) {
        Tensor& gr = gb.at(row);
        const std::size_t c = gr.size();
        for (std::size_t i = 0; i < go.size(); ++i) gr[i % c] += go[i];
      }
    });
  }

  NodeId scale(NodeId a, double s) {
    Tensor out = value(a);
    for (auto& v : out.data()) v *= s;
    return make(OpKind::kScale, {a}, std::move(out), [a, s](const Tensor& go, GradBuffer& gb) {
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += s * go[i];
    });
  }

  NodeId add_scalar(NodeId a, double s) {
    Tensor out = value(a);
    for (auto& v : out.data()) v += s;
    return make(OpKind::kAddScalar, {a}, std::move(out),
                [a](const Tensor& go, GradBuffer& gb) { gb.at(a) += go; });
  }

  NodeId tanh(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data()) v = std::tanh(v);
    NodeId id = make(OpKind::kTanh, {a}, std::move(out), {});
    nodes_[id].backward = [this, a, id](const Tensor& go, GradBuffer& gb) {
      const Tensor& y = value(id);
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * (1.0 - y[i] * y[i]);
    };
    return id;
  }

  NodeId sigmoid(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
    NodeId id = make(OpKind::kSigmoid, {a}, std::move(out), {});
    nodes_[id].backward = [this, a, id](const Tensor& go, GradBuffer& gb) {
      const Tensor& y = value(id);
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * y[i] * (1.0 - y[i]);
    };
    return id;
  }

  NodeId relu(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return make(OpKind::kRelu, {a}, std::move(out), [this, a](const Tensor& go, GradBuffer& gb) {
      const Tensor& x = value(a);
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < go.size(); ++i)
        if (x[i] > 0.0) g[i] += go[i];
    });
  }

  NodeId square(NodeId a) {
    Tensor out = value(a);
    for (auto& v : out.data()) v = v * v;
    return make(OpKind::kSquare, {a}, std::move(out), [this, a](const Tensor& go, GradBuffer& gb) {
      const Tensor& x = value(a);
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += 2.0 * x[i] * go[i];
    });
  }

  /// Horizontal concatenation; all parts must have the same row count.
  NodeId concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t r = value(parts[0]).rows();
    std::size_t c = 0;
    for (NodeId p : parts) {
      if (value(p).rows() != r) dim_error(OpKind::kConcatCols, value(parts[0]), value(p));
      c += value(p).cols();
    }
    Tensor out = Tensor::matrix(r, c);
    std::size_t off = 0;
    for (NodeId p : parts) {
      const Tensor& P = value(p);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < P.cols(); ++j) out(i, off + j) = P(i, j);
      off += P.cols();
    }
    return make(OpKind::kConcatCols, parts, std::move(out), [this, parts](const Tensor& go, GradBuffer& gb) {
      const std::size_t c = go.cols();
      std::size_t off = 0;
      for (NodeId p : parts) {
        const std::size_t pc = value(p).cols();
        if (gb.wants(p)) {
          Tensor& g = gb.at(p);
          for (std::size_t i = 0; i < go.rows(); ++i)
            for (std::size_t j = 0; j < pc; ++j) g[i * pc + j] += go[i * c + off + j];
        }
        off += pc;
      }
    });
  }

  /// Vertical concatenation; all parts must have the same column count.
  NodeId concat_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: no inputs");
    const std::size_t c = value(parts[0]).cols();
    std::size_t r = 0;
    for (NodeId p : parts) {
      if (value(p).cols() != c) dim_error(OpKind::kConcatRows, value(parts[0]), value(p));
      r += value(p).rows();
    }
    std::vector<double> d;
    d.reserve(r * c);
    for (NodeId p : parts) d.insert(d.end(), value(p).values().begin(), value(p).values().end());
    return make(OpKind::kConcatRows, parts, Tensor::matrix(r, c, std::move(d)),
                [this, parts](const Tensor& go, GradBuffer& gb) {
                  std::size_t off = 0;
                  for (NodeId p : parts) {
                    const std::size_t n = value(p).size();
                    if (gb.wants(p)) {
                      Tensor& g = gb.at(p);
                      for (std::size_t i = 0; i < n; ++i) g[i] += go[off + i];
                    }
                    off += n;
                  }
                });
  }

  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t count) {
    const Tensor& A = value(a);
    if (count == 0 || begin + count > A.cols())
      throw DimensionError(std::string("slice_cols: [") + std::to_string(begin) + "," +
                           std::to_string(begin + count) + ") out of " + shape_str(A.shape()));
    Tensor out = Tensor::matrix(A.rows(), count);
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < count; ++j) out(i, j) = A(i, begin + j);
    return make(OpKind::kSliceCols, {a}, std::move(out), [this, a, begin, count](const Tensor& go, GradBuffer& gb) {
      Tensor& g = gb.at(a);
      const std::size_t c = value(a).cols();
      for (std::size_t i = 0; i < go.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) g[i * c + begin + j] += go[i * count + j];
    });
  }

  /// Row lookup (embedding gather); ids may repeat.
  NodeId gather_rows(NodeId table, std::vector<std::size_t> ids) {
    const Tensor& T = value(table);
    if (ids.empty()) throw ContractError("gather_rows: no ids");
    const std::size_t c = T.cols();
    Tensor out = Tensor::matrix(ids.size(), c);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= T.rows())
        throw DimensionError("gather_rows: id " + std::to_string(ids[i]) + " out of " +
                             shape_str(T.shape()));
      for (std::size_t j = 0; j < c; ++j) out(i, j) = T(ids[i], j);
    }
    return make(OpKind::kGatherRows, {table}, std::move(out),
                [table, ids = std::move(ids), c](const Tensor& go, GradBuffer& gb) {
                  Tensor& g = gb.at(table);
                  for (std::size_t i = 0; i < ids.size(); ++i)
                    for (std::size_t j = 0; j < c; ++j) g[ids[i] * c + j] += go[i * c + j];
                });
  }

  /// Elementwise max across a sequence of equally-shaped nodes. The gradient
  /// goes to the earliest step holding the maximum.
  NodeId max_over_time(const std::vector<NodeId>& steps) {
    if (steps.empty()) throw ContractError("max_over_time: empty sequence");
    const Tensor& first = value(steps[0]);
    Tensor out = first;
    std::vector<std::size_t> arg(first.size(), 0);
    for (std::size_t t = 1; t < steps.size(); ++t) {
      const Tensor& X = value(steps[t]);
      if (X.shape() != first.shape()) dim_error(OpKind::kMaxOverTime, first, X);
      for (std::size_t i = 0; i < X.size(); ++i)
        if (X[i] > out[i]) {
          out[i] = X[i];
          arg[i] = t;
        }
    }
    return make(OpKind::kMaxOverTime, steps, std::move(out),
                [steps, arg = std::move(arg)](const Tensor& go, GradBuffer& gb) {
                  for (std::size_t i = 0; i < arg.size(); ++i) {
                    NodeId src = steps[arg[i]];
                    if (gb.wants(src)) gb.at(src)[i] += go[i];
                  }
                });
  }

  NodeId sum(NodeId a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    return make(OpKind::kSum, {a}, Tensor::scalar(s), [a](const Tensor& go, GradBuffer& gb) {
      Tensor& g = gb.at(a);
      for (auto& v : g.data()) v += go[0];
    });
  }

  NodeId mean(NodeId a) {
    const Tensor& A = value(a);
    double s = 0.0;
    for (double v : A.data()) s += v;
    const double n = static_cast<double>(A.size());
    return make(OpKind::kMean, {a}, Tensor::scalar(s / n), [a, n](const Tensor& go, GradBuffer& gb) {
      Tensor& g = gb.at(a);
      for (auto& v : g.data()) v += go[0] / n;
    });
  }

  /// Multiplies by a caller-supplied mask (already scaled by 1/(1-p)).
  NodeId dropout(NodeId a, Tensor mask) {
    const Tensor& A = value(a);
    if (mask.size() != A.size()) dim_error(OpKind::kDropout, A, mask);
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return make(OpKind::kDropout, {a}, std::move(out), [a, mask = std::move(mask)](const Tensor& go, GradBuffer& gb) {
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * mask[i];
    });
  }

  /// Cosine similarity of two equally-sized tensors, as a scalar.
  NodeId cosine(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.size() != B.size()) dim_error(OpKind::kCosine, A, B);
    const double c = readapt::cosine(A.data(), B.data());
    return make(OpKind::kCosine, {a, b}, Tensor::scalar(c), [this, a, b, c](const Tensor& go, GradBuffer& gb) {
      const Tensor& A = value(a);
      const Tensor& B = value(b);
      const double na = norm2(A.data()), nb = norm2(B.data());
      const double g = go[0];
      if (gb.wants(a)) {
        Tensor& ga = gb.at(a);
        for (std::size_t i = 0; i < A.size(); ++i)
          ga[i] += g * (B[i] / (na * nb) - c * A[i] / (na * na));
      }
      if (gb.wants(b)) {
        Tensor& gbb = gb.at(b);
        for (std::size_t i = 0; i < B.size(); ++i)
          gbb[i] += g * (A[i] / (na * nb) - c * B[i] / (nb * nb));
      }
    });
  }

  /// Scales every row to unit Euclidean norm.
  NodeId normalize_rows(NodeId a) {
    const Tensor& A = value(a);
    const std::size_t r = A.rows(), c = A.cols();
    Tensor out = A;
    std::vector<double> norms(r);
    for (std::size_t i = 0; i < r; ++i) {
      norms[i] = norm2(A.row(i));
      if (norms[i] == 0.0) throw ContractError("normalize_rows: zero row " + std::to_string(i));
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= norms[i];
    }
    NodeId id = make(OpKind::kNormalizeRows, {a}, std::move(out), {});
    nodes_[id].backward = [this, a, id, norms = std::move(norms)](const Tensor& go, GradBuffer& gb) {
      const Tensor& Y = value(id);
      const std::size_t c = Y.cols();
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < Y.rows(); ++i) {
        double yg = 0.0;
        for (std::size_t j = 0; j < c; ++j) yg += Y[i * c + j] * go[i * c + j];
        for (std::size_t j = 0; j < c; ++j)
          g[i * c + j] += (go[i * c + j] - Y[i * c + j] * yg) / norms[i];
      }
    };
    return id;
  }

  /// Selects entries (row, col) of a matrix into an n×1 column.
  NodeId pick(NodeId a, std::vector<std::pair<std::size_t, std::size_t>> at) {
    const Tensor& A = value(a);
    if (at.empty()) throw ContractError("pick: no positions");
    Tensor out = Tensor::matrix(at.size(), 1);
    for (std::size_t i = 0; i < at.size(); ++i) {
      if (at[i].first >= A.rows() || at[i].second >= A.cols())
        throw DimensionError("pick: position out of " + shape_str(A.shape()));
      out[i] = A(at[i].first, at[i].second);
    }
    const std::size_t c = A.cols();
    return make(OpKind::kPick, {a}, std::move(out), [a, at = std::move(at), c](const Tensor& go, GradBuffer& gb) {
      Tensor& g = gb.at(a);
      for (std::size_t i = 0; i < at.size(); ++i) g[at[i].first * c + at[i].second] += go[i];
    });
  }

  /// Reverse sweep from a scalar loss. Every trainable parameter node in the
  /// graph gets an entry; unreachable ones get zeros.
  Gradients backward(NodeId loss) const {
    check(loss);
    if (!value(loss).is_scalar())
      throw ContractError("backward: loss node " + std::to_string(loss) + " is not scalar, shape " +
                          shape_str(value(loss).shape()));
    GradBuffer gb(*this, nodes_.size());
    if (nodes_[loss].requires_grad) gb.at(loss)[0] = 1.0;
    for (std::size_t i = loss + 1; i-- > 0;) {
      const Node& n = nodes_[i];
      if (!n.requires_grad || !gb.has(i) || !n.backward) continue;
      n.backward(gb.raw(i), gb);
    }
    Gradients out;
    for (const auto& [p, id] : param_nodes_) {
      if (!nodes_[id].requires_grad) continue;
      out.emplace(id, gb.has(id) ? gb.raw(id) : Tensor(nodes_[id].value.shape(), 0.0));
    }
    return out;
  }

  /// Same as backward() but keyed by the bound Parameter objects.
  std::unordered_map<const Parameter*, Tensor> parameter_gradients(NodeId loss) const {
    std::unordered_map<const Parameter*, Tensor> out;
    for (auto& [id, g] : backward(loss)) out.emplace(nodes_[id].param, std::move(g));
    return out;
  }

 private:
  void check(NodeId id) const {
    if (id >= nodes_.size()) throw ContractError("graph: invalid node id " + std::to_string(id));
  }

  [[noreturn]] static void dim_error(OpKind k, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op_name(k)) + ": incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }

  static void gemm(const Tensor& A, const Tensor& B, Tensor& C, bool accumulate) {
    const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
    if (!accumulate) C.fill(0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        if (av == 0.0) continue;
        const double* brow = B.data().data() + p * m;
        double* crow = C.data().data() + i * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
  }

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  NodeId make(OpKind kind, std::vector<NodeId> inputs, Tensor out, BackwardFn fn) {
    bool rg = false;
    for (NodeId i : inputs) {
      check(i);
      rg = rg || nodes_[i].requires_grad;
    }
    if (!out.all_finite())
      throw Error(std::string(op_name(kind)) + ": non-finite output");
    return push(Node{kind, std::move(inputs), std::move(out), rg, nullptr, std::move(fn)});
  }

  NodeId binary(OpKind kind, NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.size() != B.size()) dim_error(kind, A, B);
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (kind == OpKind::kAdd) out[i] += B[i];
      else if (kind == OpKind::kSub) out[i] -= B[i];
      else out[i] *= B[i];
    }
    return make(kind, {a, b}, std::move(out), [this, kind, a, b](const Tensor& go, GradBuffer& gb) {
      if (gb.wants(a)) {
        Tensor& g = gb.at(a);
        if (kind == OpKind::kMul) {
          const Tensor& B = value(b);
          for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * B[i];
        } else {
          g += go;
        }
      }
      if (gb.wants(b)) {
        Tensor& g = gb.at(b);
        if (kind == OpKind::kMul) {
          const Tensor& A = value(a);
          for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * A[i];
        } else if (kind == OpKind::kSub) {
          for (std::size_t i = 0; i < go.size(); ++i) g[i] -= go[i];
        } else {
          g += go;
        }
      }
    });
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, NodeId> param_nodes_;
};

inline bool GradBuffer::wants(NodeId id) const { return graph_.requires_grad(id); }

inline Tensor& GradBuffer::at(NodeId id) {
  if (!present_[id]) {
    grads_[id] = Tensor(graph_.value(id).shape(), 0.0);
    present_[id] = true;
  }
  return grads_[id];
}

}  // namespace readapt
