#pragma once

#include <string>
#include <vector>

#include "readapt/autodiff/graph.hpp"
#include "readapt/autodiff/init.hpp"

namespace readapt {

/// One LSTM direction. Gate blocks are laid out [input | forget | output | cell]
/// along the columns of wx (in×4h), wh (h×4h) and b (1×4h).
struct LstmParams {
  Parameter wx, wh, b;

  std::size_t input_dim() const { return wx.value.rows(); }
  std::size_t hidden_dim() const { return wh.value.rows(); }
  std::vector<Parameter*> parameters() { return {&wx, &wh, &b}; }
};

struct BiLstmParams {
  LstmParams fw, bw;

  BiLstmParams() = default;
  BiLstmParams(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng) {
    auto init = [&](LstmParams& p, const std::string& dir) {
      p.wx = {name + "." + dir + ".wx", glorot_uniform(rng, input_dim, 4 * hidden), true};
      p.wh = {name + "." + dir + ".wh", glorot_uniform(rng, hidden, 4 * hidden), true};
      p.b = {name + "." + dir + ".b", Tensor::matrix(1, 4 * hidden), true};
    };
    init(fw, "fw");
    init(bw, "bw");
  }

  std::size_t input_dim() const { return fw.input_dim(); }
  std::size_t hidden_dim() const { return fw.hidden_dim(); }
  std::size_t output_dim() const { return 2 * hidden_dim(); }
  std::vector<Parameter*> parameters() {
    return {&fw.wx, &fw.wh, &fw.b, &bw.wx, &bw.wh, &bw.b};
  }
};

namespace detail {

// Runs one direction over the steps in the given order; returns hidden states
// indexed by original step position.
inline std::vector<NodeId> lstm_pass(Graph& g, LstmParams& p, const std::vector<NodeId>& xs,
                                     bool reverse) {
  const std::size_t h = p.hidden_dim();
  const NodeId wx = g.parameter(p.wx);
  const NodeId wh = g.parameter(p.wh);
  const NodeId b = g.parameter(p.b);
  std::vector<NodeId> out(xs.size());
  NodeId hs = 0, cs = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const std::size_t t = reverse ? xs.size() - 1 - k : k;
    NodeId z = g.matmul(xs[t], wx);
    if (k > 0) z = g.add(z, g.matmul(hs, wh));  // h_0 = 0
    z = g.add_row(z, b);
    const NodeId i = g.sigmoid(g.slice_cols(z, 0, h));
    const NodeId o = g.sigmoid(g.slice_cols(z, 2 * h, h));
    const NodeId c_in = g.tanh(g.slice_cols(z, 3 * h, h));
    NodeId c = g.mul(i, c_in);
    if (k > 0) {  // c_0 = 0
      const NodeId f = g.sigmoid(g.slice_cols(z, h, h));
      c = g.add(g.mul(f, cs), c);
    }
    hs = g.mul(o, g.tanh(c));
    cs = c;
    out[t] = hs;
  }
  return out;
}

}  // namespace detail

/// Bidirectional LSTM over a batch of equal-length sequences. Each input step
/// is a B×in node; each output step is B×2h = [forward | backward].
inline std::vector<NodeId> bilstm_encode(Graph& g, BiLstmParams& p, const std::vector<NodeId>& xs) {
  require(!xs.empty(), "bilstm_encode: empty sequence");
  for (NodeId x : xs)
    if (g.value(x).cols() != p.input_dim())
      throw DimensionError("bilstm_encode: step of width " + std::to_string(g.value(x).cols()) +
                           ", expected " + std::to_string(p.input_dim()));
  auto f = detail::lstm_pass(g, p.fw, xs, false);
  auto r = detail::lstm_pass(g, p.bw, xs, true);
  std::vector<NodeId> out(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) out[t] = g.concat_cols({f[t], r[t]});
  return out;
}

}  // namespace readapt
