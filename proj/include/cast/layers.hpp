// Transformer building blocks on top of the autodiff graph. Shared by the
// CAST network and the coherence classifier.

#ifndef CAST_LAYERS_HPP
#define CAST_LAYERS_HPP

#include <cmath>
#include <vector>

#include "cast/params.hpp"

namespace cast::nn {

// Deterministic sinusoidal position table, rows = positions.
inline Mat sinusoidal_positions(int length, int dim) {
  Mat pe = Mat::Zero(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double angle =
          double(pos) / std::pow(10000.0, double(i) / double(dim));
      pe(pos, i) = std::sin(angle);
      if (i + 1 < dim) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

struct LinearLayer {
  Parameter* w = nullptr;
  Parameter* b = nullptr;

  void init(ParameterStore& store, const std::string& name, int in, int out,
            Rng& rng) {
    w = &store.create(name + ".w", in, out, rng);
    b = &store.create_zero(name + ".b", 1, out);
  }
  Var apply(Graph& g, Var x) const {
    return linear(x, g.param(*w), g.param(*b));
  }
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  void init(ParameterStore& store, const std::string& name, int dim) {
    gain = &store.create_zero(name + ".g", 1, dim);
    gain->value.setOnes();
    bias = &store.create_zero(name + ".b", 1, dim);
  }
  Var apply(Graph& g, Var x) const {
    return layer_norm_rows(x, g.param(*gain), g.param(*bias));
  }
};

struct MultiHeadAttention {
  int num_heads = 0;
  int head_dim = 0;
  LinearLayer proj_q, proj_k, proj_v, proj_o;

  void init(ParameterStore& store, const std::string& name, int heads, int hd,
            Rng& rng) {
    num_heads = heads;
    head_dim = hd;
    const int width = heads * hd;
    proj_q.init(store, name + ".q", width, width, rng);
    proj_k.init(store, name + ".k", width, width, rng);
    proj_v.init(store, name + ".v", width, width, rng);
    proj_o.init(store, name + ".o", width, width, rng);
  }

  // Incremental caches for stepwise decoding. Exact for causal
  // self-attention: each new row attends over every cached row.
  struct SelfCache {
    std::vector<Var> k_rows, v_rows;
  };
  struct CrossCache {
    Var k, v;
  };

  CrossCache make_cross(Graph& g, Var memory) const {
    return {proj_k.apply(g, memory), proj_v.apply(g, memory)};
  }

  Var attend_row(Graph& g, Var q_row, Var k, Var v) const {
    const double scale_factor = 1.0 / std::sqrt(double(head_dim));
    std::vector<Var> heads;
    heads.reserve(std::size_t(num_heads));
    for (int h = 0; h < num_heads; ++h) {
      Var qh = slice_cols(q_row, h * head_dim, head_dim);
      Var kh = slice_cols(k, h * head_dim, head_dim);
      Var vh = slice_cols(v, h * head_dim, head_dim);
      Var attn = softmax_rows(scale(matmul_nt(qh, kh), scale_factor));
      heads.push_back(matmul(attn, vh));
    }
    return proj_o.apply(g, concat_cols(heads));
  }

  Var step_self(Graph& g, Var normed_row, SelfCache& cache) const {
    cache.k_rows.push_back(proj_k.apply(g, normed_row));
    cache.v_rows.push_back(proj_v.apply(g, normed_row));
    Var k = cache.k_rows.size() == 1 ? cache.k_rows[0]
                                     : concat_rows(cache.k_rows);
    Var v = cache.v_rows.size() == 1 ? cache.v_rows[0]
                                     : concat_rows(cache.v_rows);
    return attend_row(g, proj_q.apply(g, normed_row), k, v);
  }

  Var step_cross(Graph& g, Var normed_row, const CrossCache& cc) const {
    return attend_row(g, proj_q.apply(g, normed_row), cc.k, cc.v);
  }

  // queries attend over keys/values; causal masks future key positions
  // (only meaningful for self-attention).
  Var apply(Graph& g, Var queries_src, Var keys_src, bool causal) const {
    Var q = proj_q.apply(g, queries_src);
    Var k = proj_k.apply(g, keys_src);
    Var v = proj_v.apply(g, keys_src);
    const auto lq = g.value(q).rows();
    const auto lk = g.value(k).rows();
    const double scale_factor = 1.0 / std::sqrt(double(head_dim));

    Var mask{};
    if (causal) {
      Mat m = Mat::Zero(lq, lk);
      for (std::ptrdiff_t r = 0; r < lq; ++r)
        for (std::ptrdiff_t c = 0; c < lk; ++c)
          if (c > r) m(r, c) = -1e30;
      mask = g.constant(std::move(m));
    }

    std::vector<Var> heads;
    heads.reserve(std::size_t(num_heads));
    for (int h = 0; h < num_heads; ++h) {
      Var qh = slice_cols(q, h * head_dim, head_dim);
      Var kh = slice_cols(k, h * head_dim, head_dim);
      Var vh = slice_cols(v, h * head_dim, head_dim);
      Var scores = scale(matmul_nt(qh, kh), scale_factor);
      if (causal) scores = add(scores, mask);
      Var attn = softmax_rows(scores);
      heads.push_back(matmul(attn, vh));
    }
    return proj_o.apply(g, concat_cols(heads));
  }
};

struct FeedForward {
  LinearLayer lift, drop;

  void init(ParameterStore& store, const std::string& name, int width,
            int hidden, Rng& rng) {
    lift.init(store, name + ".ffn1", width, hidden, rng);
    drop.init(store, name + ".ffn2", hidden, width, rng);
  }
  Var apply(Graph& g, Var x) const {
    return drop.apply(g, relu(lift.apply(g, x)));
  }
};

// Pre-norm residual layer: x + Attn(LN(x)), then x + FFN(LN(x)).
struct EncoderLayer {
  LayerNorm ln_attn, ln_ffn;
  MultiHeadAttention attn;
  FeedForward ffn;

  void init(ParameterStore& store, const std::string& name, int heads, int hd,
            int ffn_dim, Rng& rng) {
    const int width = heads * hd;
    ln_attn.init(store, name + ".ln1", width);
    ln_ffn.init(store, name + ".ln2", width);
    attn.init(store, name + ".attn", heads, hd, rng);
    ffn.init(store, name + ".ffn", width, ffn_dim, rng);
  }
  Var apply(Graph& g, Var x, bool causal = false) const {
    Var n1 = ln_attn.apply(g, x);
    x = add(x, attn.apply(g, n1, n1, causal));
    x = add(x, ffn.apply(g, ln_ffn.apply(g, x)));
    return x;
  }
};

struct TransformerEncoder {
  std::vector<EncoderLayer> layers;
  LayerNorm final_ln;

  void init(ParameterStore& store, const std::string& name, int num_layers,
            int heads, int hd, int ffn_dim, Rng& rng) {
    layers.resize(std::size_t(num_layers));
    for (int l = 0; l < num_layers; ++l)
      layers[std::size_t(l)].init(store, name + ".l" + std::to_string(l),
                                  heads, hd, ffn_dim, rng);
    final_ln.init(store, name + ".final_ln", heads * hd);
  }
  Var apply(Graph& g, Var x, bool causal = false) const {
    for (const auto& layer : layers) x = layer.apply(g, x, causal);
    return final_ln.apply(g, x);
  }
};

struct DecoderLayer {
  LayerNorm ln_self, ln_cross, ln_ffn;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;

  void init(ParameterStore& store, const std::string& name, int heads, int hd,
            int ffn_dim, Rng& rng) {
    const int width = heads * hd;
    ln_self.init(store, name + ".ln1", width);
    ln_cross.init(store, name + ".ln2", width);
    ln_ffn.init(store, name + ".ln3", width);
    self_attn.init(store, name + ".attn", heads, hd, rng);
    cross_attn.init(store, name + ".xattn", heads, hd, rng);
    ffn.init(store, name + ".ffn", width, ffn_dim, rng);
  }
  Var apply(Graph& g, Var x, Var memory) const {
    Var n1 = ln_self.apply(g, x);
    x = add(x, self_attn.apply(g, n1, n1, /*causal=*/true));
    x = add(x, cross_attn.apply(g, ln_cross.apply(g, x), memory,
                                /*causal=*/false));
    x = add(x, ffn.apply(g, ln_ffn.apply(g, x)));
    return x;
  }

  struct StepState {
    MultiHeadAttention::SelfCache self;
    MultiHeadAttention::CrossCache cross;
  };

  StepState init_step(Graph& g, Var memory) const {
    return {{}, cross_attn.make_cross(g, memory)};
  }

  Var step(Graph& g, Var x_row, StepState& state) const {
    x_row = add(x_row, self_attn.step_self(g, ln_self.apply(g, x_row), state.self));
    x_row = add(x_row,
                cross_attn.step_cross(g, ln_cross.apply(g, x_row), state.cross));
    x_row = add(x_row, ffn.apply(g, ln_ffn.apply(g, x_row)));
    return x_row;
  }
};

struct TransformerDecoder {
  std::vector<DecoderLayer> layers;
  LayerNorm final_ln;

  void init(ParameterStore& store, const std::string& name, int num_layers,
            int heads, int hd, int ffn_dim, Rng& rng) {
    layers.resize(std::size_t(num_layers));
    for (int l = 0; l < num_layers; ++l)
      layers[std::size_t(l)].init(store, name + ".l" + std::to_string(l),
                                  heads, hd, ffn_dim, rng);
    final_ln.init(store, name + ".final_ln", heads * hd);
  }
  Var apply(Graph& g, Var x, Var memory) const {
    for (const auto& layer : layers) x = layer.apply(g, x, memory);
    return final_ln.apply(g, x);
  }

  struct StepState {
    std::vector<DecoderLayer::StepState> per_layer;
  };

  StepState init_step(Graph& g, Var memory) const {
    StepState state;
    state.per_layer.reserve(layers.size());
    for (const auto& layer : layers)
      state.per_layer.push_back(layer.init_step(g, memory));
    return state;
  }

  // feeds one input row through all layers, extending the caches
  Var step(Graph& g, Var x_row, StepState& state) const {
    for (std::size_t l = 0; l < layers.size(); ++l)
      x_row = layers[l].step(g, x_row, state.per_layer[l]);
    return final_ln.apply(g, x_row);
  }
};

}  // namespace cast::nn

#endif  // CAST_LAYERS_HPP
