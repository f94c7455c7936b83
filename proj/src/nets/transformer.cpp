#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/nets.hpp"

namespace egomo::nets {

MatrixXd sinusoidal_row(int pos, int dim) {
  require(pos >= 0 && dim >= 1, ErrorKind::invalid_argument,
          "sinusoidal_row: bad shape");
  MatrixXd pe(1, dim);
  for (int c = 0; c < dim; ++c) {
    double freq = std::pow(10000.0, -2.0 * (c / 2) / static_cast<double>(dim));
    double x = pos * freq;
    pe(0, c) = (c % 2 == 0) ? std::sin(x) : std::cos(x);
  }
  return pe;
}

MatrixXd sinusoidal_encoding(int frames, int dim) {
  require(frames >= 1 && dim >= 1, ErrorKind::invalid_argument,
          "sinusoidal_encoding: bad shape");
  MatrixXd pe(frames, dim);
  for (int t = 0; t < frames; ++t) pe.row(t) = sinusoidal_row(t, dim);
  return pe;
}

namespace {

int add_weight(ParamStore& ps, const std::string& name, int in, int out,
               Rng& rng) {
  return ps.add(name, in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

int add_bias(ParamStore& ps, const std::string& name, int out, Rng& rng) {
  return ps.add(name, 1, out, 0.0, rng);
}

}  // namespace

TransformerIds add_transformer(ParamStore& ps, const std::string& prefix,
                               const TransformerConfig& cfg, Rng& rng) {
  require(cfg.d_model >= 1 && cfg.heads >= 1 && cfg.ff >= 1 &&
              cfg.input_dim >= 1 && cfg.output_dim >= 1 && cfg.max_len >= 1,
          ErrorKind::invalid_argument, "transformer: bad config");
  require(cfg.d_model % cfg.heads == 0, ErrorKind::invalid_argument,
          "transformer: d_model must be divisible by heads");
  TransformerIds m;
  m.cfg = cfg;
  int d = cfg.d_model;
  m.w_in = add_weight(ps, prefix + ".w_in", cfg.input_dim, d, rng);
  m.b_in = add_bias(ps, prefix + ".b_in", d, rng);
  for (int i = 0; i < 2; ++i) {
    std::string p = prefix + ".block" + std::to_string(i);
    AttentionBlockIds& b = m.blocks[i];
    b.ln1_g = ps.add_ones(p + ".ln1_g", 1, d);
    b.ln1_b = ps.add(p + ".ln1_b", 1, d, 0.0, rng);
    b.wq = add_weight(ps, p + ".wq", d, d, rng);
    b.bq = add_bias(ps, p + ".bq", d, rng);
    b.wk = add_weight(ps, p + ".wk", d, d, rng);
    b.bk = add_bias(ps, p + ".bk", d, rng);
    b.wv = add_weight(ps, p + ".wv", d, d, rng);
    b.bv = add_bias(ps, p + ".bv", d, rng);
    b.wo = add_weight(ps, p + ".wo", d, d, rng);
    b.bo = add_bias(ps, p + ".bo", d, rng);
    b.ln2_g = ps.add_ones(p + ".ln2_g", 1, d);
    b.ln2_b = ps.add(p + ".ln2_b", 1, d, 0.0, rng);
    b.w1 = add_weight(ps, p + ".w1", d, cfg.ff, rng);
    b.b1 = add_bias(ps, p + ".b1", cfg.ff, rng);
    b.w2 = add_weight(ps, p + ".w2", cfg.ff, d, rng);
    b.b2 = add_bias(ps, p + ".b2", d, rng);
  }
  m.w_out = add_weight(ps, prefix + ".w_out", d, cfg.output_dim, rng);
  m.b_out = add_bias(ps, prefix + ".b_out", cfg.output_dim, rng);
  return m;
}

namespace {

int attention(Tape& t, const AttentionBlockIds& b, const std::vector<int>& L,
              int x, int d, int heads) {
  int q = t.linear(x, L[b.wq], L[b.bq]);
  int k = t.linear(x, L[b.wk], L[b.bk]);
  int v = t.linear(x, L[b.wv], L[b.bv]);
  int dh = d / heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  int out = -1;
  for (int h = 0; h < heads; ++h) {
    int qh = t.slice_cols(q, h * dh, dh);
    int kh = t.slice_cols(k, h * dh, dh);
    int vh = t.slice_cols(v, h * dh, dh);
    int scores = t.scale(t.matmul(qh, t.transpose_op(kh)), inv_sqrt);
    int attn = t.softmax_rows(scores);
    int oh = t.matmul(attn, vh);
    out = (h == 0) ? oh : t.concat_cols(out, oh);
  }
  return t.linear(out, L[b.wo], L[b.bo]);
}

}  // namespace

int transformer_forward(Tape& t, const TransformerIds& m,
                        const std::vector<int>& L, int x, int token_bias) {
  const TransformerConfig& cfg = m.cfg;
  int frames = static_cast<int>(t.val(x).rows());
  require(t.val(x).cols() == cfg.input_dim, ErrorKind::shape,
          "transformer_forward: input width mismatch");
  require(frames <= cfg.max_len, ErrorKind::shape,
          "transformer_forward: sequence longer than max_len");
  int h = t.linear(x, L[m.w_in], L[m.b_in]);
  if (cfg.positional) {
    h = t.add(h, t.input(sinusoidal_encoding(frames, cfg.d_model)));
  }
  if (token_bias >= 0) {
    require(t.val(token_bias).rows() == 1 &&
                t.val(token_bias).cols() == cfg.d_model,
            ErrorKind::shape, "transformer_forward: token bias must be 1 x d");
    h = t.add_rowvec(h, token_bias);
  }
  for (const AttentionBlockIds& b : m.blocks) {
    int n1 = t.layer_norm(h, L[b.ln1_g], L[b.ln1_b]);
    h = t.add(h, attention(t, b, L, n1, cfg.d_model, cfg.heads));
    int n2 = t.layer_norm(h, L[b.ln2_g], L[b.ln2_b]);
    int f = t.linear(t.gelu(t.linear(n2, L[b.w1], L[b.b1])), L[b.w2], L[b.b2]);
    h = t.add(h, f);
  }
  return t.linear(h, L[m.w_out], L[m.b_out]);
}

MlpIds add_mlp(ParamStore& ps, const std::string& prefix,
               const std::vector<int>& dims, Rng& rng) {
  require(dims.size() >= 2, ErrorKind::invalid_argument,
          "mlp: need at least input and output dims");
  MlpIds m;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    require(dims[i] >= 1 && dims[i + 1] >= 1, ErrorKind::invalid_argument,
            "mlp: bad layer dim");
    std::string p = prefix + ".layer" + std::to_string(i);
    int w = add_weight(ps, p + ".w", dims[i], dims[i + 1], rng);
    int b = add_bias(ps, p + ".b", dims[i + 1], rng);
    m.layers.push_back({w, b});
  }
  return m;
}

int mlp_forward(Tape& t, const MlpIds& m, const std::vector<int>& L, int x) {
  int h = x;
  for (size_t i = 0; i < m.layers.size(); ++i) {
    h = t.linear(h, L[m.layers[i][0]], L[m.layers[i][1]]);
    if (i + 1 < m.layers.size()) h = t.gelu(h);
  }
  return h;
}

}  // namespace egomo::nets
