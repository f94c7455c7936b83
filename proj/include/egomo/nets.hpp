#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egomo/rng.hpp"

namespace egomo::nets {

using Eigen::MatrixXd;

// Reverse-mode autodiff over dense matrices. The graph is rebuilt for every
// forward pass; node ids are indices in creation order, so creation order is
// already a topological order and backward() is a single reverse sweep.
class Tape {
 public:
  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int input(MatrixXd value);
  const MatrixXd& val(int id) const { return nodes_.at(id).value; }
  const MatrixXd& grad(int id) const { return nodes_.at(id).grad; }
  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() { nodes_.clear(); }

  // Seeds the (1x1) node with gradient one and sweeps the whole tape.
  void backward(int loss_id);

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul_elem(int a, int b);
  int add_rowvec(int a, int r);   // r: 1 x C, broadcast down the rows
  int mul_rowvec(int a, int r);
  int sub_colvec(int a, int c);   // c: T x 1, broadcast across the columns
  int mul_colvec(int a, int c);
  int mul_scalar_node(int a, int s);  // s: 1 x 1
  int scale(int a, double s);
  int add_scalar(int a, double s);
  int recip(int a);
  int sqrt_op(int a);
  int sin_op(int a);
  int cos_op(int a);
  int gelu(int a);      // exact erf form
  int softplus(int a);
  int softmax_rows(int a);
  int transpose_op(int a);
  int slice_rows(int a, int r0, int n);
  int slice_cols(int a, int c0, int n);
  int row(int a, int r) { return slice_rows(a, r, 1); }
  int concat_rows(int a, int b);
  int concat_cols(int a, int b);
  int sum_all(int a);   // 1 x 1
  int mean_all(int a);  // 1 x 1
  int row_mean(int a);  // T x 1, mean within each row
  int l1(int a);        // 1 x 1, sum of |x|
  int skew3(int w);     // 1 x 3 -> 3 x 3 cross-product matrix

  // Composites.
  int linear(int x, int w, int b);
  int layer_norm(int x, int gamma, int beta, double eps = 1e-5);
  int so3_exp(int w);  // 1 x 3 axis-angle -> 3 x 3 rotation

 private:
  struct Node {
    MatrixXd value;
    MatrixXd grad;
    std::function<void(Tape&)> back;
  };
  std::vector<Node> nodes_;

  int push(MatrixXd value, std::function<void(Tape&)> back);
  MatrixXd& g(int id) { return nodes_[id].grad; }
  const MatrixXd& v(int id) const { return nodes_[id].value; }
};

// A named parameter block with its Adam moments, so a checkpoint is just the
// store serialized in block order.
struct ParamBlock {
  std::string name;
  MatrixXd value;
  MatrixXd m;
  MatrixXd v;
};

class ParamStore {
 public:
  // Gaussian init scaled by init_std (0 gives an all-zero block).
  int add(const std::string& name, int rows, int cols, double init_std,
          Rng& rng);
  int add_ones(const std::string& name, int rows, int cols);

  ParamBlock& block(int i) { return blocks_.at(i); }
  const ParamBlock& block(int i) const { return blocks_.at(i); }
  int count() const { return static_cast<int>(blocks_.size()); }
  long scalars() const;

  // One tape input per block, in block order.
  std::vector<int> register_on(Tape& tape) const;

 private:
  std::vector<ParamBlock> blocks_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  // Applies one update from the gradients the tape holds for `leaves`.
  void step(ParamStore& params, const Tape& tape,
            const std::vector<int>& leaves);
  long steps_taken() const { return t_; }
  void set_steps_taken(long t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

struct TransformerConfig {
  int input_dim = 9;
  int output_dim = 3;
  int d_model = 64;
  int heads = 4;
  int ff = 128;
  int max_len = 512;
  bool positional = true;
};

struct AttentionBlockIds {
  int ln1_g, ln1_b;
  int wq, bq, wk, bk, wv, bv, wo, bo;
  int ln2_g, ln2_b;
  int w1, b1, w2, b2;
};

// Two pre-norm attention blocks, sinusoidal positions added after the input
// projection, a plain linear head, and no final norm.
struct TransformerIds {
  TransformerConfig cfg;
  int w_in, b_in;
  std::array<AttentionBlockIds, 2> blocks;
  int w_out, b_out;
};

TransformerIds add_transformer(ParamStore& params, const std::string& prefix,
                               const TransformerConfig& cfg, Rng& rng);
// token_bias, when nonnegative, is a 1 x d_model node added to every token
// after the input projection (carries the diffusion noise-level embedding).
int transformer_forward(Tape& tape, const TransformerIds& model,
                        const std::vector<int>& leaves, int x,
                        int token_bias = -1);
MatrixXd sinusoidal_encoding(int frames, int dim);
MatrixXd sinusoidal_row(int pos, int dim);  // 1 x dim

// Affine layers with GELU between them; a single layer is purely affine.
struct MlpIds {
  std::vector<std::array<int, 2>> layers;  // {w, b}
};

MlpIds add_mlp(ParamStore& params, const std::string& prefix,
               const std::vector<int>& dims, Rng& rng);
int mlp_forward(Tape& tape, const MlpIds& model, const std::vector<int>& leaves,
                int x);

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

// Central finite differences on randomly sampled parameter scalars against
// one reverse sweep. build_loss must construct a fresh 1x1 loss from the
// registered leaves every time it is called.
using BuildLoss = std::function<int(Tape&, const std::vector<int>&)>;
GradCheckResult grad_check(ParamStore& params, const BuildLoss& build_loss,
                           int max_scalars = 200, double fd_eps = 1e-5,
                           std::uint64_t seed = 0);

}  // namespace egomo::nets
