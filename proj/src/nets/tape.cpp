#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/nets.hpp"

namespace egomo::nets {

namespace {

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

int Tape::push(MatrixXd value, std::function<void(Tape&)> back) {
  Node n;
  n.grad = MatrixXd::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(MatrixXd value) { return push(std::move(value), nullptr); }

void Tape::backward(int loss_id) {
  require(loss_id >= 0 && loss_id < size(), ErrorKind::invalid_argument,
          "backward: bad node id");
  require(v(loss_id).rows() == 1 && v(loss_id).cols() == 1, ErrorKind::shape,
          "backward: loss must be a scalar node");
  g(loss_id)(0, 0) = 1.0;
  for (int id = loss_id; id >= 0; --id) {
    if (nodes_[id].back) nodes_[id].back(*this);
  }
}

int Tape::matmul(int a, int b) {
  require(v(a).cols() == v(b).rows(), ErrorKind::shape, "matmul: inner dims");
  int id = push(v(a) * v(b), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    t.g(a).noalias() += t.g(id) * t.v(b).transpose();
    t.g(b).noalias() += t.v(a).transpose() * t.g(id);
  };
  return id;
}

int Tape::add(int a, int b) {
  require(v(a).rows() == v(b).rows() && v(a).cols() == v(b).cols(),
          ErrorKind::shape, "add: shape mismatch");
  int id = push(v(a) + v(b), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    t.g(a) += t.g(id);
    t.g(b) += t.g(id);
  };
  return id;
}

int Tape::sub(int a, int b) {
  require(v(a).rows() == v(b).rows() && v(a).cols() == v(b).cols(),
          ErrorKind::shape, "sub: shape mismatch");
  int id = push(v(a) - v(b), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    t.g(a) += t.g(id);
    t.g(b) -= t.g(id);
  };
  return id;
}

int Tape::mul_elem(int a, int b) {
  require(v(a).rows() == v(b).rows() && v(a).cols() == v(b).cols(),
          ErrorKind::shape, "mul_elem: shape mismatch");
  int id = push(v(a).cwiseProduct(v(b)), nullptr);
  nodes_[id].back = [a, b, id](Tape& t) {
    t.g(a) += t.g(id).cwiseProduct(t.v(b));
    t.g(b) += t.g(id).cwiseProduct(t.v(a));
  };
  return id;
}

int Tape::add_rowvec(int a, int r) {
  require(v(r).rows() == 1 && v(r).cols() == v(a).cols(), ErrorKind::shape,
          "add_rowvec: need a 1 x C operand");
  MatrixXd out = v(a);
  out.rowwise() += v(r).row(0);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, r, id](Tape& t) {
    t.g(a) += t.g(id);
    t.g(r) += t.g(id).colwise().sum();
  };
  return id;
}

int Tape::mul_rowvec(int a, int r) {
  require(v(r).rows() == 1 && v(r).cols() == v(a).cols(), ErrorKind::shape,
          "mul_rowvec: need a 1 x C operand");
  MatrixXd out = (v(a).array().rowwise() * v(r).array().row(0)).matrix();
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, r, id](Tape& t) {
    t.g(a) += (t.g(id).array().rowwise() * t.v(r).array().row(0)).matrix();
    t.g(r) += t.g(id).cwiseProduct(t.v(a)).colwise().sum();
  };
  return id;
}

int Tape::sub_colvec(int a, int c) {
  require(v(c).cols() == 1 && v(c).rows() == v(a).rows(), ErrorKind::shape,
          "sub_colvec: need a T x 1 operand");
  MatrixXd out = v(a);
  out.colwise() -= v(c).col(0);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, c, id](Tape& t) {
    t.g(a) += t.g(id);
    t.g(c) -= t.g(id).rowwise().sum();
  };
  return id;
}

int Tape::mul_colvec(int a, int c) {
  require(v(c).cols() == 1 && v(c).rows() == v(a).rows(), ErrorKind::shape,
          "mul_colvec: need a T x 1 operand");
  MatrixXd out = (v(a).array().colwise() * v(c).array().col(0)).matrix();
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, c, id](Tape& t) {
    t.g(a) += (t.g(id).array().colwise() * t.v(c).array().col(0)).matrix();
    t.g(c) += t.g(id).cwiseProduct(t.v(a)).rowwise().sum();
  };
  return id;
}

int Tape::mul_scalar_node(int a, int s) {
  require(v(s).rows() == 1 && v(s).cols() == 1, ErrorKind::shape,
          "mul_scalar_node: need a 1 x 1 operand");
  int id = push(v(s)(0, 0) * v(a), nullptr);
  nodes_[id].back = [a, s, id](Tape& t) {
    t.g(a) += t.v(s)(0, 0) * t.g(id);
    t.g(s)(0, 0) += t.g(id).cwiseProduct(t.v(a)).sum();
  };
  return id;
}

int Tape::scale(int a, double s) {
  int id = push(s * v(a), nullptr);
  nodes_[id].back = [a, s, id](Tape& t) { t.g(a) += s * t.g(id); };
  return id;
}

int Tape::add_scalar(int a, double s) {
  int id = push((v(a).array() + s).matrix(), nullptr);
  nodes_[id].back = [a, id](Tape& t) { t.g(a) += t.g(id); };
  return id;
}

int Tape::recip(int a) {
  int id = push(v(a).cwiseInverse(), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    t.g(a) -= t.g(id).cwiseProduct(t.v(id)).cwiseProduct(t.v(id));
  };
  return id;
}

int Tape::sqrt_op(int a) {
  int id = push(v(a).cwiseSqrt(), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    t.g(a) += 0.5 * t.g(id).cwiseQuotient(t.v(id));
  };
  return id;
}

int Tape::sin_op(int a) {
  int id = push(v(a).array().sin().matrix(), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    t.g(a) += t.g(id).cwiseProduct(t.v(a).array().cos().matrix());
  };
  return id;
}

int Tape::cos_op(int a) {
  int id = push(v(a).array().cos().matrix(), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    t.g(a) -= t.g(id).cwiseProduct(t.v(a).array().sin().matrix());
  };
  return id;
}

int Tape::gelu(int a) {
  MatrixXd out = v(a).unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const MatrixXd& x = t.v(a);
    MatrixXd d = x.unaryExpr([](double u) {
      double cdf = 0.5 * (1.0 + std::erf(u * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * u * u);
      return cdf + u * pdf;
    });
    t.g(a) += t.g(id).cwiseProduct(d);
  };
  return id;
}

int Tape::softplus(int a) {
  MatrixXd out = v(a).unaryExpr(
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); });
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    MatrixXd d = t.v(a).unaryExpr([](double x) { return sigmoid(x); });
    t.g(a) += t.g(id).cwiseProduct(d);
  };
  return id;
}

int Tape::softmax_rows(int a) {
  MatrixXd out = v(a);
  for (int i = 0; i < out.rows(); ++i) {
    double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    const MatrixXd& y = t.v(id);
    const MatrixXd& go = t.g(id);
    for (int i = 0; i < y.rows(); ++i) {
      double dot = go.row(i).dot(y.row(i));
      t.g(a).row(i) += ((go.row(i).array() - dot) * y.row(i).array()).matrix();
    }
  };
  return id;
}

int Tape::transpose_op(int a) {
  int id = push(v(a).transpose(), nullptr);
  nodes_[id].back = [a, id](Tape& t) { t.g(a) += t.g(id).transpose(); };
  return id;
}

int Tape::slice_rows(int a, int r0, int n) {
  require(r0 >= 0 && n >= 1 && r0 + n <= v(a).rows(), ErrorKind::shape,
          "slice_rows: range out of bounds");
  int id = push(v(a).middleRows(r0, n), nullptr);
  nodes_[id].back = [a, r0, n, id](Tape& t) {
    t.g(a).middleRows(r0, n) += t.g(id);
  };
  return id;
}

int Tape::slice_cols(int a, int c0, int n) {
  require(c0 >= 0 && n >= 1 && c0 + n <= v(a).cols(), ErrorKind::shape,
          "slice_cols: range out of bounds");
  int id = push(v(a).middleCols(c0, n), nullptr);
  nodes_[id].back = [a, c0, n, id](Tape& t) {
    t.g(a).middleCols(c0, n) += t.g(id);
  };
  return id;
}

int Tape::concat_rows(int a, int b) {
  require(v(a).cols() == v(b).cols(), ErrorKind::shape,
          "concat_rows: column mismatch");
  MatrixXd out(v(a).rows() + v(b).rows(), v(a).cols());
  out.topRows(v(a).rows()) = v(a);
  out.bottomRows(v(b).rows()) = v(b);
  int id = push(std::move(out), nullptr);
  int ra = static_cast<int>(v(a).rows());
  nodes_[id].back = [a, b, ra, id](Tape& t) {
    t.g(a) += t.g(id).topRows(ra);
    t.g(b) += t.g(id).bottomRows(t.v(b).rows());
  };
  return id;
}

int Tape::concat_cols(int a, int b) {
  require(v(a).rows() == v(b).rows(), ErrorKind::shape,
          "concat_cols: row mismatch");
  MatrixXd out(v(a).rows(), v(a).cols() + v(b).cols());
  out.leftCols(v(a).cols()) = v(a);
  out.rightCols(v(b).cols()) = v(b);
  int id = push(std::move(out), nullptr);
  int ca = static_cast<int>(v(a).cols());
  nodes_[id].back = [a, b, ca, id](Tape& t) {
    t.g(a) += t.g(id).leftCols(ca);
    t.g(b) += t.g(id).rightCols(t.v(b).cols());
  };
  return id;
}

int Tape::sum_all(int a) {
  MatrixXd out(1, 1);
  out(0, 0) = v(a).sum();
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    t.g(a).array() += t.g(id)(0, 0);
  };
  return id;
}

int Tape::mean_all(int a) {
  double n = static_cast<double>(v(a).size());
  MatrixXd out(1, 1);
  out(0, 0) = v(a).sum() / n;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, n, id](Tape& t) {
    t.g(a).array() += t.g(id)(0, 0) / n;
  };
  return id;
}

int Tape::row_mean(int a) {
  double c = static_cast<double>(v(a).cols());
  MatrixXd out = v(a).rowwise().mean();
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, c, id](Tape& t) {
    t.g(a).colwise() += (t.g(id).col(0) / c).eval();
  };
  return id;
}

int Tape::l1(int a) {
  MatrixXd out(1, 1);
  out(0, 0) = v(a).cwiseAbs().sum();
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [a, id](Tape& t) {
    MatrixXd s = t.v(a).unaryExpr(
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    t.g(a) += t.g(id)(0, 0) * s;
  };
  return id;
}

int Tape::skew3(int w) {
  require(v(w).rows() == 1 && v(w).cols() == 3, ErrorKind::shape,
          "skew3: need a 1 x 3 operand");
  MatrixXd k(3, 3);
  double x = v(w)(0, 0), y = v(w)(0, 1), z = v(w)(0, 2);
  k << 0, -z, y, z, 0, -x, -y, x, 0;
  int id = push(std::move(k), nullptr);
  nodes_[id].back = [w, id](Tape& t) {
    const MatrixXd& go = t.g(id);
    t.g(w)(0, 0) += go(2, 1) - go(1, 2);
    t.g(w)(0, 1) += go(0, 2) - go(2, 0);
    t.g(w)(0, 2) += go(1, 0) - go(0, 1);
  };
  return id;
}

int Tape::linear(int x, int w, int b) {
  return add_rowvec(matmul(x, w), b);
}

int Tape::layer_norm(int x, int gamma, int beta, double eps) {
  int mu = row_mean(x);
  int xc = sub_colvec(x, mu);
  int var = row_mean(mul_elem(xc, xc));
  int inv = recip(sqrt_op(add_scalar(var, eps)));
  int norm = mul_colvec(xc, inv);
  return add_rowvec(mul_rowvec(norm, gamma), beta);
}

int Tape::so3_exp(int w) {
  int th2 = sum_all(mul_elem(w, w));
  int k = skew3(w);
  int k2 = matmul(k, k);
  int ca, cb;  // sin(t)/t and (1 - cos(t))/t^2 as 1 x 1 nodes
  if (v(th2)(0, 0) < 1e-8) {
    // Second-order series keeps the error below double rounding here and
    // stays differentiable through th2.
    ca = add_scalar(scale(th2, -1.0 / 6.0), 1.0);
    cb = add_scalar(scale(th2, -1.0 / 24.0), 0.5);
  } else {
    int th = sqrt_op(th2);
    int ith = recip(th);
    ca = mul_elem(sin_op(th), ith);
    cb = mul_elem(add_scalar(scale(cos_op(th), -1.0), 1.0),
                  mul_elem(ith, ith));
  }
  int rot = add(input(MatrixXd::Identity(3, 3)),
                add(mul_scalar_node(k, ca), mul_scalar_node(k2, cb)));
  return rot;
}

}  // namespace egomo::nets
