#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/nets.hpp"

namespace egomo::nets {

int ParamStore::add(const std::string& name, int rows, int cols,
                    double init_std, Rng& rng) {
  require(rows >= 1 && cols >= 1, ErrorKind::invalid_argument,
          "ParamStore::add: bad shape for " + name);
  ParamBlock b;
  b.name = name;
  b.value = MatrixXd::Zero(rows, cols);
  if (init_std != 0.0) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) b.value(r, c) = init_std * rng.normal();
    }
  }
  b.m = MatrixXd::Zero(rows, cols);
  b.v = MatrixXd::Zero(rows, cols);
  blocks_.push_back(std::move(b));
  return static_cast<int>(blocks_.size()) - 1;
}

int ParamStore::add_ones(const std::string& name, int rows, int cols) {
  require(rows >= 1 && cols >= 1, ErrorKind::invalid_argument,
          "ParamStore::add_ones: bad shape for " + name);
  ParamBlock b;
  b.name = name;
  b.value = MatrixXd::Ones(rows, cols);
  b.m = MatrixXd::Zero(rows, cols);
  b.v = MatrixXd::Zero(rows, cols);
  blocks_.push_back(std::move(b));
  return static_cast<int>(blocks_.size()) - 1;
}

long ParamStore::scalars() const {
  long n = 0;
  for (const auto& b : blocks_) n += static_cast<long>(b.value.size());
  return n;
}

std::vector<int> ParamStore::register_on(Tape& tape) const {
  std::vector<int> ids;
  ids.reserve(blocks_.size());
  for (const auto& b : blocks_) ids.push_back(tape.input(b.value));
  return ids;
}

void Adam::step(ParamStore& params, const Tape& tape,
                const std::vector<int>& leaves) {
  require(static_cast<int>(leaves.size()) == params.count(),
          ErrorKind::invalid_argument, "Adam::step: leaf count mismatch");
  ++t_;
  double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (int i = 0; i < params.count(); ++i) {
    ParamBlock& b = params.block(i);
    const MatrixXd& g = tape.grad(leaves[i]);
    require(g.rows() == b.value.rows() && g.cols() == b.value.cols(),
            ErrorKind::shape, "Adam::step: gradient shape for " + b.name);
    require(g.allFinite(), ErrorKind::non_finite,
            "Adam::step: non-finite gradient in " + b.name);
    b.m = cfg_.beta1 * b.m + (1.0 - cfg_.beta1) * g;
    b.v = cfg_.beta2 * b.v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    MatrixXd mhat = b.m / c1;
    MatrixXd vhat = b.v / c2;
    b.value -= cfg_.lr *
               mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg_.eps).matrix());
  }
}

}  // namespace egomo::nets
