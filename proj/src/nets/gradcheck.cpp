#include <algorithm>
#include <cmath>

#include "egomo/errors.hpp"
#include "egomo/nets.hpp"

namespace egomo::nets {

namespace {

double eval_loss(ParamStore& params, const BuildLoss& build_loss) {
  Tape tape;
  auto leaves = params.register_on(tape);
  int loss = build_loss(tape, leaves);
  require(tape.val(loss).rows() == 1 && tape.val(loss).cols() == 1,
          ErrorKind::shape, "grad_check: loss must be scalar");
  return tape.val(loss)(0, 0);
}

}  // namespace

GradCheckResult grad_check(ParamStore& params, const BuildLoss& build_loss,
                           int max_scalars, double fd_eps, std::uint64_t seed) {
  require(max_scalars >= 1 && fd_eps > 0.0, ErrorKind::invalid_argument,
          "grad_check: bad settings");
  Tape tape;
  auto leaves = params.register_on(tape);
  int loss = build_loss(tape, leaves);
  require(tape.val(loss).rows() == 1 && tape.val(loss).cols() == 1,
          ErrorKind::shape, "grad_check: loss must be scalar");
  tape.backward(loss);
  std::vector<MatrixXd> analytic;
  analytic.reserve(leaves.size());
  for (int id : leaves) analytic.push_back(tape.grad(id));
  tape.clear();

  long total = params.scalars();
  int n = static_cast<int>(std::min<long>(max_scalars, total));
  Rng rng(seed);
  GradCheckResult res;
  for (int s = 0; s < n; ++s) {
    int b = static_cast<int>(rng.uniform_index(params.count()));
    ParamBlock& blk = params.block(b);
    long k = static_cast<long>(rng.uniform_index(blk.value.size()));
    double* p = blk.value.data() + k;
    double orig = *p;
    *p = orig + fd_eps;
    double fp = eval_loss(params, build_loss);
    *p = orig - fd_eps;
    double fm = eval_loss(params, build_loss);
    *p = orig;
    double numeric = (fp - fm) / (2.0 * fd_eps);
    double exact = analytic[b].data()[k];
    // The floor turns the comparison absolute for (near-)zero gradients.
    // Attention key biases are the motivating case: softmax cancels them
    // exactly, so the finite difference is pure rounding noise there.
    double denom = std::max({std::abs(exact), std::abs(numeric), 1e-4});
    res.max_rel_err = std::max(res.max_rel_err,
                               std::abs(exact - numeric) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace egomo::nets
