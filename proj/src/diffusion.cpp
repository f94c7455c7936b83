#include "egomo/diffusion.hpp"

#include <cmath>

#include "egomo/errors.hpp"

namespace egomo::diffusion {

namespace {

void check_step(const NoiseSchedule& s, int n, int lo, const char* where) {
  require(n >= lo && n <= s.steps, ErrorKind::invalid_argument,
          std::string(where) + ": step out of range");
}

}  // namespace

double NoiseSchedule::beta(int n) const {
  check_step(*this, n, 1, "beta");
  return betas[n - 1];
}

double NoiseSchedule::alpha(int n) const {
  check_step(*this, n, 1, "alpha");
  return alphas[n - 1];
}

double NoiseSchedule::alpha_bar(int n) const {
  check_step(*this, n, 0, "alpha_bar");
  return alpha_bars[n];
}

double NoiseSchedule::one_minus_alpha_bar(int n) const {
  check_step(*this, n, 0, "one_minus_alpha_bar");
  return one_minus_alpha_bars[n];
}

double NoiseSchedule::sigma_sq(int n) const {
  check_step(*this, n, 1, "sigma_sq");
  return sigma2[n];
}

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end,
                            SigmaMode mode) {
  require(steps >= 1, ErrorKind::invalid_argument,
          "make_schedule: steps must be positive");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          ErrorKind::invalid_argument,
          "make_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.mode = mode;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  for (int i = 0; i < steps; ++i) {
    double f = (steps == 1) ? 0.0 : static_cast<double>(i) / (steps - 1);
    s.betas[i] = beta_start + f * (beta_end - beta_start);
    s.alphas[i] = 1.0 - s.betas[i];
  }
  s.alpha_bars.assign(steps + 1, 1.0);
  s.one_minus_alpha_bars.assign(steps + 1, 0.0);
  for (int n = 1; n <= steps; ++n) {
    s.alpha_bars[n] = s.alpha_bars[n - 1] * s.alphas[n - 1];
    s.one_minus_alpha_bars[n] =
        s.one_minus_alpha_bars[n - 1] + s.alpha_bars[n - 1] * s.betas[n - 1];
  }
  s.sigma2.assign(steps + 1, 0.0);
  for (int n = 2; n <= steps; ++n) {
    s.sigma2[n] = (mode == SigmaMode::posterior)
                      ? s.one_minus_alpha_bars[n - 1] /
                            s.one_minus_alpha_bars[n] * s.betas[n - 1]
                      : s.betas[n - 1];
  }
  return s;
}

MatrixXd gaussian_like(int rows, int cols, Rng& rng) {
  require(rows >= 1 && cols >= 1, ErrorKind::invalid_argument,
          "gaussian_like: bad shape");
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

MatrixXd forward_sample(const NoiseSchedule& sched, const MatrixXd& x0, int n,
                        const MatrixXd& eps) {
  check_step(sched, n, 1, "forward_sample");
  require(eps.rows() == x0.rows() && eps.cols() == x0.cols(), ErrorKind::shape,
          "forward_sample: eps shape mismatch");
  double a = std::sqrt(sched.alpha_bars[n]);
  double b = std::sqrt(sched.one_minus_alpha_bars[n]);
  return a * x0 + b * eps;
}

MatrixXd forward_sample(const NoiseSchedule& sched, const MatrixXd& x0, int n,
                        Rng& rng) {
  MatrixXd eps =
      gaussian_like(static_cast<int>(x0.rows()), static_cast<int>(x0.cols()),
                    rng);
  return forward_sample(sched, x0, n, eps);
}

MatrixXd posterior_mean(const NoiseSchedule& sched, const MatrixXd& x0_hat,
                        const MatrixXd& x_n, int n) {
  check_step(sched, n, 1, "posterior_mean");
  require(x0_hat.rows() == x_n.rows() && x0_hat.cols() == x_n.cols(),
          ErrorKind::shape, "posterior_mean: shape mismatch");
  double omb = sched.one_minus_alpha_bars[n];
  double c0 = std::sqrt(sched.alpha_bars[n - 1]) * sched.betas[n - 1] / omb;
  double c1 =
      std::sqrt(sched.alphas[n - 1]) * sched.one_minus_alpha_bars[n - 1] / omb;
  return c0 * x0_hat + c1 * x_n;
}

MatrixXd reverse_step(const NoiseSchedule& sched, const MatrixXd& x0_hat,
                      const MatrixXd& x_n, int n, Rng& rng) {
  MatrixXd mu = posterior_mean(sched, x0_hat, x_n, n);
  if (n > 1) {
    double s = std::sqrt(sched.sigma2[n]);
    mu += s * gaussian_like(static_cast<int>(mu.rows()),
                            static_cast<int>(mu.cols()), rng);
  }
  return mu;
}

Denoiser make_denoiser(nets::TransformerConfig backbone, std::uint64_t seed) {
  backbone.input_dim = bodygen::kCondDim + bodygen::kPoseDim;
  backbone.output_dim = bodygen::kPoseDim;
  Denoiser net;
  Rng rng(seed);
  net.tf = nets::add_transformer(net.params, "denoiser", backbone, rng);
  return net;
}

int denoiser_forward(nets::Tape& tape, const Denoiser& net,
                     const std::vector<int>& leaves, int cond, int x, int n) {
  require(n >= 1, ErrorKind::invalid_argument,
          "denoiser_forward: step must be positive");
  require(tape.val(cond).cols() == bodygen::kCondDim, ErrorKind::shape,
          "denoiser_forward: condition width mismatch");
  require(tape.val(x).cols() == bodygen::kPoseDim, ErrorKind::shape,
          "denoiser_forward: pose width mismatch");
  require(tape.val(cond).rows() == tape.val(x).rows(), ErrorKind::shape,
          "denoiser_forward: condition and pose frame counts differ");
  int joint = tape.concat_cols(cond, x);
  int bias = tape.input(nets::sinusoidal_row(n, net.tf.cfg.d_model));
  return nets::transformer_forward(tape, net.tf, leaves, joint, bias);
}

int diffusion_loss(nets::Tape& tape, const NoiseSchedule& sched,
                   const Denoiser& net, const std::vector<int>& leaves,
                   const MatrixXd& cond, const MatrixXd& x0, int n,
                   const MatrixXd& eps) {
  MatrixXd x_n = forward_sample(sched, x0, n, eps);
  int cid = tape.input(cond);
  int xid = tape.input(x_n);
  int pred = denoiser_forward(tape, net, leaves, cid, xid, n);
  int diff = tape.sub(pred, tape.input(x0));
  double inv = 1.0 / static_cast<double>(x0.rows() * x0.cols());
  return tape.scale(tape.l1(diff), inv);
}

MatrixXd sample(const NoiseSchedule& sched, const Denoiser& net,
                const MatrixXd& cond, Rng& rng) {
  require(cond.rows() >= 1 && cond.cols() == bodygen::kCondDim,
          ErrorKind::shape, "sample: bad condition shape");
  int frames = static_cast<int>(cond.rows());
  MatrixXd x = gaussian_like(frames, bodygen::kPoseDim, rng);
  for (int n = sched.steps; n >= 1; --n) {
    nets::Tape tape;
    std::vector<int> leaves = net.params.register_on(tape);
    int cid = tape.input(cond);
    int xid = tape.input(x);
    int pred = denoiser_forward(tape, net, leaves, cid, xid, n);
    x = reverse_step(sched, tape.val(pred), x, n, rng);
  }
  return x;
}

int best_of_k(const std::vector<double>& scores) {
  require(!scores.empty(), ErrorKind::invalid_argument,
          "best_of_k: empty score list");
  int best = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), ErrorKind::non_finite,
            "best_of_k: non-finite score");
    if (scores[i] < scores[best]) best = static_cast<int>(i);
  }
  return best;
}

Normalizer fit_normalizer(const std::vector<MatrixXd>& seqs,
                          double stdev_floor) {
  require(!seqs.empty(), ErrorKind::invalid_argument,
          "fit_normalizer: no sequences");
  require(stdev_floor > 0.0, ErrorKind::invalid_argument,
          "fit_normalizer: floor must be positive");
  Eigen::Index cols = seqs.front().cols();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(cols);
  Eigen::RowVectorXd sumsq = Eigen::RowVectorXd::Zero(cols);
  double rows = 0.0;
  for (const MatrixXd& s : seqs) {
    require(s.cols() == cols && s.rows() >= 1, ErrorKind::shape,
            "fit_normalizer: inconsistent sequence shape");
    sum += s.colwise().sum();
    sumsq += s.array().square().colwise().sum().matrix();
    rows += static_cast<double>(s.rows());
  }
  Normalizer nrm;
  nrm.mean = sum / rows;
  Eigen::RowVectorXd var =
      (sumsq / rows - nrm.mean.cwiseProduct(nrm.mean)).cwiseMax(0.0);
  nrm.stdev = var.cwiseSqrt().cwiseMax(stdev_floor);
  return nrm;
}

MatrixXd normalize(const Normalizer& nrm, const MatrixXd& x) {
  require(x.cols() == nrm.mean.cols(), ErrorKind::shape,
          "normalize: channel count mismatch");
  MatrixXd y = x;
  y.rowwise() -= nrm.mean;
  y.array().rowwise() /= nrm.stdev.array();
  return y;
}

MatrixXd denormalize(const Normalizer& nrm, const MatrixXd& x) {
  require(x.cols() == nrm.mean.cols(), ErrorKind::shape,
          "denormalize: channel count mismatch");
  MatrixXd y = x;
  y.array().rowwise() *= nrm.stdev.array();
  y.rowwise() += nrm.mean;
  return y;
}

}  // namespace egomo::diffusion
