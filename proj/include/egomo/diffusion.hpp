#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "egomo/bodygen.hpp"
#include "egomo/nets.hpp"
#include "egomo/rng.hpp"

namespace egomo::diffusion {

using Eigen::MatrixXd;

enum class SigmaMode {
  posterior,  // sigma^2_n = (1 - abar_{n-1}) / (1 - abar_n) * beta_n
  beta,       // sigma^2_n = beta_n, except sigma^2_1 = 0
};

// Steps are numbered 1..steps; index 0 of the abar-style tables is the clean
// state. one_minus_alpha_bars is built by the recurrence
//   omb[n] = omb[n-1] + abar[n-1] * beta_n
// rather than 1 - abar[n], so omb[1] == beta_1 bit-exactly and the n = 1
// reverse step collapses onto x0_hat with no rounding residue.
struct NoiseSchedule {
  int steps = 0;
  SigmaMode mode = SigmaMode::posterior;
  std::vector<double> betas;                 // [n-1] = beta_n
  std::vector<double> alphas;                // [n-1] = 1 - beta_n
  std::vector<double> alpha_bars;            // [n] = prod alphas, [0] = 1
  std::vector<double> one_minus_alpha_bars;  // [n], [0] = 0
  std::vector<double> sigma2;                // [n], [0] = 0, [1] = 0

  double beta(int n) const;
  double alpha(int n) const;
  double alpha_bar(int n) const;             // n in 0..steps
  double one_minus_alpha_bar(int n) const;   // n in 0..steps
  double sigma_sq(int n) const;              // n in 1..steps
};

NoiseSchedule make_schedule(int steps, double beta_start = 1e-4,
                            double beta_end = 0.02,
                            SigmaMode mode = SigmaMode::posterior);

// Row-major draw order, one normal per entry.
MatrixXd gaussian_like(int rows, int cols, Rng& rng);

// x_n = sqrt(abar_n) x0 + sqrt(1 - abar_n) eps
MatrixXd forward_sample(const NoiseSchedule& sched, const MatrixXd& x0, int n,
                        const MatrixXd& eps);
MatrixXd forward_sample(const NoiseSchedule& sched, const MatrixXd& x0, int n,
                        Rng& rng);

// Mean of p(x_{n-1} | x_n, x0_hat):
//   sqrt(abar_{n-1}) beta_n / omb_n * x0_hat + sqrt(alpha_n) omb_{n-1} / omb_n * x_n
MatrixXd posterior_mean(const NoiseSchedule& sched, const MatrixXd& x0_hat,
                        const MatrixXd& x_n, int n);

// Draws noise only when n > 1; the final step is deterministic, so the rng
// stream position is part of the contract.
MatrixXd reverse_step(const NoiseSchedule& sched, const MatrixXd& x0_hat,
                      const MatrixXd& x_n, int n, Rng& rng);

// Transformer over [cond | x] tokens predicting x0. The noise level enters as
// a sinusoidal embedding of n added to every token after the input projection.
struct Denoiser {
  nets::TransformerIds tf;
  nets::ParamStore params;
};

// Forces input_dim = kCondDim + kPoseDim and output_dim = kPoseDim.
Denoiser make_denoiser(nets::TransformerConfig backbone, std::uint64_t seed);

int denoiser_forward(nets::Tape& tape, const Denoiser& net,
                     const std::vector<int>& leaves, int cond, int x, int n);

// Mean L1 between the prediction at noise level n and x0. The noisy input is
// built from the fixed eps so the loss is deterministic per (x0, n, eps).
int diffusion_loss(nets::Tape& tape, const NoiseSchedule& sched,
                   const Denoiser& net, const std::vector<int>& leaves,
                   const MatrixXd& cond, const MatrixXd& x0, int n,
                   const MatrixXd& eps);

// Full reverse chain from x_N ~ N(0, I), one fresh forward pass per step.
MatrixXd sample(const NoiseSchedule& sched, const Denoiser& net,
                const MatrixXd& cond, Rng& rng);

// Index of the smallest score; ties resolve to the lowest index.
int best_of_k(const std::vector<double>& scores);

// Per-channel affine map fitted over all rows of all sequences. Channels with
// tiny spread keep a floor stdev so constant features stay finite.
struct Normalizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stdev;
};

Normalizer fit_normalizer(const std::vector<MatrixXd>& seqs,
                          double stdev_floor = 1e-6);
MatrixXd normalize(const Normalizer& nrm, const MatrixXd& x);
MatrixXd denormalize(const Normalizer& nrm, const MatrixXd& x);

}  // namespace egomo::diffusion
