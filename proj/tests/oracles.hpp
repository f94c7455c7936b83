#pragma once

// Independent reference implementations used to check the library. These are
// deliberately written against different formulations than the code under
// test (quaternions instead of Rodrigues, direct sums instead of the metric
// kernels, numeric Bayes instead of the closed-form posterior).

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct Quat {
  double w, x, y, z;
};

inline Quat quat_mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Eigen::Matrix3d quat_to_mat(const Quat& q) {
  double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Exponential map through the unit quaternion exp(v/2).
inline Eigen::Matrix3d so3_exp_quat(const Eigen::Vector3d& v) {
  double theta = v.norm();
  Quat q;
  if (theta < 1e-12) {
    q = {1.0, 0.5 * v.x(), 0.5 * v.y(), 0.5 * v.z()};
  } else {
    double s = std::sin(0.5 * theta) / theta;
    q = {std::cos(0.5 * theta), s * v.x(), s * v.y(), s * v.z()};
  }
  return quat_to_mat(q);
}

// Uniform rotation via a normalized 4-dimensional Gaussian sample. Takes the
// four normals from the caller so it stays agnostic of the library RNG.
inline Eigen::Matrix3d rotation_from_normals(double a, double b, double c,
                                             double d) {
  return quat_to_mat({a, b, c, d});
}

// Scalar Gaussian pdf.
inline double gauss_pdf(double x, double mean, double var) {
  double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

// Numeric posterior mean of x_{n-1} given x_n and x_0 for the chain
// x_k = sqrt(1-beta_k) x_{k-1} + sqrt(beta_k) eps, evaluated by quadrature
// over a wide grid. Independent of any closed-form simplification.
inline double bayes_posterior_mean(double x_n, double x_0, double beta_n,
                                   double abar_prev) {
  double lik_mean_scale = std::sqrt(1.0 - beta_n);
  double prior_mean = std::sqrt(abar_prev) * x_0;
  double prior_var = 1.0 - abar_prev;
  if (prior_var <= 0.0) return prior_mean;  // n = 1: prior is a point mass
  double lo = -60.0, hi = 60.0;
  int steps = 600000;
  double h = (hi - lo) / steps;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= steps; ++i) {
    double u = lo + i * h;
    double w = gauss_pdf(x_n, lik_mean_scale * u, beta_n) *
               gauss_pdf(u, prior_mean, prior_var);
    double trap = (i == 0 || i == steps) ? 0.5 : 1.0;
    num += trap * w * u;
    den += trap * w;
  }
  return num / den;
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// Quantile of a two-component Gaussian mixture by bisection.
inline double mixture_quantile(double p, double m0, double m1, double sd) {
  double lo = std::min(m0, m1) - 12 * sd, hi = std::max(m0, m1) + 12 * sd;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double c = 0.5 * normal_cdf(mid, m0, sd) + 0.5 * normal_cdf(mid, m1, sd);
    if (c < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// 1-Wasserstein distance between an empirical sample and the mixture, via
// quantile matching at the midpoints.
inline double w1_to_mixture(std::vector<double> samples, double m0, double m1,
                            double sd) {
  std::sort(samples.begin(), samples.end());
  double acc = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double p = (i + 0.5) / samples.size();
    acc += std::abs(samples[i] - mixture_quantile(p, m0, m1, sd));
  }
  return acc / samples.size();
}

}  // namespace oracle
