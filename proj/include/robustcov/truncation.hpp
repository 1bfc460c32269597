#pragma once

// Truncation primitives and the truncated quadratic empirical processes
//
//   (1 / (lambda N)) sum_i psi(lambda <x_i, v>^2)
//
// evaluated by every estimator in the library.

#include <Eigen/Dense>

#include "robustcov/core.hpp"

namespace robustcov {

/// Inverse scale at which squared projections are clipped; always > 0.
class TruncationLevel {
 public:
  explicit TruncationLevel(double lambda);
  double value() const noexcept { return lambda_; }

 private:
  double lambda_;
};

/// x on [-1, 1], sign(x) outside.
constexpr double psi(double x) noexcept { return x > 1.0 ? 1.0 : (x < -1.0 ? -1.0 : x); }

/// Clamp of x to [lo, hi]; lo <= hi.
double clamp_band(double x, double lo, double hi);

/// Two-sided truncation with levels lambda1 >= lambda2 > 0: identity on
/// [-1/lambda1, 1/lambda2], constant outside. psi_band(x, l, l) equals
/// psi(l x) / l.
double psi_band(double x, double lambda1, double lambda2);

/// (1 / (lambda N)) sum_i psi(lambda p_i^2) for precomputed projections p.
double truncated_mean(const Eigen::Ref<const Eigen::VectorXd>& projections, double lambda);

/// Truncated process of `s` along the unit vector `v`; value in [0, 1/lambda].
double truncated_process(const Sample& s, const Eigen::VectorXd& v, TruncationLevel level);

/// Direction-dependent trimming level 1 / (q_v + Q).
double trimming_level(double q_v, double Q);

/// Truncated process at the trimming level 1 / (q_v + Q); value in [0, q_v + Q].
double one_sided_process(const Sample& s, const Eigen::VectorXd& v, double q_v, double Q);

/// Rows with Euclidean norm above R become zero; N and d are preserved.
Sample norm_truncate(const Sample& s, double R);

/// Norm truncation radius (N tr(Sigma) ||Sigma||)^{1/4}.
double truncation_radius(Eigen::Index n, double trace, double opnorm);

/// Throws InvalidDirection unless | ||v|| - 1 | <= 1e-10.
void require_unit(const Eigen::VectorXd& v);

}  // namespace robustcov
