#pragma once

// Adaptive estimate of ||Sigma|| by root finding on the truncated mass
//
//   phi(alpha) = (1/N) sup_v sum_i psi(alpha^2 <x_i, v>^2),
//
// solving phi(alpha) = 1/(20 c kappa^4) + eta and returning 1/(24 c kappa^4 alpha^2).

#include "robustcov/core.hpp"
#include "robustcov/directions.hpp"

namespace robustcov {

struct OpNormConfig {
  double eta = 0.0;
  double delta = 0.1;
  /// kappa(4), the L4-L2 norm-equivalence constant.
  double kappa4 = 1.5;
  /// The absolute constant c of the calibration equation.
  double c_catoni = 1.0;
  double bisect_tol = 1e-10;
  DirectionSearchOptions search;

  void validate() const;
  /// 1 / (20 c kappa^4) + eta.
  double target() const;
};

/// phi on a frozen direction set: the squared projections are computed once so
/// that every alpha is evaluated over exactly the same directions.
class TruncatedMassProfile {
 public:
  TruncatedMassProfile(const Sample& s, const DirectionSet& ds);

  double operator()(double alpha) const;
  /// Limit alpha -> infinity: largest fraction of rows with a nonzero projection.
  double saturation() const;
  const DirectionSet& directions() const noexcept { return ds_; }

 private:
  DirectionSet ds_;
  Eigen::MatrixXd squared_;  // N x m
};

/// Frozen direction set used by phi: seeded probes, eigenvectors of the
/// sample covariance and the axes, without refinement.
DirectionSet opnorm_directions(const Sample& s, const OpNormConfig& cfg);

/// phi(alpha) over opnorm_directions(s, cfg).
double phi(const Sample& s, double alpha, const OpNormConfig& cfg);

struct AlphaSolution {
  double alpha = 0.0;
  double lower = 0.0;  ///< phi(lower) < target
  double upper = 0.0;  ///< phi(upper) >= target
  int evaluations = 0;
};

/// Root of phi(alpha) = cfg.target() on the frozen set. The bracket is found
/// by doubling or halving from alpha = 1, then refined by geometric bisection
/// until |phi - target| <= bisect_tol or upper / lower - 1 <= bisect_tol.
AlphaSolution solve_alpha_hat(const Sample& s, const OpNormConfig& cfg);
AlphaSolution solve_alpha_hat(const TruncatedMassProfile& profile, const OpNormConfig& cfg);

/// 1 / (24 c kappa^4 alpha_hat^2).
double estimate_opnorm(const Sample& s, const OpNormConfig& cfg);

}  // namespace robustcov
