#pragma once

// Cutting-plane solver for
//
//   min over PSD A of  sup_v | t(v) - v^T A v |
//
// where t(v) is an empirical process along v. A working set V of directions
// is grown from the worst directions found by the sphere search; on V the
// problem is a convex min-max over symmetric matrices, solved by projected
// subgradient steps with a Polyak target level.

#include <span>
#include <vector>

#include "robustcov/core.hpp"
#include "robustcov/directions.hpp"

namespace robustcov {

struct FitOptions {
  int outer_iterations = 8;
  int inner_iterations = 500;
  /// Multiplier on the Polyak step (F - level) / ||g||^2.
  double step_scale = 1.0;
  /// The outer loop stops once the sphere search cannot raise the working-set
  /// residual by more than this relative amount.
  double tolerance = 1e-3;
  double abs_tolerance = 1e-12;
  /// Refined worst directions added to the working set per outer iteration.
  int cuts_per_round = 4;
};

/// The process t(v) that the quadratic form must match.
class DirectionalTarget {
 public:
  virtual ~DirectionalTarget() = default;
  /// Sample whose covariance eigenvectors seed the direction search.
  virtual const Sample& seeding_sample() const = 0;
  /// Data blocks whose projections `value` reads.
  virtual std::vector<const Eigen::MatrixXd*> blocks() const = 0;
  virtual double value(const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> projections) const = 0;

  double operator()(const Eigen::VectorXd& v) const;
  ProjectedObjective objective() const;
};

/// (1 / (lambda N)) sum_i psi(lambda <x_i, v>^2).
class TruncatedTarget final : public DirectionalTarget {
 public:
  TruncatedTarget(const Sample& s, double lambda);
  const Sample& seeding_sample() const override { return sample_; }
  std::vector<const Eigen::MatrixXd*> blocks() const override { return {&sample_.rows()}; }
  double value(const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> projections) const override;

 private:
  const Sample& sample_;
  double lambda_;
};

struct InnerFit {
  Eigen::MatrixXd A;
  double residual = 0.0;
  /// Best residual after every accepted iterate; non-increasing.
  std::vector<double> trace;
};

/// min over PSD A of max_k |targets_k - v_k^T A v_k| for the columns v_k of
/// `directions`. Candidates psd_project(start) and the PSD projection of the
/// least-squares fit seed the subgradient iteration; the best iterate wins.
InnerFit solve_minmax_inner(const Eigen::MatrixXd& directions, const Eigen::VectorXd& targets,
                            const Eigen::MatrixXd& start, int iterations, double step_scale = 1.0);

struct FitResult {
  Eigen::MatrixXd A;
  /// max(working-set residual, sphere-search residual) at A: a lower bound on
  /// the true sup over the sphere.
  double residual = 0.0;
  double inner_residual = 0.0;
  Eigen::VectorXd worst_direction;
  bool converged = false;
  int outer_iterations = 0;
  Eigen::Index working_set_size = 0;
  std::vector<double> inner_trace;
};

FitResult fit_minmax(const DirectionalTarget& target, const Eigen::MatrixXd& warm_start, const FitOptions& fit,
                     const DirectionSearchOptions& search);

}  // namespace robustcov
