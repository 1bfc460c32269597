#pragma once

// Desk-scale oracles for the sparse supremum
//
//   f(k) = sup over unit k-sparse y of || sum_i y_i x_i ||^2
//        = max over |I| <= k of lambda_max(Gram(x_I)),
//
// and for the split of the quadratic process into its truncation-exceeding
// (peaky) and clipped (spread) parts.

#include <Eigen/Dense>

#include <vector>

#include "robustcov/core.hpp"
#include "robustcov/directions.hpp"

namespace robustcov {

/// lambda_max of the Gram matrix of the rows in `rows` (ascending indices).
double gram_lambda_max(const Sample& s, const std::vector<Eigen::Index>& rows);

/// Exact f(k) by enumeration of all subsets of size min(k, N). Throws
/// BudgetExceeded when there are more than `max_subsets` of them.
double f_stat_bruteforce(const Sample& s, Eigen::Index k, double max_subsets = 1e6);

/// Greedy forward selection, restarted from each of the 16 largest-norm rows.
/// Each step adds the row (lowest index on ties) that maximizes lambda_max of
/// the grown Gram matrix.
double f_stat_greedy(const Sample& s, Eigen::Index k);

struct Decomposition {
  double peaky = 0.0;
  double spread = 0.0;
  double total = 0.0;
  /// Shared direction set (columns) and the three processes on it.
  Eigen::MatrixXd directions;
  Eigen::VectorXd peaky_values;
  Eigen::VectorXd spread_values;
  Eigen::VectorXd total_values;
};

/// On one direction set, the seeds of `ds` plus the refined maximizers of each
/// process:
///   peaky(v)  = (1/N) sum_i <x_i, v>^2 1{lambda <x_i, v>^2 > 1}
///   spread(v) = |(1/(N lambda)) sum_i psi(lambda <x_i, v>^2) - v^T ref v|
///   total(v)  = |(1/N) sum_i <x_i, v>^2 - v^T ref v|
Decomposition peaky_spread_decompose(const Sample& s, double lambda, const Eigen::MatrixXd& ref,
                                     const DirectionSet& ds);

/// P(chi^2_{d+2} <= R^2): a standard Gaussian in R^d truncated to the ball of
/// radius R has second-moment matrix equal to this factor times I.
double truncated_gaussian_factor(Eigen::Index d, double R);

}  // namespace robustcov
