#pragma once

// Scalar robust statistics: quantiles of discrete laws, the split trimmed
// mean, the trace estimator built on it, and the mean-estimation lower-bound
// functional epsilon(X, eta).

#include <span>
#include <utility>
#include <vector>

#include "robustcov/core.hpp"

namespace robustcov {

struct Atom {
  double value;
  double prob;
};

/// Finite-support law; atoms are kept sorted by value with equal values merged.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  double mean() const;
  double second_moment() const;
  /// P(X >= m).
  double tail(double m) const;
  /// Law of c * X (c > 0) or X + c.
  DiscreteDistribution scaled(double c) const;
  DiscreteDistribution shifted(double c) const;

 private:
  std::vector<Atom> atoms_;
};

/// Y_1 = +-1/sqrt(eta) w.p. eta/2 each, +-1 w.p. (1-eta)/2 each, multiplied by
/// sigma_sq / sqrt(2 - eta) when `sigma_sq` is given (the law Y_2).
DiscreteDistribution fourpoint_distribution(double eta, double sigma_sq = 0.0);

/// Closed form sqrt(eta)/2 - eta/2 of epsilon(Y_1, eta), times the Y_2 scale
/// factor when `sigma_sq` > 0.
double fourpoint_lower_bound(double eta, double sigma_sq = 0.0);

/// Q_q(X) = sup{M : P(X >= M) >= 1 - q}, attained at an atom.
double quantile_Q(const DiscreteDistribution& d, double q);

/// epsilon(X, eta): the larger of the two tail first moments of the centered
/// law beyond its eta/2 and 1 - eta/2 quantiles.
double epsilon_lower_bound(const DiscreteDistribution& d, double eta);

/// Split trimmed mean over 2m values: with k = max(1, ceil(eps m)), clamp the
/// second half to [k-th smallest, k-th largest] of the first half and average.
/// Requires 2k <= m.
double trimmed_mean(std::span<const double> values, double eps);

/// eps = 8 eta + 12 log(4/delta) / n.
double trace_epsilon(double eta, double delta, Eigen::Index n);

/// Trimmed mean of the squared row norms with eps = trace_epsilon(eta, delta, N)
/// where the sample holds 2N rows; clamped below at 0.
double estimate_trace(const Sample& s, double eta, double delta);

}  // namespace robustcov
