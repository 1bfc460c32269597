#pragma once

// Approximate suprema over the unit sphere S^{d-1}.
//
// A sup over all directions is replaced by a max over a finite DirectionSet
// (seeded random probes, eigenvectors of a residual matrix and the coordinate
// axes), followed by local coordinate ascent on the best few seeds. Every value
// returned here is attained at an actual unit vector, so it is a lower bound on
// the true supremum.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "robustcov/core.hpp"
#include "robustcov/truncation.hpp"

namespace robustcov {

struct DirectionSearchOptions {
  /// Random probes per seeding; 0 selects max(256, 32 d).
  int budget = 0;
  /// Coordinate-ascent sweeps per refined seed.
  int refine_steps = 50;
  /// Number of best seeds that are refined.
  int refine_top = 4;
  /// A sweep that improves the objective by less than this (relative) stops refinement.
  double refine_tol = 1e-8;
  std::uint64_t seed = 0;

  int resolved_budget(Eigen::Index dim) const;
};

/// Unit vectors stored as the columns of a d x m matrix.
class DirectionSet {
 public:
  DirectionSet(Eigen::MatrixXd directions, int refine_steps = 50, int refine_top = 4);

  Eigen::Index dim() const noexcept { return dirs_.rows(); }
  Eigen::Index size() const noexcept { return dirs_.cols(); }
  const Eigen::MatrixXd& directions() const noexcept { return dirs_; }
  Eigen::VectorXd direction(Eigen::Index i) const { return dirs_.col(i); }
  int refine_steps() const noexcept { return refine_steps_; }
  int refine_top() const noexcept { return refine_top_; }

  void set_refine_steps(int steps);
  void set_refine_top(int top);

  /// Appends v / ||v||; v must be nonzero with matching dimension.
  void add(const Eigen::VectorXd& v);

 private:
  Eigen::MatrixXd dirs_;
  int refine_steps_;
  int refine_top_;
};

/// Union of `budget` seeded Gaussian directions, the eigenvectors of
/// sample_covariance(s) - A and the coordinate axes, with antipodal duplicates
/// removed. Deterministic in (s, A, budget, seed).
DirectionSet seed_directions(const Sample& s, const Eigen::MatrixXd& A, int budget, std::uint64_t seed,
                             int refine_steps = 50);

/// An objective on the sphere that depends on the data only through the
/// projections block * v of a fixed list of data blocks.
struct ProjectedObjective {
  std::vector<const Eigen::MatrixXd*> blocks;
  std::function<double(const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> projections)> value;

  double operator()(const Eigen::VectorXd& v) const;
};

/// Objective value at every column of `directions`, in column order.
Eigen::VectorXd evaluate_directions(const ProjectedObjective& objective, const Eigen::MatrixXd& directions);

struct RefineResult {
  Eigen::VectorXd direction;
  double value = 0.0;
  /// Objective after every accepted move; non-decreasing.
  std::vector<double> trace;
};

/// Spherical coordinate ascent: rotate v towards +/- each axis (Gram-Schmidt
/// against v) by an angle h, accept improvements, halve h after a sweep
/// without improvement.
RefineResult refine_direction(const ProjectedObjective& objective, Eigen::VectorXd v, int steps,
                              double rel_tol = 1e-8);

struct SearchResult {
  double value = 0.0;
  Eigen::VectorXd direction;
  /// Unrefined value of every seed.
  Eigen::VectorXd seed_values;
  /// Refined versions of the best seeds, best first.
  std::vector<RefineResult> refined;
};

/// Max of the objective over the set after refining its best seeds. Ties
/// resolve to the lowest index.
SearchResult maximize_over(const ProjectedObjective& objective, const DirectionSet& ds, double rel_tol = 1e-8);

struct ResidualResult {
  double value = 0.0;
  Eigen::VectorXd direction;
};

/// max over the (refined) set of |truncated_process(s, v, lambda) - v^T A v|.
ResidualResult max_residual(const Sample& s, const Eigen::MatrixXd& A, TruncationLevel level,
                            const DirectionSet& ds);

/// max over the (refined) set of (1/N) sum_i psi(alpha^2 <x_i, v>^2), in [0, 1].
double sup_truncated_mass(const Sample& s, double alpha, const DirectionSet& ds);

}  // namespace robustcov
