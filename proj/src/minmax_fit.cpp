#include "robustcov/minmax_fit.hpp"

#include <cmath>

#include "robustcov/rng.hpp"
#include "robustcov/truncation.hpp"

namespace robustcov {
namespace {

Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& dirs, const Eigen::MatrixXd& A) {
  return (dirs.array() * (A * dirs).array()).colwise().sum().transpose();
}

// Least-squares symmetric A with v_k^T A v_k ~ t_k, via the half-vectorization.
Eigen::MatrixXd least_squares_fit(const Eigen::MatrixXd& dirs, const Eigen::VectorXd& t) {
  const Eigen::Index d = dirs.rows();
  const Eigen::Index m = dirs.cols();
  const Eigen::Index p = d * (d + 1) / 2;
  Eigen::MatrixXd design(m, p);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i; j < d; ++j) {
        design(k, c++) = (i == j ? 1.0 : 2.0) * dirs(i, k) * dirs(j, k);
      }
    }
  }
  const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(t);
  Eigen::MatrixXd A(d, d);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      A(i, j) = A(j, i) = coef(c++);
    }
  }
  return A;
}

}  // namespace

double DirectionalTarget::operator()(const Eigen::VectorXd& v) const { return objective()(v); }

ProjectedObjective DirectionalTarget::objective() const {
  return {blocks(), [this](const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> proj) {
            return value(v, proj);
          }};
}

TruncatedTarget::TruncatedTarget(const Sample& s, double lambda) : sample_(s), lambda_(TruncationLevel(lambda).value()) {}

double TruncatedTarget::value(const Eigen::VectorXd&, std::span<const Eigen::VectorXd> projections) const {
  return truncated_mean(projections[0], lambda_);
}

InnerFit solve_minmax_inner(const Eigen::MatrixXd& directions, const Eigen::VectorXd& targets,
                            const Eigen::MatrixXd& start, int iterations, double step_scale) {
  if (directions.cols() != targets.size() || directions.cols() < 1) {
    throw InvalidParameter("inner fit needs one target per direction");
  }
  auto max_abs_residual = [&](const Eigen::MatrixXd& A, Eigen::Index* arg, double* signed_r) {
    const Eigen::VectorXd r = targets - quadratic_forms(directions, A);
    Eigen::Index k = 0;
    const double f = r.cwiseAbs().maxCoeff(&k);
    if (arg) *arg = k;
    if (signed_r) *signed_r = r(k);
    return f;
  };

  InnerFit out;
  out.A = psd_project(start);
  out.residual = max_abs_residual(out.A, nullptr, nullptr);
  if (directions.cols() > 1) {
    Eigen::MatrixXd ls = psd_project(symmetrize(least_squares_fit(directions, targets)));
    const double f_ls = max_abs_residual(ls, nullptr, nullptr);
    if (f_ls < out.residual) {
      out.A = std::move(ls);
      out.residual = f_ls;
    }
  } else {
    // One direction: move along v v^T until the single equation is met.
    const Eigen::VectorXd v = directions.col(0);
    Eigen::MatrixXd exact = psd_project(symmetrize(out.A + (targets(0) - v.dot(out.A * v)) * v * v.transpose()));
    const double f_exact = max_abs_residual(exact, nullptr, nullptr);
    if (f_exact < out.residual) {
      out.A = std::move(exact);
      out.residual = f_exact;
    }
  }
  out.trace.push_back(out.residual);

  const double scale = std::max(1.0, targets.cwiseAbs().maxCoeff());
  Eigen::MatrixXd A = out.A;
  double gap = 0.5 * out.residual;
  int stall = 0;
  for (int it = 0; it < iterations; ++it) {
    if (out.residual <= 1e-15 * scale) break;
    Eigen::Index k = 0;
    double r = 0.0;
    const double f = max_abs_residual(A, &k, &r);
    if (f < out.residual) {
      out.residual = f;
      out.A = A;
      out.trace.push_back(f);
      stall = 0;
    } else if (++stall >= 20) {
      gap *= 0.5;
      A = out.A;
      stall = 0;
      continue;
    }
    const double level = out.residual - gap;
    const double step = step_scale * (f - level);
    const Eigen::VectorXd v = directions.col(k);
    A = psd_project(symmetrize(A + (r > 0 ? step : -step) * v * v.transpose()));
  }
  return out;
}

FitResult fit_minmax(const DirectionalTarget& target, const Eigen::MatrixXd& warm_start, const FitOptions& fit,
                     const DirectionSearchOptions& search) {
  const Sample& seeding = target.seeding_sample();
  const Eigen::Index d = seeding.dim();
  if (warm_start.rows() != d || warm_start.cols() != d) throw InvalidParameter("warm start dimension mismatch");
  if (fit.outer_iterations < 1 || fit.inner_iterations < 0) throw InvalidParameter("invalid fit budgets");

  const int budget = search.resolved_budget(d);
  const ProjectedObjective process = target.objective();

  Eigen::MatrixXd working =
      seed_directions(seeding, Eigen::MatrixXd::Zero(d, d), budget, search.seed, 0).directions();
  Eigen::VectorXd targets = evaluate_directions(process, working);

  FitResult out;
  out.A = psd_project(warm_start);
  for (int outer = 0; outer < fit.outer_iterations; ++outer) {
    InnerFit inner = solve_minmax_inner(working, targets, out.A, fit.inner_iterations, fit.step_scale);
    out.A = std::move(inner.A);
    out.inner_residual = inner.residual;
    out.inner_trace = std::move(inner.trace);
    out.outer_iterations = outer + 1;

    DirectionSet ds = seed_directions(seeding, out.A, budget, derive_seed(search.seed, static_cast<std::uint64_t>(outer) + 1),
                                      search.refine_steps);
    ds.set_refine_top(search.refine_top);
    const Eigen::MatrixXd& A = out.A;
    const ProjectedObjective residual{process.blocks,
                                      [&](const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> proj) {
                                        return std::abs(process.value(v, proj) - v.dot(A * v));
                                      }};
    SearchResult found = maximize_over(residual, ds, search.refine_tol);
    out.residual = std::max(out.inner_residual, found.value);
    out.worst_direction = found.direction;

    if (found.value <= out.inner_residual * (1.0 + fit.tolerance) + fit.abs_tolerance) {
      out.converged = true;
      break;
    }

    std::vector<Eigen::VectorXd> cuts{found.direction};
    for (const auto& r : found.refined) {
      if (static_cast<int>(cuts.size()) >= fit.cuts_per_round) break;
      if ((r.direction - found.direction).norm() > 1e-9) cuts.push_back(r.direction);
    }
    const Eigen::Index old = working.cols();
    working.conservativeResize(Eigen::NoChange, old + static_cast<Eigen::Index>(cuts.size()));
    for (std::size_t c = 0; c < cuts.size(); ++c) working.col(old + static_cast<Eigen::Index>(c)) = cuts[c];
    targets.conservativeResize(working.cols());
    targets.tail(static_cast<Eigen::Index>(cuts.size())) =
        evaluate_directions(process, working.rightCols(static_cast<Eigen::Index>(cuts.size())));
  }
  out.working_set_size = working.cols();
  if (out.worst_direction.size() == 0) out.worst_direction = Eigen::VectorXd::Unit(d, 0);
  return out;
}

}  // namespace robustcov
