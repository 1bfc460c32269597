#include "robustcov/directions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robustcov/rng.hpp"

namespace robustcov {
namespace {

// Chunk of directions projected at once; bounds the N x chunk scratch matrix.
constexpr Eigen::Index kChunk = 64;

void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

int DirectionSearchOptions::resolved_budget(Eigen::Index dim) const {
  if (budget > 0) return budget;
  return std::max<int>(256, 32 * static_cast<int>(dim));
}

DirectionSet::DirectionSet(Eigen::MatrixXd directions, int refine_steps, int refine_top)
    : dirs_(std::move(directions)), refine_steps_(0), refine_top_(1) {
  if (dirs_.cols() < 1 || dirs_.rows() < 1) throw InvalidParameter("direction set must be nonempty");
  for (Eigen::Index j = 0; j < dirs_.cols(); ++j) {
    if (!(std::abs(dirs_.col(j).norm() - 1.0) <= 1e-10)) {
      throw InvalidDirection("direction set contains a non-unit vector");
    }
  }
  set_refine_steps(refine_steps);
  set_refine_top(refine_top);
}

void DirectionSet::set_refine_steps(int steps) {
  if (steps < 0) throw InvalidParameter("refine_steps must be nonnegative");
  refine_steps_ = steps;
}

void DirectionSet::set_refine_top(int top) {
  if (top < 1) throw InvalidParameter("refine_top must be at least 1");
  refine_top_ = top;
}

void DirectionSet::add(const Eigen::VectorXd& v) {
  if (v.size() != dim()) throw InvalidParameter("direction dimension mismatch");
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidDirection("cannot add a zero direction");
  dirs_.conservativeResize(Eigen::NoChange, dirs_.cols() + 1);
  dirs_.col(dirs_.cols() - 1) = v / n;
}

DirectionSet seed_directions(const Sample& s, const Eigen::MatrixXd& A, int budget, std::uint64_t seed,
                             int refine_steps) {
  if (budget < 1) throw InvalidParameter("direction budget must be at least 1");
  const Eigen::Index d = s.dim();
  if (A.rows() != d || A.cols() != d) throw InvalidParameter("residual matrix dimension mismatch");

  Rng rng(seed);
  Eigen::MatrixXd candidates(d, budget + 2 * d);
  Eigen::Index m = 0;
  {
    const Eigen::MatrixXd g = standard_normal(d, budget, rng);
    for (Eigen::Index j = 0; j < budget; ++j) {
      const double n = g.col(j).norm();
      if (n > 0.0) candidates.col(m++) = g.col(j) / n;
    }
  }
  {
    const Eigen::MatrixXd residual = symmetrize(sample_covariance(s) - A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(residual);
    // Largest |eigenvalue| first, so the most informative vectors survive dedup.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
    });
    for (Eigen::Index k : order) candidates.col(m++) = es.eigenvectors().col(k).normalized();
  }
  for (Eigen::Index k = 0; k < d; ++k) candidates.col(m++) = Eigen::VectorXd::Unit(d, k);

  Eigen::MatrixXd kept(d, m);
  Eigen::Index n_kept = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = candidates.col(j);
    canonicalize_sign(v);
    bool duplicate = false;
    if (n_kept > 0) {
      const Eigen::VectorXd overlaps = (kept.leftCols(n_kept).transpose() * v).cwiseAbs();
      duplicate = overlaps.maxCoeff() > 1.0 - 1e-12;
    }
    if (!duplicate) kept.col(n_kept++) = v;
  }
  return DirectionSet(kept.leftCols(n_kept), refine_steps);
}

double ProjectedObjective::operator()(const Eigen::VectorXd& v) const {
  std::vector<Eigen::VectorXd> proj;
  proj.reserve(blocks.size());
  for (const auto* b : blocks) proj.emplace_back(*b * v);
  return value(v, proj);
}

Eigen::VectorXd evaluate_directions(const ProjectedObjective& objective, const Eigen::MatrixXd& directions) {
  const Eigen::Index m = directions.cols();
  Eigen::VectorXd values(m);
  std::vector<Eigen::MatrixXd> chunk_proj(objective.blocks.size());
  std::vector<Eigen::VectorXd> proj(objective.blocks.size());
  for (Eigen::Index start = 0; start < m; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, m - start);
    for (std::size_t b = 0; b < objective.blocks.size(); ++b) {
      chunk_proj[b].noalias() = *objective.blocks[b] * directions.middleCols(start, len);
    }
    for (Eigen::Index j = 0; j < len; ++j) {
      for (std::size_t b = 0; b < proj.size(); ++b) proj[b] = chunk_proj[b].col(j);
      values(start + j) = objective.value(directions.col(start + j), proj);
    }
  }
  return values;
}

RefineResult refine_direction(const ProjectedObjective& objective, Eigen::VectorXd v, int steps, double rel_tol) {
  require_unit(v);
  const Eigen::Index d = v.size();
  const std::size_t nb = objective.blocks.size();
  std::vector<Eigen::VectorXd> a(nb), b(nb), trial(nb), best_trial(nb);

  RefineResult out;
  auto project_all = [&](const Eigen::VectorXd& dir) {
    for (std::size_t k = 0; k < nb; ++k) a[k].noalias() = *objective.blocks[k] * dir;
  };
  project_all(v);
  double f = objective.value(v, a);
  double h = 0.5;

  for (int step = 0; step < steps && d > 1; ++step) {
    const double f_start = f;
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::VectorXd u = -v(j) * v;
      u(j) += 1.0;
      const double nu = u.norm();
      if (nu < 1e-8) continue;
      u /= nu;
      for (std::size_t k = 0; k < nb; ++k) {
        b[k] = (objective.blocks[k]->col(j) - v(j) * a[k]) / nu;
      }
      double best_f = f;
      double best_theta = 0.0;
      for (double theta : {h, -h}) {
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t k = 0; k < nb; ++k) trial[k] = c * a[k] + s * b[k];
        const Eigen::VectorXd w = c * v + s * u;
        const double fw = objective.value(w, trial);
        if (fw > best_f) {
          best_f = fw;
          best_theta = theta;
          std::swap(best_trial, trial);
        }
      }
      if (best_theta != 0.0) {
        v = std::cos(best_theta) * v + std::sin(best_theta) * u;
        v.normalize();
        std::swap(a, best_trial);
        f = best_f;
        out.trace.push_back(f);
      }
    }
    if (f == f_start) {
      h *= 0.5;
      if (h < 1e-9) break;
    } else {
      if (f - f_start < rel_tol * std::abs(f_start)) break;
      // resync projections with the renormalized direction
      project_all(v);
      const double resynced = objective.value(v, a);
      if (resynced > f) f = resynced;
    }
  }
  out.direction = std::move(v);
  out.value = f;
  return out;
}

SearchResult maximize_over(const ProjectedObjective& objective, const DirectionSet& ds, double rel_tol) {
  SearchResult out;
  out.seed_values = evaluate_directions(objective, ds.directions());
  const Eigen::Index m = ds.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto top = std::min<Eigen::Index>(ds.refine_top(), m);
  std::partial_sort(order.begin(), order.begin() + top, order.end(), [&](Eigen::Index x, Eigen::Index y) {
    const double vx = out.seed_values(x), vy = out.seed_values(y);
    return vx > vy || (vx == vy && x < y);
  });

  Eigen::Index best_seed = order.front();
  out.value = out.seed_values(best_seed);
  out.direction = ds.direction(best_seed);
  if (ds.refine_steps() == 0) return out;

  for (Eigen::Index r = 0; r < top; ++r) {
    RefineResult refined = refine_direction(objective, ds.direction(order[r]), ds.refine_steps(), rel_tol);
    if (refined.value > out.value) {
      out.value = refined.value;
      out.direction = refined.direction;
    }
    out.refined.push_back(std::move(refined));
  }
  std::stable_sort(out.refined.begin(), out.refined.end(),
                   [](const RefineResult& x, const RefineResult& y) { return x.value > y.value; });
  return out;
}

ResidualResult max_residual(const Sample& s, const Eigen::MatrixXd& A, TruncationLevel level,
                            const DirectionSet& ds) {
  if (ds.size() < 1) throw InvalidParameter("empty direction set");
  if (ds.dim() != s.dim() || A.rows() != s.dim() || A.cols() != s.dim()) {
    throw InvalidParameter("dimension mismatch in max_residual");
  }
  const double lambda = level.value();
  ProjectedObjective objective{{&s.rows()},
                               [&](const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> proj) {
                                 return std::abs(truncated_mean(proj[0], lambda) - v.dot(A * v));
                               }};
  SearchResult r = maximize_over(objective, ds);
  return {r.value, std::move(r.direction)};
}

double sup_truncated_mass(const Sample& s, double alpha, const DirectionSet& ds) {
  if (!(alpha > 0.0)) throw InvalidParameter("alpha must be positive");
  if (ds.dim() != s.dim()) throw InvalidParameter("dimension mismatch in sup_truncated_mass");
  const double a2 = alpha * alpha;
  ProjectedObjective objective{{&s.rows()}, [a2](const Eigen::VectorXd&, std::span<const Eigen::VectorXd> proj) {
                                 const auto& p = proj[0];
                                 return (a2 * p.array().square()).min(1.0).mean();
                               }};
  return maximize_over(objective, ds).value;
}

}  // namespace robustcov
