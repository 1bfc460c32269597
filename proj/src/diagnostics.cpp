#include "robustcov/diagnostics.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "robustcov/truncation.hpp"

namespace robustcov {
namespace {

constexpr Eigen::Index kGreedyStarts = 16;

double binomial(Eigen::Index n, Eigen::Index k) {
  double c = 1.0;
  for (Eigen::Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

double gram_lambda_max(const Sample& s, const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) return 0.0;
  if (rows.size() == 1) return s.row(rows[0]).squaredNorm();
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), s.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = s.row(rows[i]);
  const Eigen::MatrixXd gram = sub.rows() <= sub.cols() ? Eigen::MatrixXd(sub * sub.transpose())
                                                        : Eigen::MatrixXd(sub.transpose() * sub);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

double f_stat_bruteforce(const Sample& s, Eigen::Index k, double max_subsets) {
  const Eigen::Index n = s.size();
  if (k < 1 || k > n) throw InvalidParameter("f statistic needs 1 <= k <= N");
  if (binomial(n, k) > max_subsets) throw BudgetExceeded("too many subsets for exhaustive enumeration");

  // Supersets never lower lambda_max, so subsets of size exactly k suffice.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  double best = 0.0;
  while (true) {
    best = std::max(best, gram_lambda_max(s, idx));
    Eigen::Index pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (Eigen::Index j = pos + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

double f_stat_greedy(const Sample& s, Eigen::Index k) {
  const Eigen::Index n = s.size();
  if (k < 1 || k > n) throw InvalidParameter("f statistic needs 1 <= k <= N");
  // Restart from each of the heaviest rows; every path is nondecreasing in k.
  const Eigen::VectorXd norms = s.rows().rowwise().squaredNorm();
  std::vector<Eigen::Index> starts(static_cast<std::size_t>(n));
  std::iota(starts.begin(), starts.end(), Eigen::Index{0});
  std::stable_sort(starts.begin(), starts.end(), [&](Eigen::Index a, Eigen::Index b) { return norms(a) > norms(b); });
  starts.resize(static_cast<std::size_t>(std::min<Eigen::Index>(n, kGreedyStarts)));

  double value = 0.0;
  for (Eigen::Index first : starts) {
    std::vector<Eigen::Index> chosen{first};
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    used[static_cast<std::size_t>(first)] = true;
    double path = norms(first);
    for (Eigen::Index step = 1; step < k; ++step) {
      double best = -1.0;
      Eigen::Index pick = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        std::vector<Eigen::Index> trial = chosen;
        trial.insert(std::upper_bound(trial.begin(), trial.end(), j), j);
        const double v = gram_lambda_max(s, trial);
        if (v > best) {
          best = v;
          pick = j;
        }
      }
      used[static_cast<std::size_t>(pick)] = true;
      chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), pick), pick);
      path = best;
    }
    value = std::max(value, path);
  }
  return value;
}

Decomposition peaky_spread_decompose(const Sample& s, double lambda, const Eigen::MatrixXd& ref,
                                     const DirectionSet& ds) {
  const TruncationLevel level(lambda);
  detail::require_symmetric(ref);
  if (ref.rows() != s.dim() || ds.dim() != s.dim()) throw InvalidParameter("dimension mismatch in decomposition");
  const double n = static_cast<double>(s.size());
  const std::vector<const Eigen::MatrixXd*> blocks{&s.rows()};

  const ProjectedObjective peaky{blocks, [&](const Eigen::VectorXd&, std::span<const Eigen::VectorXd> p) {
                                   const Eigen::ArrayXd sq = p[0].array().square();
                                   return (lambda * sq > 1.0).select(sq, 0.0).sum() / n;
                                 }};
  const ProjectedObjective spread{blocks, [&](const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> p) {
                                    return std::abs(truncated_mean(p[0], level.value()) - v.dot(ref * v));
                                  }};
  const ProjectedObjective total{blocks, [&](const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> p) {
                                   return std::abs(p[0].squaredNorm() / n - v.dot(ref * v));
                                 }};

  DirectionSet shared = ds;
  for (const ProjectedObjective* obj : {&peaky, &spread, &total}) {
    for (const auto& r : maximize_over(*obj, ds).refined) shared.add(r.direction);
  }

  Decomposition out;
  out.directions = shared.directions();
  out.peaky_values = evaluate_directions(peaky, out.directions);
  out.spread_values = evaluate_directions(spread, out.directions);
  out.total_values = evaluate_directions(total, out.directions);
  out.peaky = out.peaky_values.maxCoeff();
  out.spread = out.spread_values.maxCoeff();
  out.total = out.total_values.maxCoeff();
  return out;
}

double truncated_gaussian_factor(Eigen::Index d, double R) {
  if (d < 1 || !(R >= 0.0)) throw InvalidParameter("truncation factor needs d >= 1 and R >= 0");
  return boost::math::gamma_p(static_cast<double>(d + 2) / 2.0, R * R / 2.0);
}

}  // namespace robustcov
