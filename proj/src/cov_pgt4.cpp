#include "robustcov/cov_pgt4.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robustcov/log.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/truncation.hpp"

namespace robustcov {
namespace {

enum Stream : std::uint64_t { kScaleStream = 1, kFitStream = 2 };

}  // namespace

void Pgt4Config::validate() const {
  if (!(p > 4.0)) throw InvalidParameter("p must exceed 4");
  if (!(kappa_p >= 1.0)) throw InvalidParameter("kappa(p) must be at least 1");
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
  if (!(eps_eta_factor >= 0.0) || !(eps_conf_factor >= 0.0)) throw InvalidParameter("epsilon factors must be nonnegative");
  if (!(q_floor_factor >= 0.0) || !(c_q0 >= 0.0)) throw InvalidParameter("Q floor factors must be nonnegative");
  if (q_grid && q_grid->first > q_grid->second) throw InvalidParameter("empty Q grid");
}

double epsilon_pgt4(double eta, double delta, Eigen::Index n, double eta_factor, double conf_factor) {
  if (n < 1 || !(delta > 0.0 && delta < 1.0)) throw InvalidParameter("epsilon needs N >= 1 and delta in (0, 1)");
  return std::max(eta_factor * eta, conf_factor * std::log(2.0 / delta) / static_cast<double>(n));
}

double q0_level(const ScaleInfo& scale, double eps, Eigen::Index n, const Pgt4Config& cfg) {
  if (!(eps > 0.0) || n < 1) throw InvalidParameter("Q0 needs eps > 0 and N >= 1");
  const double stat = scale.opnorm_hat / eps *
                      std::sqrt((scale.r_hat + std::log(2.0 / cfg.delta)) / static_cast<double>(n));
  const double tail = std::pow(eps, -2.0 / cfg.p) * cfg.kappa_p * cfg.kappa_p * scale.opnorm_hat;
  return std::max(stat, tail);
}

Eigen::Index quantile_rank(Eigen::Index n, double eps) {
  return static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * eps / 2.0 - 1e-12));
}

double kth_largest_square(const Eigen::VectorXd& projections, Eigen::Index k) {
  if (k < 1 || k > projections.size()) throw InvalidParameter("quantile rank out of range");
  std::vector<double> sq(static_cast<std::size_t>(projections.size()));
  for (Eigen::Index i = 0; i < projections.size(); ++i) sq[static_cast<std::size_t>(i)] = projections(i) * projections(i);
  auto nth = sq.begin() + (k - 1);
  std::nth_element(sq.begin(), nth, sq.end(), std::greater<>());
  return *nth;
}

double directional_quantile(const Sample& zhalf, const Eigen::VectorXd& v, double eps) {
  require_unit(v);
  if (v.size() != zhalf.dim()) throw InvalidParameter("direction dimension mismatch");
  return kth_largest_square(zhalf.rows() * v, quantile_rank(zhalf.size(), eps));
}

EmpiricalQuantile::EmpiricalQuantile(const Sample& zhalf, double eps)
    : zhalf_(zhalf), k_(std::clamp<Eigen::Index>(quantile_rank(zhalf.size(), eps), 1, zhalf.size())) {}

double EmpiricalQuantile::operator()(const Eigen::VectorXd& v, const Eigen::VectorXd* projection) const {
  if (projection) return kth_largest_square(*projection, k_);
  return kth_largest_square(zhalf_.rows() * v, k_);
}

MemoizedQuantile::MemoizedQuantile(std::function<double(const Eigen::VectorXd&)> fn) : fn_(std::move(fn)) {
  if (!fn_) throw InvalidParameter("quantile function is empty");
}

double MemoizedQuantile::operator()(const Eigen::VectorXd& v, const Eigen::VectorXd*) const {
  std::vector<std::int64_t> key(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(v(i) * 1e12);
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const double q = fn_(v);
  if (!(q >= 0.0) || !std::isfinite(q)) throw InvalidParameter("quantile function must return finite nonnegative values");
  std::lock_guard lock(mutex_);
  return memo_.emplace(std::move(key), q).first->second;
}

std::size_t MemoizedQuantile::cached() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

OneSidedTarget::OneSidedTarget(const Sample& xhalf, double Q, const QuantileOracle& q) : xhalf_(xhalf), Q_(Q), q_(q) {
  if (!(Q > 0.0) || !std::isfinite(Q)) throw InvalidParameter("Q must be positive");
  if (q.block() && q.block()->cols() != xhalf.dim()) throw InvalidParameter("quantile block dimension mismatch");
}

std::vector<const Eigen::MatrixXd*> OneSidedTarget::blocks() const {
  if (q_.block()) return {&xhalf_.rows(), q_.block()};
  return {&xhalf_.rows()};
}

double OneSidedTarget::value(const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> projections) const {
  const double qv = projections.size() > 1 ? q_(v, &projections[1]) : q_(v);
  return truncated_mean(projections[0], trimming_level(qv, Q_));
}

GammaFit fit_gamma_Q(const Sample& xhalf, double Q, const QuantileOracle& q, double eps, const Pgt4Config& cfg) {
  if (!(eps >= 0.0)) throw InvalidParameter("eps must be nonnegative");
  const OneSidedTarget target(xhalf, Q, q);
  DirectionSearchOptions search = cfg.search;
  search.seed = derive_seed(cfg.seed, kFitStream);
  GammaFit out;
  out.Q = Q;
  out.fit = fit_minmax(target, sample_covariance(xhalf), cfg.fit, search);
  out.band = 4.0 * eps * Q;
  out.feasible = out.fit.residual <= out.band;
  return out;
}

std::vector<double> q_grid_auto(const Sample& zhalf, const ScaleInfo& scale) {
  const double max_sq = zhalf.rows().rowwise().squaredNorm().maxCoeff();
  const int lo = static_cast<int>(std::floor(std::log2(scale.opnorm_hat))) - 2;
  const int hi = std::max(lo + 3, static_cast<int>(std::ceil(std::log2(max_sq + scale.opnorm_hat))) + 1);
  std::vector<double> grid;
  for (int i = lo; i <= hi; ++i) grid.push_back(std::ldexp(1.0, i));
  return grid;
}

Pgt4Result estimate_cov_pgt4_detailed(const Sample& corrupted, const Pgt4Config& cfg) {
  cfg.validate();
  if (!cfg.scale) throw InvalidParameter("p > 4 estimation needs a scale (trace and operator norm)");
  if (corrupted.size() % 2 != 0 || corrupted.size() < 2) throw InvalidInput("p > 4 estimation needs an even sample size");
  const Eigen::Index n = corrupted.size() / 2;
  const Eigen::Index d = corrupted.dim();

  Pgt4Result out;
  out.half_size = n;
  out.scale = *cfg.scale;
  out.sigma = Eigen::MatrixXd::Zero(d, d);
  out.eps = epsilon_pgt4(cfg.eta, cfg.delta, n, cfg.eps_eta_factor, cfg.eps_conf_factor);
  if (out.eps >= 1.0) {
    std::ostringstream msg;
    msg << "pgt4: eps = " << out.eps << " >= 1 lies outside the guarantee regime; the quantile rank is clamped to N";
    warn(msg.str());
  }
  if (corrupted.is_zero()) {
    out.degenerate = true;
    return out;
  }

  out.radius = truncation_radius(n, out.scale.trace_hat, out.scale.opnorm_hat);
  const Sample z = norm_truncate(corrupted.slice(0, n), out.radius);
  const Sample x = norm_truncate(corrupted.slice(n, n), out.radius);
  if (x.is_zero()) {
    out.degenerate = true;
    return out;
  }

  std::vector<double> grid;
  if (cfg.q_grid) {
    for (int i = cfg.q_grid->first; i <= cfg.q_grid->second; ++i) grid.push_back(std::ldexp(1.0, i));
  } else {
    grid = q_grid_auto(z, out.scale);
  }
  double floor_q = cfg.q_floor_factor * out.scale.opnorm_hat;
  if (cfg.c_q0 > 0.0 && out.eps > 0.0) floor_q = std::max(floor_q, cfg.c_q0 * q0_level(out.scale, out.eps, n, cfg));
  while (!cfg.q_grid && grid.back() < floor_q) grid.push_back(2.0 * grid.back());
  std::erase_if(grid, [&](double Q) { return Q < floor_q; });
  if (grid.empty()) throw InvalidParameter("no Q grid level lies above the admissible floor");

  const EmpiricalQuantile oracle(z, out.eps);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GammaFit level = fit_gamma_Q(x, grid[i], oracle, out.eps, cfg);
    const bool first_feasible = level.feasible && !out.chosen_Q;
    if (first_feasible) {
      out.chosen_Q = level.Q;
      out.sigma = level.fit.A;
      out.feasible = true;
      out.top_of_grid = i + 1 == grid.size();
    }
    out.levels.push_back(std::move(level));
    if (first_feasible && !cfg.scan_all) break;
  }
  return out;
}

Eigen::MatrixXd estimate_cov_pgt4(const Sample& corrupted, const Pgt4Config& cfg) {
  return estimate_cov_pgt4_detailed(corrupted, cfg).sigma;
}

Pgt4Result estimate_cov_pgt4_plugin(const Sample& corrupted, Pgt4Config cfg, double kappa4) {
  cfg.validate();
  const Eigen::Index n = corrupted.size() / 3;
  if (n < 2) throw InvalidInput("plug-in p > 4 estimation needs at least six rows");
  const Sample tail = corrupted.slice(n, 2 * n);
  if (!cfg.scale) {
    if (corrupted.slice(0, 3 * n).is_zero()) {
      Pgt4Result out;
      out.half_size = n;
      out.sigma = Eigen::MatrixXd::Zero(corrupted.dim(), corrupted.dim());
      out.degenerate = true;
      return out;
    }
    DirectionSearchOptions search = cfg.search;
    search.seed = derive_seed(cfg.seed, kScaleStream);
    const Sample head = corrupted.slice(0, n);
    cfg.scale = estimate_scale(head, head, cfg.eta, cfg.delta, kappa4, 1.0, search);
  }
  return estimate_cov_pgt4_detailed(tail, cfg);
}

}  // namespace robustcov
