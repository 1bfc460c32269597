#include "robustcov/opnorm.hpp"

#include <cmath>
#include <sstream>

#include "robustcov/log.hpp"

namespace robustcov {
namespace {

double kappa_pow4(double kappa) { return kappa * kappa * kappa * kappa; }

constexpr int kMaxBracketSteps = 2000;
constexpr int kMaxBisections = 400;

}  // namespace

void OpNormConfig::validate() const {
  if (!(kappa4 >= 1.0)) throw InvalidParameter("kappa(4) must be at least 1");
  if (!(c_catoni >= 1.0)) throw InvalidParameter("c must be at least 1");
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
  if (!(bisect_tol > 0.0)) throw InvalidParameter("bisection tolerance must be positive");
  if (eta > 1.0 / (300.0 * c_catoni * kappa_pow4(kappa4))) {
    warn("opnorm: eta exceeds 1/(300 c kappa^4); the bracket guarantee does not apply");
  }
  if (delta >= 0.25) warn("opnorm: delta >= 1/4 lies outside the guarantee regime");
}

double OpNormConfig::target() const { return 1.0 / (20.0 * c_catoni * kappa_pow4(kappa4)) + eta; }

TruncatedMassProfile::TruncatedMassProfile(const Sample& s, const DirectionSet& ds) : ds_(ds) {
  if (ds.dim() != s.dim()) throw InvalidParameter("dimension mismatch in truncated mass profile");
  squared_ = (s.rows() * ds.directions()).array().square().matrix();
}

double TruncatedMassProfile::operator()(double alpha) const {
  if (!(alpha > 0.0)) throw InvalidParameter("alpha must be positive");
  const double a2 = alpha * alpha;
  return (a2 * squared_.array()).min(1.0).colwise().mean().maxCoeff();
}

double TruncatedMassProfile::saturation() const {
  return (squared_.array() > 0.0).cast<double>().colwise().mean().maxCoeff();
}

DirectionSet opnorm_directions(const Sample& s, const OpNormConfig& cfg) {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(s.dim(), s.dim());
  return seed_directions(s, zero, cfg.search.resolved_budget(s.dim()), cfg.search.seed, 0);
}

double phi(const Sample& s, double alpha, const OpNormConfig& cfg) {
  return sup_truncated_mass(s, alpha, opnorm_directions(s, cfg));
}

AlphaSolution solve_alpha_hat(const TruncatedMassProfile& profile, const OpNormConfig& cfg) {
  const double target = cfg.target();
  if (!(target < 1.0)) throw InvalidParameter("calibration target must be below 1");
  if (profile.saturation() < target) {
    throw DegenerateSample("truncated mass cannot reach its calibration target (too many zero projections)");
  }

  AlphaSolution sol;
  auto eval = [&](double a) {
    ++sol.evaluations;
    return profile(a);
  };

  double lo = 1.0, hi = 1.0;
  if (eval(1.0) >= target) {
    int steps = 0;
    do {
      hi = lo;
      lo *= 0.5;
      if (++steps > kMaxBracketSteps) throw DegenerateSample("failed to bracket alpha from above");
    } while (eval(lo) >= target);
  } else {
    int steps = 0;
    do {
      lo = hi;
      hi *= 2.0;
      if (++steps > kMaxBracketSteps) throw DegenerateSample("failed to bracket alpha from below");
    } while (eval(hi) < target);
  }

  double alpha = hi;
  for (int it = 0; it < kMaxBisections; ++it) {
    if (hi / lo - 1.0 <= cfg.bisect_tol) break;
    const double mid = std::sqrt(lo * hi);
    const double value = eval(mid);
    if (std::abs(value - target) <= cfg.bisect_tol) {
      alpha = mid;
      break;
    }
    if (value < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    alpha = hi;
  }
  sol.alpha = alpha;
  sol.lower = lo;
  sol.upper = hi;
  return sol;
}

AlphaSolution solve_alpha_hat(const Sample& s, const OpNormConfig& cfg) {
  cfg.validate();
  return solve_alpha_hat(TruncatedMassProfile(s, opnorm_directions(s, cfg)), cfg);
}

double estimate_opnorm(const Sample& s, const OpNormConfig& cfg) {
  cfg.validate();
  const AlphaSolution sol = solve_alpha_hat(s, cfg);
  const double k4 = kappa_pow4(cfg.kappa4);
  const double estimate = 1.0 / (24.0 * cfg.c_catoni * k4 * sol.alpha * sol.alpha);

  const double n = static_cast<double>(s.size());
  const double r_hat = std::max(1.0, effective_rank(sample_covariance(s)));
  const double needed = 100.0 * cfg.c_catoni * k4 * r_hat + 400.0 * cfg.c_catoni * k4 * std::log(1.0 / cfg.delta);
  if (n < needed) {
    std::ostringstream msg;
    msg << "opnorm: N = " << s.size() << " is below the guarantee threshold " << needed;
    warn(msg.str());
  }
  return estimate;
}

}  // namespace robustcov
