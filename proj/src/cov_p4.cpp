#include "robustcov/cov_p4.hpp"

#include <cmath>
#include <sstream>

#include "robustcov/log.hpp"
#include "robustcov/opnorm.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/robust_scalar.hpp"

namespace robustcov {
namespace {

enum Stream : std::uint64_t { kOpnormStream = 1, kFitStream = 2 };

DirectionSearchOptions with_seed(DirectionSearchOptions search, std::uint64_t seed) {
  search.seed = seed;
  return search;
}

}  // namespace

ScaleInfo ScaleInfo::from_estimates(double trace, double opnorm) {
  if (!std::isfinite(trace) || !std::isfinite(opnorm)) throw InvalidParameter("scale estimates must be finite");
  if (!(trace > 0.0) || !(opnorm > 0.0)) throw UndefinedScale("scale estimates must be positive");
  ScaleInfo s;
  s.trace_hat = trace;
  s.opnorm_hat = std::min(opnorm, trace);
  s.r_hat = s.trace_hat / s.opnorm_hat;
  return s;
}

ScaleInfo ScaleInfo::from_covariance(const Eigen::MatrixXd& sigma) {
  return from_estimates(sigma.trace(), op_norm(sigma));
}

ScaleInfo estimate_scale(const Sample& trace_rows, const Sample& opnorm_rows, double eta, double delta,
                         double kappa4, double c_catoni, const DirectionSearchOptions& search) {
  const Eigen::Index even = trace_rows.size() - trace_rows.size() % 2;
  if (even < 2) throw InvalidInput("trace estimation needs at least two rows");
  const double trace = estimate_trace(trace_rows.slice(0, even), eta, delta);

  OpNormConfig oc;
  oc.eta = eta;
  oc.delta = delta;
  oc.kappa4 = kappa4;
  oc.c_catoni = c_catoni;
  oc.search = search;
  const double opnorm = estimate_opnorm(opnorm_rows, oc);
  return ScaleInfo::from_estimates(trace, opnorm);
}

void P4Config::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
  if (!(kappa4 >= 1.0)) throw InvalidParameter("kappa(4) must be at least 1");
  if (!(c_gamma > 0.0)) throw InvalidParameter("c_gamma must be positive");
  if (lambda_override && !(*lambda_override > 0.0 && std::isfinite(*lambda_override))) {
    throw InvalidParameter("lambda override must be positive");
  }
  if (radius_override && !(*radius_override >= 0.0)) throw InvalidParameter("radius override must be nonnegative");
}

double lambda_p4(const ScaleInfo& scale, const P4Config& cfg, Eigen::Index n) {
  if (n < 1) throw InvalidParameter("lambda needs N >= 1");
  const double nn = static_cast<double>(n);
  const double k2 = cfg.kappa4 * cfg.kappa4;
  return std::sqrt((scale.r_hat + std::log(1.0 / cfg.delta) + cfg.eta * nn) / nn) / (k2 * scale.opnorm_hat);
}

double gamma_radius(double lambda, const ScaleInfo& scale, const P4Config& cfg) {
  if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
  const double k4 = std::pow(cfg.kappa4, 4);
  return cfg.c_gamma * lambda * k4 * scale.opnorm_hat * scale.opnorm_hat / 2.0;
}

FitResult fit_minmax_psd(const Sample& s, double lambda, const P4Config& cfg) {
  const TruncatedTarget target(s, lambda);
  return fit_minmax(target, sample_covariance(s), cfg.fit, with_seed(cfg.search, derive_seed(cfg.seed, kFitStream)));
}

P4Result estimate_cov_p4_detailed(const Sample& corrupted, const P4Config& cfg) {
  cfg.validate();
  const Eigen::Index n = corrupted.size() / 3;
  if (n < 1) throw InvalidInput("p = 4 estimation needs at least three rows");
  const Eigen::Index d = corrupted.dim();

  P4Result out;
  out.split_size = n;
  if (corrupted.slice(0, 3 * n).is_zero()) {
    out.sigma = Eigen::MatrixXd::Zero(d, d);
    out.degenerate = true;
    return out;
  }

  const Sample fit_rows = corrupted.slice(2 * n, n);
  if (cfg.scale) {
    out.scale = cfg.scale;
  } else if (!cfg.lambda_override) {
    out.scale = estimate_scale(corrupted.slice(0, n), corrupted.slice(n, n), cfg.eta, cfg.delta, cfg.kappa4,
                               cfg.c_catoni, with_seed(cfg.search, derive_seed(cfg.seed, kOpnormStream)));
  }

  if (out.scale) {
    const double needed = cfg.warn_factor * (out.scale->r_hat + std::log(1.0 / cfg.delta));
    if (static_cast<double>(n) < needed) {
      std::ostringstream msg;
      msg << "p4: split size " << n << " is below the heuristic threshold " << needed;
      warn(msg.str());
    }
  }

  out.lambda = cfg.lambda_override ? *cfg.lambda_override : lambda_p4(*out.scale, cfg, n);
  if (cfg.radius_override) {
    out.radius = cfg.radius_override;
  } else if (out.scale) {
    out.radius = gamma_radius(out.lambda, *out.scale, cfg);
  }

  out.fit = fit_minmax_psd(fit_rows, out.lambda, cfg);
  out.feasible = !out.radius || out.fit.residual <= *out.radius;
  out.sigma = out.feasible ? out.fit.A : Eigen::MatrixXd::Zero(d, d);
  return out;
}

Eigen::MatrixXd estimate_cov_p4(const Sample& corrupted, const P4Config& cfg) {
  return estimate_cov_p4_detailed(corrupted, cfg).sigma;
}

}  // namespace robustcov
