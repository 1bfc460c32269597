#pragma once

// Covariance estimation under L4-L2 norm equivalence.
//
// The sample of size 3N is split into ordered thirds: trace estimate,
// operator norm estimate, and the min-max fit
//
//   Sigma_hat = argmin over PSD A of sup_v | (1/(lambda N)) sum_i psi(lambda <x_i, v>^2) - v^T A v |.
//
// When the attained residual exceeds the radius of the feasibility band the
// zero matrix is returned.

#include <cstdint>
#include <optional>

#include "robustcov/core.hpp"
#include "robustcov/directions.hpp"
#include "robustcov/minmax_fit.hpp"

namespace robustcov {

/// Plug-in scale: trace_hat >= opnorm_hat > 0 and r_hat = trace_hat / opnorm_hat.
struct ScaleInfo {
  double trace_hat = 1.0;
  double opnorm_hat = 1.0;
  double r_hat = 1.0;

  /// opnorm is lowered to trace when it exceeds it, so that r_hat >= 1.
  static ScaleInfo from_estimates(double trace, double opnorm);
  static ScaleInfo from_covariance(const Eigen::MatrixXd& sigma);
};

/// Trace (trimmed mean on `trace_rows`, an odd trailing row dropped) and
/// operator norm (`opnorm_rows`) estimates.
ScaleInfo estimate_scale(const Sample& trace_rows, const Sample& opnorm_rows, double eta, double delta,
                         double kappa4, double c_catoni, const DirectionSearchOptions& search);

struct P4Config {
  double eta = 0.0;
  double delta = 0.1;
  /// kappa(4); Gaussian data has 3^{1/4}.
  double kappa4 = 1.5;
  /// Radius constant of the feasibility band.
  double c_gamma = 2.0;
  /// Calibration constant of the operator norm estimator.
  double c_catoni = 1.0;
  FitOptions fit;
  /// Search options; the seed field is replaced by streams derived from `seed`.
  DirectionSearchOptions search;
  std::uint64_t seed = 0;

  /// Known scale; skips the trace and operator norm stages.
  std::optional<ScaleInfo> scale;
  /// Fixed truncation level; without `scale` the band test is skipped.
  std::optional<double> lambda_override;
  /// Fixed band radius.
  std::optional<double> radius_override;
  /// Warn when the fit split has fewer than warn_factor (r_hat + log(1/delta)) rows.
  double warn_factor = 10.0;

  void validate() const;
};

/// (1 / (kappa^2 opnorm_hat)) sqrt((r_hat + log(1/delta) + eta N) / N).
double lambda_p4(const ScaleInfo& scale, const P4Config& cfg, Eigen::Index n);

/// c_gamma lambda kappa^4 opnorm_hat^2 / 2.
double gamma_radius(double lambda, const ScaleInfo& scale, const P4Config& cfg);

/// Min-max fit of the truncated process of `s`, warm-started at its sample covariance.
FitResult fit_minmax_psd(const Sample& s, double lambda, const P4Config& cfg);

struct P4Result {
  Eigen::MatrixXd sigma;
  FitResult fit;
  double lambda = 0.0;
  std::optional<ScaleInfo> scale;
  /// Band radius; empty when neither a scale nor a radius was available.
  std::optional<double> radius;
  /// The fitted matrix lies in the band (true when the band was not checked).
  bool feasible = false;
  /// Zero input; the zero matrix is returned.
  bool degenerate = false;
  Eigen::Index split_size = 0;
};

P4Result estimate_cov_p4_detailed(const Sample& corrupted, const P4Config& cfg);
Eigen::MatrixXd estimate_cov_p4(const Sample& corrupted, const P4Config& cfg);

}  // namespace robustcov
