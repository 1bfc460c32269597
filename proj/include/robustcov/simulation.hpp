#pragma once

// Samplers, contamination adversaries and the Monte Carlo experiment runner.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robustcov/core.hpp"
#include "robustcov/directions.hpp"
#include "robustcov/minmax_fit.hpp"

namespace robustcov {

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma);

Sample sample_gaussian(const Eigen::MatrixXd& sigma, Eigen::Index n, std::uint64_t seed);

/// Multivariate t with nu > 4 degrees of freedom and covariance `sigma`.
Sample sample_elliptical_t(const Eigen::MatrixXd& sigma, double nu, Eigen::Index n, std::uint64_t seed);

/// One-dimensional draws of (sigma_sq / sqrt(2 - eta)) Y, where Y is +-1/sqrt(eta)
/// with probability eta/2 each and +-1 with probability (1 - eta)/2 each.
Sample sample_fourpoint(double eta, double sigma_sq, Eigen::Index n, std::uint64_t seed);

/// sqrt(W) sigma^{1/2} g with W = 1 + 1/sqrt(eta) with probability eta and 1
/// otherwise. Covariance (1 + sqrt(eta)) sigma.
Sample sample_fourpoint_mixture(const Eigen::MatrixXd& sigma, double eta, Eigen::Index n, std::uint64_t seed);

/// (E|g|^p)^{1/p} for a standard Gaussian g.
double gaussian_kappa(double p);

enum class DistributionKind { gaussian, elliptical_t, fourpoint, fourpoint_mixture, custom_psd };

struct DistributionSpec {
  DistributionKind kind = DistributionKind::gaussian;
  /// Covariance (gaussian, custom_psd, elliptical_t) or shape (fourpoint_mixture).
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(1, 1);
  double nu = 9.0;
  double eta_param = 0.01;
  double sigma_sq = 1.0;
  /// The four-point parameter follows the cell's contamination level.
  bool eta_from_cell = false;

  void validate() const;
  Eigen::Index dim() const;
  std::string tag() const;
  double resolved_eta(double cell_eta) const;
  Eigen::MatrixXd covariance(double cell_eta = 0.0) const;
  /// kappa(p) of the one-dimensional marginals.
  double kappa(double p, double cell_eta = 0.0) const;
  Sample draw(Eigen::Index n, std::uint64_t seed, double cell_eta = 0.0) const;
};

/// Parses "gaussian", "custom_psd", "t:<nu>", "fourpoint:<eta>[:<sigma_sq>]",
/// "mixture:<eta>" or "mixture:cell"; `sigma` supplies the dimension.
DistributionSpec parse_distribution(const std::string& text, const Eigen::MatrixXd& sigma);

enum class AdversaryKind { none, fixed_outlier, variance_inflation, quantile_replace };

struct ContaminationSpec {
  AdversaryKind kind = AdversaryKind::none;
  double eta = 0.0;
  double magnitude = 100.0;
  /// Empty selects e_1.
  Eigen::VectorXd direction;
  /// In experiments the magnitude is multiplied by sqrt(tr Sigma).
  bool relative_to_trace = false;
  double factor = 10.0;

  void validate() const;
  std::string tag() const;
};

/// Parses "none", "fixed_outlier:<m>[:trace]", "variance_inflation:<f>" or "quantile_replace".
ContaminationSpec parse_adversary(const std::string& text);

/// floor(eta n), guarded against rounding just below an integer.
Eigen::Index contamination_budget(double eta, Eigen::Index n);

/// Replaces exactly contamination_budget(eta, N) rows; the others are copied
/// bit for bit.
///   fixed_outlier: seeded rows become magnitude * direction.
///   variance_inflation: seeded rows (nonzero rows first) are scaled by factor;
///     a selected zero row becomes factor * e_1.
///   quantile_replace: the largest-norm rows are shrunk to norm q, the largest
///     norm among the untouched rows; a selected row already at norm q is
///     negated. A zero row selected with q = 0 cannot change.
Sample contaminate(const Sample& s, const ContaminationSpec& spec, std::uint64_t seed);

enum class Estimator { sample_cov, p4, pgt4, trace, opnorm };

Estimator parse_estimator(const std::string& text);
std::string estimator_name(Estimator e);

enum class PRule { fixed, log_inv_eta };

struct ExperimentConfig {
  std::vector<DistributionSpec> distributions;
  std::vector<ContaminationSpec> adversaries;
  std::vector<Eigen::Index> n_values;
  std::vector<double> eta_values;
  int trials = 10;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::vector<Estimator> estimators{Estimator::sample_cov};

  /// Use each distribution's kappa(4); otherwise `kappa4`.
  bool oracle_kappa = true;
  double kappa4 = 1.5;
  double c_gamma = 2.0;
  /// p4 receives the true trace and operator norm instead of estimating them.
  bool p4_oracle_scale = false;
  /// pgt4 receives the true trace and operator norm; otherwise they are
  /// estimated on an extra held-out third.
  bool pgt4_oracle_scale = true;
  PRule p_rule = PRule::fixed;
  double p = 8.0;
  /// Under log_inv_eta: p = p_offset + log(1/eta).
  double p_offset = 4.0;
  double eps_eta_factor = 20.0;
  double eps_conf_factor = 560.0;
  FitOptions fit;
  DirectionSearchOptions search;
  bool timing = false;

  void validate() const;
  std::size_t cell_count() const;
};

/// One row per (distribution, adversary, N, eta, trial). Every cell draws 3N
/// rows: sample_cov and p4 read all of them, trace the first N, opnorm the
/// second N and pgt4 the last 2N (all 3N with a plug-in scale).
struct ExperimentRecord {
  std::size_t cell = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string distribution;
  std::string adversary;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  double eta = 0.0;
  double delta = 0.0;
  double kappa4 = 0.0;
  std::optional<double> err_sample_cov, err_p4, err_pgt4, err_trace, err_opnorm;
  std::string status = "ok";
  double wall_seconds = 0.0;
};

/// Cells run concurrently; records come back in cell order. A failing cell
/// yields a record whose status carries the error message.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg);

/// Header: cell,trial,seed,distribution,adversary,n,d,eta,delta,kappa4,
/// err_sample_cov,err_p4,err_pgt4,err_trace,err_opnorm,status[,wall_seconds].
/// Estimators that were not run leave their column empty.
void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, bool timing = false);

}  // namespace robustcov
