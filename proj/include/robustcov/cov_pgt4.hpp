#pragma once

// Covariance estimation under Lp-L2 norm equivalence with p > 4.
//
// A sample of size 2N is split in halves Z | X, both norm-truncated at
// R = (N tr ||Sigma||)^{1/4}. Along each direction v the quantile
//
//   q_v = ceil(N eps / 2)-th largest <z_i, v>^2
//
// sets a trimming level lambda_v(Q) = 1 / (q_v + Q) for the X half, and
// Gamma(Q) is the band of PSD matrices within 4 eps Q of the trimmed process.
// Q runs over a dyadic grid and the smallest feasible level is returned.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "robustcov/core.hpp"
#include "robustcov/cov_p4.hpp"
#include "robustcov/directions.hpp"
#include "robustcov/minmax_fit.hpp"

namespace robustcov {

struct Pgt4Config {
  double eta = 0.0;
  double delta = 0.1;
  double p = 8.0;
  double kappa_p = 1.5;
  /// Required by estimate_cov_pgt4; the plug-in variant fills it.
  std::optional<ScaleInfo> scale;
  /// Explicit exponent range [i_min, i_max] of the grid 2^i.
  std::optional<std::pair<int, int>> q_grid;
  /// eps = max(eps_eta_factor eta, eps_conf_factor log(2/delta) / N).
  double eps_eta_factor = 20.0;
  double eps_conf_factor = 560.0;
  /// Grid levels below max(q_floor_factor opnorm_hat, c_q0 Q0) are not fitted.
  double q_floor_factor = 2.0;
  double c_q0 = 1.0;
  /// Fit every admissible level instead of stopping at the first feasible one.
  bool scan_all = false;
  FitOptions fit;
  /// Search options; the seed field is replaced by a stream derived from `seed`.
  DirectionSearchOptions search;
  std::uint64_t seed = 0;

  void validate() const;
};

/// max(eta_factor eta, conf_factor log(2/delta) / n).
double epsilon_pgt4(double eta, double delta, Eigen::Index n, double eta_factor = 20.0, double conf_factor = 560.0);

/// Q0 = max((opnorm_hat / eps) sqrt((r_hat + log(2/delta)) / n), eps^{-2/p} kappa_p^2 opnorm_hat).
double q0_level(const ScaleInfo& scale, double eps, Eigen::Index n, const Pgt4Config& cfg);

/// ceil(n eps / 2), computed with a 1e-12 guard against rounding up exact integers.
Eigen::Index quantile_rank(Eigen::Index n, double eps);

/// k-th largest squared entry of `projections`; 1 <= k <= size.
double kth_largest_square(const Eigen::VectorXd& projections, Eigen::Index k);

/// ceil(N eps / 2)-th largest <z_i, v>^2.
double directional_quantile(const Sample& zhalf, const Eigen::VectorXd& v, double eps);

/// Direction -> q_v.
class QuantileOracle {
 public:
  virtual ~QuantileOracle() = default;
  /// When non-null, callers pass the projection block() * v to operator().
  virtual const Eigen::MatrixXd* block() const noexcept { return nullptr; }
  virtual double operator()(const Eigen::VectorXd& v, const Eigen::VectorXd* projection = nullptr) const = 0;
};

/// q_v from the held-out half; the rank is clamped to N.
class EmpiricalQuantile final : public QuantileOracle {
 public:
  EmpiricalQuantile(const Sample& zhalf, double eps);
  const Eigen::MatrixXd* block() const noexcept override { return &zhalf_.rows(); }
  double operator()(const Eigen::VectorXd& v, const Eigen::VectorXd* projection = nullptr) const override;
  Eigen::Index rank() const noexcept { return k_; }

 private:
  const Sample& zhalf_;
  Eigen::Index k_;
};

/// Wraps an arbitrary q function; values are memoized by the direction
/// rounded to 1e-12. Safe for concurrent use.
class MemoizedQuantile final : public QuantileOracle {
 public:
  explicit MemoizedQuantile(std::function<double(const Eigen::VectorXd&)> fn);
  double operator()(const Eigen::VectorXd& v, const Eigen::VectorXd* projection = nullptr) const override;
  std::size_t cached() const;

 private:
  std::function<double(const Eigen::VectorXd&)> fn_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<std::int64_t>, double> memo_;
};

/// Trimmed process (1/(lambda_v N)) sum_i psi(lambda_v <x_i, v>^2), lambda_v = 1 / (q_v + Q).
class OneSidedTarget final : public DirectionalTarget {
 public:
  OneSidedTarget(const Sample& xhalf, double Q, const QuantileOracle& q);
  const Sample& seeding_sample() const override { return xhalf_; }
  std::vector<const Eigen::MatrixXd*> blocks() const override;
  double value(const Eigen::VectorXd& v, std::span<const Eigen::VectorXd> projections) const override;

 private:
  const Sample& xhalf_;
  double Q_;
  const QuantileOracle& q_;
};

struct GammaFit {
  double Q = 0.0;
  FitResult fit;
  /// 4 eps Q.
  double band = 0.0;
  bool feasible = false;
};

GammaFit fit_gamma_Q(const Sample& xhalf, double Q, const QuantileOracle& q, double eps, const Pgt4Config& cfg);

/// 2^i for i from floor(log2 opnorm_hat) - 2 to ceil(log2(max ||z||^2 + opnorm_hat)) + 1,
/// extended upward to at least four levels.
std::vector<double> q_grid_auto(const Sample& zhalf, const ScaleInfo& scale);

struct Pgt4Result {
  Eigen::MatrixXd sigma;
  double eps = 0.0;
  /// Norm truncation radius.
  double radius = 0.0;
  std::optional<double> chosen_Q;
  /// Fitted levels in ascending Q.
  std::vector<GammaFit> levels;
  bool feasible = false;
  bool degenerate = false;
  /// The chosen level is the top of the grid.
  bool top_of_grid = false;
  ScaleInfo scale;
  Eigen::Index half_size = 0;
};

Pgt4Result estimate_cov_pgt4_detailed(const Sample& corrupted, const Pgt4Config& cfg);
Eigen::MatrixXd estimate_cov_pgt4(const Sample& corrupted, const Pgt4Config& cfg);

/// End-to-end variant on 3N rows: the first third supplies the trace and
/// operator norm estimates, the remaining 2N rows go to estimate_cov_pgt4.
Pgt4Result estimate_cov_pgt4_plugin(const Sample& corrupted, Pgt4Config cfg, double kappa4 = 1.5);

}  // namespace robustcov
