#include "robustcov/truncation.hpp"

#include <cmath>

namespace robustcov {

TruncationLevel::TruncationLevel(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidParameter("truncation level must be positive and finite");
  }
}

double clamp_band(double x, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidParameter("clamp_band requires lo <= hi");
  return x < lo ? lo : (x > hi ? hi : x);
}

double psi_band(double x, double lambda1, double lambda2) {
  if (!(lambda2 > 0.0) || !(lambda1 >= lambda2)) {
    throw InvalidParameter("psi_band requires lambda1 >= lambda2 > 0");
  }
  const double upper = 1.0 / lambda2;
  const double lower = -1.0 / lambda1;
  return x > upper ? upper : (x < lower ? lower : x);
}

double truncated_mean(const Eigen::Ref<const Eigen::VectorXd>& projections, double lambda) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < projections.size(); ++i) {
    const double p = projections(i);
    acc += psi(lambda * p * p);
  }
  return acc / (lambda * static_cast<double>(projections.size()));
}

void require_unit(const Eigen::VectorXd& v) {
  if (!(std::abs(v.norm() - 1.0) <= 1e-10)) {
    throw InvalidDirection("direction must be a unit vector");
  }
}

double truncated_process(const Sample& s, const Eigen::VectorXd& v, TruncationLevel level) {
  if (v.size() != s.dim()) throw InvalidParameter("direction dimension mismatch");
  require_unit(v);
  return truncated_mean(s.rows() * v, level.value());
}

double trimming_level(double q_v, double Q) {
  if (!(Q > 0.0) || !(q_v >= 0.0)) {
    throw InvalidParameter("trimming level needs Q > 0 and q_v >= 0");
  }
  return 1.0 / (q_v + Q);
}

double one_sided_process(const Sample& s, const Eigen::VectorXd& v, double q_v, double Q) {
  const double lambda = trimming_level(q_v, Q);
  return truncated_process(s, v, TruncationLevel(lambda));
}

Sample norm_truncate(const Sample& s, double R) {
  if (!(R > 0.0)) throw InvalidParameter("truncation radius must be positive");
  Eigen::MatrixXd rows = s.rows();
  const Eigen::VectorXd norms = rows.rowwise().norm();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (norms(i) > R) rows.row(i).setZero();
  }
  return Sample(std::move(rows));
}

double truncation_radius(Eigen::Index n, double trace, double opnorm) {
  if (n < 1 || !(trace >= 0.0) || !(opnorm >= 0.0)) {
    throw InvalidParameter("truncation radius needs n >= 1 and nonnegative scales");
  }
  return std::sqrt(std::sqrt(static_cast<double>(n) * trace * opnorm));
}

}  // namespace robustcov
