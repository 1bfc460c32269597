#include "robustcov/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "robustcov/cov_p4.hpp"
#include "robustcov/cov_pgt4.hpp"
#include "robustcov/log.hpp"
#include "robustcov/opnorm.hpp"
#include "robustcov/parallel.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/robust_scalar.hpp"

namespace robustcov {
namespace {

enum CellStream : std::uint64_t { kDraw = 0, kAdversary = 1, kEstimators = 2 };

void require_psd_input(const Eigen::MatrixXd& sigma) {
  detail::require_symmetric(sigma);
  if (!is_psd(sigma)) throw InvalidParameter("covariance must be positive semidefinite");
}

void require_fourpoint_eta(double eta) {
  if (!(eta > 0.0) || eta > 0.25) throw InvalidParameter("four-point parameter must lie in (0, 1/4]");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidInput("cannot parse " + what + " from '" + text + "'");
  }
  if (used != text.size()) throw InvalidInput("cannot parse " + what + " from '" + text + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

double matrix_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  return op_norm(Eigen::MatrixXd(estimate - truth));
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma) {
  detail::require_symmetric(sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(Eigen::MatrixXd(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose()));
}

Sample sample_gaussian(const Eigen::MatrixXd& sigma, Eigen::Index n, std::uint64_t seed) {
  require_psd_input(sigma);
  if (n < 1) throw InvalidParameter("sample size must be positive");
  Rng rng(seed);
  return Sample(standard_normal(n, sigma.rows(), rng) * psd_sqrt(sigma));
}

Sample sample_elliptical_t(const Eigen::MatrixXd& sigma, double nu, Eigen::Index n, std::uint64_t seed) {
  if (!(nu > 4.0)) throw InvalidParameter("elliptical t needs nu > 4 (finite fourth moments)");
  require_psd_input(sigma);
  if (n < 1) throw InvalidParameter("sample size must be positive");
  Rng rng(seed);
  Eigen::MatrixXd rows = standard_normal(n, sigma.rows(), rng) * psd_sqrt(sigma);
  std::chi_squared_distribution<double> chi(nu);
  for (Eigen::Index i = 0; i < n; ++i) rows.row(i) *= std::sqrt((nu - 2.0) / chi(rng));
  return Sample(std::move(rows));
}

Sample sample_fourpoint(double eta, double sigma_sq, Eigen::Index n, std::uint64_t seed) {
  require_fourpoint_eta(eta);
  if (!(sigma_sq > 0.0)) throw InvalidParameter("sigma^2 must be positive");
  if (n < 1) throw InvalidParameter("sample size must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double big = 1.0 / std::sqrt(eta);
  const double scale = sigma_sq / std::sqrt(2.0 - eta);
  Eigen::MatrixXd rows(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = u(rng);
    double y = 1.0;
    if (x < eta / 2) {
      y = -big;
    } else if (x < eta) {
      y = big;
    } else if (x < eta + (1 - eta) / 2) {
      y = -1.0;
    }
    rows(i, 0) = scale * y;
  }
  return Sample(std::move(rows));
}

Sample sample_fourpoint_mixture(const Eigen::MatrixXd& sigma, double eta, Eigen::Index n, std::uint64_t seed) {
  require_fourpoint_eta(eta);
  require_psd_input(sigma);
  if (n < 1) throw InvalidParameter("sample size must be positive");
  Rng rng(seed);
  Eigen::MatrixXd rows = standard_normal(n, sigma.rows(), rng) * psd_sqrt(sigma);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double heavy = std::sqrt(1.0 + 1.0 / std::sqrt(eta));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u(rng) < eta) rows.row(i) *= heavy;
  }
  return Sample(std::move(rows));
}

double gaussian_kappa(double p) {
  if (!(p >= 1.0)) throw InvalidParameter("moment order must be at least 1");
  const double log_moment = 0.5 * p * std::log(2.0) + std::lgamma((p + 1) / 2) - 0.5 * std::log(std::numbers::pi);
  return std::exp(log_moment / p);
}

void DistributionSpec::validate() const {
  switch (kind) {
    case DistributionKind::elliptical_t:
      if (!(nu > 4.0)) throw InvalidParameter("elliptical t needs nu > 4 (finite fourth moments)");
      [[fallthrough]];
    case DistributionKind::gaussian:
    case DistributionKind::custom_psd:
      require_psd_input(sigma);
      break;
    case DistributionKind::fourpoint:
      if (!(sigma_sq > 0.0)) throw InvalidParameter("sigma^2 must be positive");
      if (!eta_from_cell) require_fourpoint_eta(eta_param);
      break;
    case DistributionKind::fourpoint_mixture:
      require_psd_input(sigma);
      if (!eta_from_cell) require_fourpoint_eta(eta_param);
      break;
  }
}

Eigen::Index DistributionSpec::dim() const { return kind == DistributionKind::fourpoint ? 1 : sigma.rows(); }

std::string DistributionSpec::tag() const {
  std::ostringstream out;
  const std::string eta_text = eta_from_cell ? std::string("cell") : format_double(eta_param);
  switch (kind) {
    case DistributionKind::gaussian: out << "gaussian"; break;
    case DistributionKind::custom_psd: out << "custom_psd"; break;
    case DistributionKind::elliptical_t: out << "t:" << format_double(nu); break;
    case DistributionKind::fourpoint: out << "fourpoint:" << eta_text << ':' << format_double(sigma_sq); break;
    case DistributionKind::fourpoint_mixture: out << "mixture:" << eta_text; break;
  }
  return out.str();
}

double DistributionSpec::resolved_eta(double cell_eta) const {
  const double e = eta_from_cell ? cell_eta : eta_param;
  require_fourpoint_eta(e);
  return e;
}

Eigen::MatrixXd DistributionSpec::covariance(double cell_eta) const {
  switch (kind) {
    case DistributionKind::fourpoint:
      return Eigen::MatrixXd::Constant(1, 1, sigma_sq * sigma_sq);
    case DistributionKind::fourpoint_mixture:
      return (1.0 + std::sqrt(resolved_eta(cell_eta))) * sigma;
    default:
      return sigma;
  }
}

double DistributionSpec::kappa(double p, double cell_eta) const {
  if (!(p >= 2.0)) throw InvalidParameter("moment order must be at least 2");
  switch (kind) {
    case DistributionKind::elliptical_t: {
      if (!(p < nu)) throw InvalidParameter("kappa(p) of a t law needs p < nu");
      const double log_moment = 0.5 * p * std::log(nu) + std::lgamma((p + 1) / 2) + std::lgamma((nu - p) / 2) -
                                0.5 * std::log(std::numbers::pi) - std::lgamma(nu / 2);
      return std::exp(log_moment / p) / std::sqrt(nu / (nu - 2));
    }
    case DistributionKind::fourpoint: {
      const double e = resolved_eta(cell_eta);
      return std::pow(e * std::pow(e, -p / 2) + (1 - e), 1 / p) / std::sqrt(2 - e);
    }
    case DistributionKind::fourpoint_mixture: {
      const double e = resolved_eta(cell_eta);
      const double heavy = 1.0 + 1.0 / std::sqrt(e);
      const double mean_w = 1.0 + std::sqrt(e);
      const double moment_w = (1 - e) + e * std::pow(heavy, p / 2);
      return std::pow(moment_w, 1 / p) * gaussian_kappa(p) / std::sqrt(mean_w);
    }
    default:
      return gaussian_kappa(p);
  }
}

Sample DistributionSpec::draw(Eigen::Index n, std::uint64_t seed, double cell_eta) const {
  switch (kind) {
    case DistributionKind::elliptical_t: return sample_elliptical_t(sigma, nu, n, seed);
    case DistributionKind::fourpoint: return sample_fourpoint(resolved_eta(cell_eta), sigma_sq, n, seed);
    case DistributionKind::fourpoint_mixture:
      return sample_fourpoint_mixture(sigma, resolved_eta(cell_eta), n, seed);
    default: return sample_gaussian(sigma, n, seed);
  }
}

DistributionSpec parse_distribution(const std::string& text, const Eigen::MatrixXd& sigma) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw InvalidInput("empty distribution");
  DistributionSpec spec;
  spec.sigma = sigma;
  const std::string& kind = parts[0];
  if (kind == "gaussian" && parts.size() == 1) {
    spec.kind = DistributionKind::gaussian;
  } else if (kind == "custom_psd" && parts.size() == 1) {
    spec.kind = DistributionKind::custom_psd;
  } else if (kind == "t" && parts.size() == 2) {
    spec.kind = DistributionKind::elliptical_t;
    spec.nu = parse_number(parts[1], "nu");
  } else if (kind == "fourpoint" && (parts.size() == 2 || parts.size() == 3)) {
    spec.kind = DistributionKind::fourpoint;
    spec.eta_from_cell = parts[1] == "cell";
    if (!spec.eta_from_cell) spec.eta_param = parse_number(parts[1], "four-point eta");
    if (parts.size() == 3) spec.sigma_sq = parse_number(parts[2], "sigma^2");
  } else if (kind == "mixture" && parts.size() == 2) {
    spec.kind = DistributionKind::fourpoint_mixture;
    spec.eta_from_cell = parts[1] == "cell";
    if (!spec.eta_from_cell) spec.eta_param = parse_number(parts[1], "mixture eta");
  } else {
    throw InvalidInput("unknown distribution '" + text + "'");
  }
  spec.validate();
  return spec;
}

void ContaminationSpec::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
  if (kind == AdversaryKind::fixed_outlier && !std::isfinite(magnitude)) throw InvalidParameter("magnitude must be finite");
  if (kind == AdversaryKind::variance_inflation && (!(factor > 0.0) || factor == 1.0 || !std::isfinite(factor))) {
    throw InvalidParameter("inflation factor must be positive and different from 1");
  }
  if (direction.size() > 0 && !(direction.norm() > 0.0)) throw InvalidParameter("outlier direction must be nonzero");
}

std::string ContaminationSpec::tag() const {
  switch (kind) {
    case AdversaryKind::none: return "none";
    case AdversaryKind::fixed_outlier:
      return "fixed_outlier:" + format_double(magnitude) + (relative_to_trace ? ":trace" : "");
    case AdversaryKind::variance_inflation: return "variance_inflation:" + format_double(factor);
    case AdversaryKind::quantile_replace: return "quantile_replace";
  }
  return "none";
}

ContaminationSpec parse_adversary(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw InvalidInput("empty adversary");
  ContaminationSpec spec;
  if (parts[0] == "none" && parts.size() == 1) {
    spec.kind = AdversaryKind::none;
  } else if (parts[0] == "fixed_outlier" && (parts.size() == 2 || parts.size() == 3)) {
    spec.kind = AdversaryKind::fixed_outlier;
    spec.magnitude = parse_number(parts[1], "magnitude");
    if (parts.size() == 3) {
      if (parts[2] != "trace") throw InvalidInput("unknown outlier option '" + parts[2] + "'");
      spec.relative_to_trace = true;
    }
  } else if (parts[0] == "variance_inflation" && parts.size() == 2) {
    spec.kind = AdversaryKind::variance_inflation;
    spec.factor = parse_number(parts[1], "factor");
  } else if (parts[0] == "quantile_replace" && parts.size() == 1) {
    spec.kind = AdversaryKind::quantile_replace;
  } else {
    throw InvalidInput("unknown adversary '" + text + "'");
  }
  spec.validate();
  return spec;
}

Eigen::Index contamination_budget(double eta, Eigen::Index n) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
  return std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::floor(eta * static_cast<double>(n) + 1e-9)));
}

Sample contaminate(const Sample& s, const ContaminationSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Eigen::Index n = s.size();
  const Eigen::Index d = s.dim();
  const Eigen::Index count = spec.kind == AdversaryKind::none ? 0 : contamination_budget(spec.eta, n);
  Eigen::MatrixXd rows = s.rows();
  if (count == 0) return Sample(std::move(rows));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  switch (spec.kind) {
    case AdversaryKind::fixed_outlier: {
      Eigen::RowVectorXd target = Eigen::RowVectorXd::Unit(d, 0);
      if (spec.direction.size() > 0) {
        if (spec.direction.size() != d) throw InvalidParameter("outlier direction dimension mismatch");
        target = spec.direction.transpose() / spec.direction.norm();
      }
      target *= spec.magnitude;
      Rng rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      // Rows that already equal the outlier would not change; take them last.
      std::stable_partition(order.begin(), order.end(), [&](Eigen::Index i) { return rows.row(i) != target; });
      for (Eigen::Index j = 0; j < count; ++j) rows.row(order[static_cast<std::size_t>(j)]) = target;
      break;
    }
    case AdversaryKind::variance_inflation: {
      Rng rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      std::stable_partition(order.begin(), order.end(), [&](Eigen::Index i) { return !rows.row(i).isZero(0.0); });
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(j)];
        if (rows.row(i).isZero(0.0)) {
          rows.row(i) = spec.factor * Eigen::RowVectorXd::Unit(d, 0);
        } else {
          rows.row(i) *= spec.factor;
        }
      }
      break;
    }
    case AdversaryKind::quantile_replace: {
      const Eigen::VectorXd norms = rows.rowwise().norm();
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return norms(a) > norms(b); });
      const double q = count < n ? norms(order[static_cast<std::size_t>(count)]) : 0.0;
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(j)];
        if (norms(i) > q) {
          rows.row(i) *= q / norms(i);
        } else if (norms(i) == 0.0) {
          rows.row(i) = Eigen::RowVectorXd::Unit(d, 0);
        } else {
          rows.row(i) = -rows.row(i);
        }
      }
      break;
    }
    case AdversaryKind::none:
      break;
  }
  return Sample(std::move(rows));
}

Estimator parse_estimator(const std::string& text) {
  if (text == "sample_cov") return Estimator::sample_cov;
  if (text == "p4") return Estimator::p4;
  if (text == "pgt4") return Estimator::pgt4;
  if (text == "trace") return Estimator::trace;
  if (text == "opnorm") return Estimator::opnorm;
  throw InvalidInput("unknown estimator '" + text + "'");
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::sample_cov: return "sample_cov";
    case Estimator::p4: return "p4";
    case Estimator::pgt4: return "pgt4";
    case Estimator::trace: return "trace";
    case Estimator::opnorm: return "opnorm";
  }
  return "";
}

void ExperimentConfig::validate() const {
  if (distributions.empty() || adversaries.empty() || n_values.empty() || eta_values.empty()) {
    throw InvalidInput("experiment needs at least one distribution, adversary, N and eta");
  }
  if (trials < 1) throw InvalidInput("trials must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
  for (const auto& d : distributions) d.validate();
  for (const auto& a : adversaries) a.validate();
  for (auto n : n_values) {
    if (n < 2) throw InvalidInput("every N must be at least 2");
  }
  for (double e : eta_values) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidParameter("eta must lie in [0, 1]");
  }
  if (p_rule == PRule::fixed && !(p > 4.0)) throw InvalidParameter("p must exceed 4");
}

std::size_t ExperimentConfig::cell_count() const {
  return distributions.size() * adversaries.size() * n_values.size() * eta_values.size() *
         static_cast<std::size_t>(trials);
}

namespace {

ExperimentRecord run_cell(const ExperimentConfig& cfg, std::size_t cell) {
  std::size_t rest = cell;
  const auto trial = static_cast<int>(rest % static_cast<std::size_t>(cfg.trials));
  rest /= static_cast<std::size_t>(cfg.trials);
  const double eta = cfg.eta_values[rest % cfg.eta_values.size()];
  rest /= cfg.eta_values.size();
  const Eigen::Index n = cfg.n_values[rest % cfg.n_values.size()];
  rest /= cfg.n_values.size();
  const ContaminationSpec& adv_template = cfg.adversaries[rest % cfg.adversaries.size()];
  rest /= cfg.adversaries.size();
  const DistributionSpec& dist = cfg.distributions[rest];

  ExperimentRecord rec;
  rec.cell = cell;
  rec.trial = trial;
  rec.seed = derive_seed(cfg.seed, cell);
  rec.distribution = dist.tag();
  rec.adversary = adv_template.tag();
  rec.n = n;
  rec.d = dist.dim();
  rec.eta = eta;
  rec.delta = cfg.delta;

  const auto start = std::chrono::steady_clock::now();
  try {
    rec.kappa4 = cfg.oracle_kappa ? dist.kappa(4.0, eta) : cfg.kappa4;
    const Eigen::MatrixXd truth = dist.covariance(eta);
    const Sample clean = dist.draw(3 * n, derive_seed(rec.seed, kDraw), eta);
    ContaminationSpec adv = adv_template;
    adv.eta = eta;
    if (adv.relative_to_trace) adv.magnitude *= std::sqrt(truth.trace());
    const Sample s = contaminate(clean, adv, derive_seed(rec.seed, kAdversary));
    const std::uint64_t est_seed = derive_seed(rec.seed, kEstimators);

    for (Estimator e : cfg.estimators) {
      switch (e) {
        case Estimator::sample_cov:
          rec.err_sample_cov = matrix_error(sample_covariance(s), truth);
          break;
        case Estimator::p4: {
          P4Config pc;
          pc.eta = eta;
          pc.delta = cfg.delta;
          pc.kappa4 = rec.kappa4;
          pc.c_gamma = cfg.c_gamma;
          pc.fit = cfg.fit;
          pc.search = cfg.search;
          pc.seed = est_seed;
          if (cfg.p4_oracle_scale) pc.scale = ScaleInfo::from_covariance(truth);
          rec.err_p4 = matrix_error(estimate_cov_p4(s, pc), truth);
          break;
        }
        case Estimator::pgt4: {
          Pgt4Config gc;
          gc.eta = eta;
          gc.delta = cfg.delta;
          gc.p = cfg.p_rule == PRule::fixed ? cfg.p : cfg.p_offset + std::log(1.0 / std::max(eta, 1e-300));
          gc.kappa_p = cfg.oracle_kappa ? dist.kappa(gc.p, eta) : cfg.kappa4;
          gc.eps_eta_factor = cfg.eps_eta_factor;
          gc.eps_conf_factor = cfg.eps_conf_factor;
          gc.fit = cfg.fit;
          gc.search = cfg.search;
          gc.seed = est_seed;
          Pgt4Result r;
          if (cfg.pgt4_oracle_scale) {
            gc.scale = ScaleInfo::from_covariance(truth);
            r = estimate_cov_pgt4_detailed(s.slice(n, 2 * n), gc);
          } else {
            r = estimate_cov_pgt4_plugin(s, gc, rec.kappa4);
          }
          rec.err_pgt4 = matrix_error(r.sigma, truth);
          break;
        }
        case Estimator::trace: {
          const Eigen::Index even = n - n % 2;
          rec.err_trace = std::abs(estimate_trace(s.slice(0, even), eta, cfg.delta) - truth.trace());
          break;
        }
        case Estimator::opnorm: {
          OpNormConfig oc;
          oc.eta = eta;
          oc.delta = cfg.delta;
          oc.kappa4 = rec.kappa4;
          oc.search = cfg.search;
          oc.search.seed = est_seed;
          rec.err_opnorm = std::abs(estimate_opnorm(s.slice(n, n), oc) - op_norm(truth));
          break;
        }
      }
    }
  } catch (const std::exception& ex) {
    rec.status = sanitize(std::string("error: ") + ex.what());
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ScopedQuietWarnings quiet;
  std::vector<ExperimentRecord> records(cfg.cell_count());
  parallel_for(records.size(), [&](std::size_t cell) { records[cell] = run_cell(cfg, cell); });
  return records;
}

void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, bool timing) {
  out << "cell,trial,seed,distribution,adversary,n,d,eta,delta,kappa4,"
         "err_sample_cov,err_p4,err_pgt4,err_trace,err_opnorm,status";
  if (timing) out << ",wall_seconds";
  out << '\n';
  for (const auto& r : records) {
    out << r.cell << ',' << r.trial << ',' << r.seed << ',' << r.distribution << ',' << r.adversary << ',' << r.n
        << ',' << r.d << ',' << format_double(r.eta) << ',' << format_double(r.delta) << ','
        << format_double(r.kappa4) << ',' << format_optional(r.err_sample_cov) << ',' << format_optional(r.err_p4)
        << ',' << format_optional(r.err_pgt4) << ',' << format_optional(r.err_trace) << ','
        << format_optional(r.err_opnorm) << ',' << r.status;
    if (timing) out << ',' << format_double(r.wall_seconds);
    out << '\n';
  }
}

}  // namespace robustcov
