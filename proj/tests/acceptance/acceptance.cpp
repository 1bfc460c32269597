// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "robustcov/cov_p4.hpp"
#include "robustcov/diagnostics.hpp"
#include "robustcov/log.hpp"
#include "robustcov/minmax_fit.hpp"
#include "robustcov/opnorm.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/robust_scalar.hpp"
#include "robustcov/simulation.hpp"
#include "robustcov/truncation.hpp"

using namespace robustcov;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

// Median error per key, over successful records.
template <typename Key>
std::map<Key, double> medians(const std::vector<ExperimentRecord>& records,
                              const std::function<Key(const ExperimentRecord&)>& key,
                              const std::function<std::optional<double>(const ExperimentRecord&)>& err,
                              int* failures) {
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records) {
    const auto e = err(r);
    if (r.status != "ok" || !e) {
      ++*failures;
      continue;
    }
    groups[key(r)].push_back(*e);
  }
  std::map<Key, double> out;
  for (const auto& [k, v] : groups) out[k] = median(v);
  return out;
}

Sample gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  return sample_gaussian(Eigen::MatrixXd::Identity(d, d), n, seed);
}

Verdict truncation_suite() {
  constexpr int kPoints = 100000;
  double worst_band = 0.0;
  bool odd = true, bounded = true, lipschitz = true;
  double prev_x = 0.0, prev_psi = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double x = -50.0 + 100.0 * i / (kPoints - 1);
    const double p = psi(x);
    odd = odd && psi(-x) == -p;
    bounded = bounded && std::abs(p) <= 1.0;
    if (i > 0) lipschitz = lipschitz && std::abs(p - prev_psi) <= std::abs(x - prev_x) * (1.0 + 1e-15);
    prev_x = x;
    prev_psi = p;
    for (double lambda : {1e-3, 0.37, 1.0, 8.0}) {
      const double lhs = psi(lambda * x) / lambda;
      worst_band = std::max(worst_band, std::abs(lhs - psi_band(x, lambda, lambda)) / std::max(1.0, std::abs(lhs)));
    }
  }
  return {odd && bounded && lipschitz && worst_band <= 1e-15,
          std::string("odd=") + (odd ? "yes" : "no") + " bounded=" + (bounded ? "yes" : "no") +
              " lipschitz=" + (lipschitz ? "yes" : "no") + " max band mismatch " + fmt("%.2e", worst_band) +
              " (tol 1e-15)"};
}

Verdict small_lambda_reduction() {
  const Sample s = gaussian(200, 5, 11);
  const FitResult r = fit_minmax_psd(s, 1e-9, P4Config{});
  const double gap = (r.A - sample_covariance(s)).norm();
  return {gap <= 1e-6, "||fit - sample cov||_F = " + fmt("%.3e", gap) + " (tol 1e-6)"};
}

class QuadraticTarget final : public DirectionalTarget {
 public:
  QuadraticTarget(const Sample& s, Eigen::MatrixXd B) : sample_(s), B_(std::move(B)) {}
  const Sample& seeding_sample() const override { return sample_; }
  std::vector<const Eigen::MatrixXd*> blocks() const override { return {}; }
  double value(const Eigen::VectorXd& v, std::span<const Eigen::VectorXd>) const override { return v.dot(B_ * v); }

 private:
  const Sample& sample_;
  Eigen::MatrixXd B_;
};

Verdict exact_recovery() {
  const Eigen::Index d = 4;
  Rng rng(21);
  const Eigen::MatrixXd g = standard_normal(d, d, rng);
  const Eigen::MatrixXd B = g * g.transpose();
  const Sample s = gaussian(40, d, 22);
  const FitResult r = fit_minmax(QuadraticTarget(s, B), Eigen::MatrixXd::Zero(d, d), FitOptions{},
                                 DirectionSearchOptions{});
  const bool enough = r.working_set_size >= d * (d + 1) / 2;
  return {r.residual <= 1e-6 && enough, "residual " + fmt("%.3e", r.residual) + " over " +
                                            std::to_string(r.working_set_size) + " directions (tol 1e-6)"};
}

ExperimentConfig base_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.trials = 50;
  cfg.delta = 0.1;
  cfg.seed = seed;
  return cfg;
}

Verdict rate_in_n() {
  ExperimentConfig cfg = base_config(4);
  cfg.distributions = {parse_distribution("gaussian", Eigen::MatrixXd::Identity(10, 10))};
  cfg.adversaries = {parse_adversary("none")};
  cfg.n_values = {500, 2000, 8000};
  cfg.eta_values = {0.0};
  cfg.estimators = {Estimator::p4};
  int failures = 0;
  const auto m = medians<Eigen::Index>(
      run_experiment(cfg), [](const ExperimentRecord& r) { return r.n; },
      [](const ExperimentRecord& r) { return r.err_p4; }, &failures);
  const double r1 = m.at(2000) / m.at(500), r2 = m.at(8000) / m.at(2000);
  const bool pass = failures == 0 && r1 >= 0.4 && r1 <= 0.65 && r2 >= 0.4 && r2 <= 0.65;
  return {pass, "medians " + fmt("%.4f", m.at(500)) + " / " + fmt("%.4f", m.at(2000)) + " / " +
                    fmt("%.4f", m.at(8000)) + ", ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2) +
                    " (want [0.4, 0.65])"};
}

Verdict eta_slope(ExperimentConfig cfg, Estimator e, double lo, double hi) {
  cfg.adversaries = {parse_adversary("quantile_replace")};
  cfg.n_values = {8000};
  cfg.eta_values = {0.01, 0.04, 0.16};
  cfg.estimators = {e};
  int failures = 0;
  const auto m = medians<double>(
      run_experiment(cfg), [](const ExperimentRecord& r) { return r.eta; },
      [e](const ExperimentRecord& r) { return e == Estimator::p4 ? r.err_p4 : r.err_pgt4; }, &failures);
  std::vector<double> x, y;
  for (const auto& [eta, err] : m) {
    x.push_back(eta);
    y.push_back(err);
  }
  const double slope = loglog_slope(x, y);
  return {failures == 0 && slope >= lo && slope <= hi,
          "medians " + fmt("%.4f", y[0]) + " / " + fmt("%.4f", y[1]) + " / " + fmt("%.4f", y[2]) + ", slope " +
              fmt("%.3f", slope) + " (want [" + fmt("%.2f", lo) + ", " + fmt("%.2f", hi) + "])"};
}

Verdict rate_in_eta_p4() {
  ExperimentConfig cfg = base_config(5);
  cfg.distributions = {parse_distribution("mixture:cell", Eigen::MatrixXd::Identity(10, 10))};
  cfg.p4_oracle_scale = true;
  return eta_slope(cfg, Estimator::p4, 0.35, 0.65);
}

Verdict rate_in_eta_light() {
  ExperimentConfig cfg = base_config(6);
  cfg.distributions = {parse_distribution("gaussian", Eigen::MatrixXd::Identity(1, 1))};
  cfg.p_rule = PRule::log_inv_eta;
  cfg.pgt4_oracle_scale = true;
  return eta_slope(cfg, Estimator::pgt4, 0.75, 1.15);
}

Verdict trace_bracket() {
  constexpr int kTrials = 200;
  int inside = 0;
  for (int t = 0; t < kTrials; ++t) {
    const double est = estimate_trace(gaussian(4000, 5, derive_seed(7, t)), 0.0, 0.05);
    inside += est >= 2.5 && est <= 10.0 ? 1 : 0;
  }
  return {inside >= 190, std::to_string(inside) + "/" + std::to_string(kTrials) + " inside [tr/2, 2 tr] (want >= 95%)"};
}

Verdict opnorm_bracket() {
  constexpr int kTrials = 200;
  OpNormConfig cfg;
  cfg.kappa4 = gaussian_kappa(4.0);
  cfg.c_catoni = 1.0;
  cfg.delta = 0.1;
  int inside = 0, monotone = 0;
  for (int t = 0; t < kTrials; ++t) {
    const Sample s = gaussian(4000, 5, derive_seed(8, t));
    cfg.search.seed = derive_seed(80, t);
    const double est = estimate_opnorm(s, cfg);
    inside += est >= 0.25 && est <= 4.0 ? 1 : 0;
    bool up = true;
    double prev = 0.0;
    for (double a = 0.02; a <= 5.0; a *= 1.35) {
      const double v = phi(s, a, cfg);
      up = up && v >= prev;
      prev = v;
    }
    monotone += up ? 1 : 0;
  }
  return {inside >= 180 && monotone == kTrials,
          std::to_string(inside) + "/" + std::to_string(kTrials) + " inside [op/4, 4 op] (want >= 90%), phi monotone in " +
              std::to_string(monotone) + "/" + std::to_string(kTrials) + " (want all)"};
}

Verdict dominance() {
  ExperimentConfig cfg = base_config(9);
  cfg.distributions = {parse_distribution("t:9", Eigen::MatrixXd::Identity(5, 5))};
  cfg.adversaries = {parse_adversary("fixed_outlier:100:trace")};
  cfg.n_values = {1000};
  cfg.eta_values = {0.0, 0.05};
  cfg.estimators = {Estimator::sample_cov, Estimator::p4, Estimator::pgt4};
  cfg.pgt4_oracle_scale = true;
  const auto records = run_experiment(cfg);
  int failures = 0;
  auto by_eta = [](const ExperimentRecord& r) { return r.eta; };
  const auto sc = medians<double>(records, by_eta, [](const ExperimentRecord& r) { return r.err_sample_cov; }, &failures);
  const auto p4 = medians<double>(records, by_eta, [](const ExperimentRecord& r) { return r.err_p4; }, &failures);
  const auto pg = medians<double>(records, by_eta, [](const ExperimentRecord& r) { return r.err_pgt4; }, &failures);
  const double rp4 = p4.at(0.05) / p4.at(0.0), rpg = pg.at(0.05) / pg.at(0.0), rsc = sc.at(0.05) / sc.at(0.0);
  return {failures == 0 && rp4 <= 3.0 && rpg <= 3.0 && rsc >= 10.0,
          "error ratios p4 " + fmt("%.2f", rp4) + ", pgt4 " + fmt("%.2f", rpg) + " (want <= 3), sample cov " +
              fmt("%.1f", rsc) + " (want >= 10)"};
}

Verdict budget_and_breakdown() {
  int cases = 0, wrong = 0;
  for (const char* text : {"fixed_outlier:100", "fixed_outlier:5:trace", "variance_inflation:10", "quantile_replace"}) {
    for (double eta : {0.0, 0.013, 0.05, 0.1, 0.25, 0.5}) {
      for (Eigen::Index n : {7, 50, 333}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
          ContaminationSpec spec = parse_adversary(text);
          spec.eta = eta;
          const Sample s = sample_elliptical_t(Eigen::MatrixXd::Identity(3, 3), 9.0, n, derive_seed(10, seed));
          const Sample c = contaminate(s, spec, seed);
          Eigen::Index changed = 0;
          for (Eigen::Index i = 0; i < n; ++i) changed += s.row(i) != c.row(i) ? 1 : 0;
          wrong += changed == contamination_budget(eta, n) && changed == static_cast<Eigen::Index>(std::floor(eta * n + 1e-9)) ? 0 : 1;
          ++cases;
        }
      }
    }
  }
  P4Config cfg;
  cfg.radius_override = 1e-9;
  Eigen::MatrixXd rows = gaussian(600, 3, 12).rows();
  for (Eigen::Index i = 400; i < 406; ++i) rows.row(i) *= 25.0;
  const P4Result r = estimate_cov_p4_detailed(Sample(rows), cfg);
  const bool zero = !r.feasible && r.sigma.isZero(0.0) && r.fit.residual > 1e-9;
  return {wrong == 0 && zero, std::to_string(cases - wrong) + "/" + std::to_string(cases) +
                                  " contaminations change exactly floor(eta N) rows; forced radius gives " +
                                  (zero ? "zero matrix" : "nonzero matrix") + " (residual " +
                                  fmt("%.3e", r.fit.residual) + ")"};
}

Verdict f_statistic() {
  int bad_order = 0, bad_f1 = 0, bad_mono = 0;
  double worst_ratio = 1.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Sample s = gaussian(12, 4, derive_seed(11, seed));
    bad_f1 += f_stat_bruteforce(s, 1) == s.rows().rowwise().squaredNorm().maxCoeff() &&
                      f_stat_greedy(s, 1) == f_stat_bruteforce(s, 1)
                  ? 0
                  : 1;
    double prev_b = 0.0, prev_g = 0.0;
    for (Eigen::Index k = 1; k <= 3; ++k) {
      const double b = f_stat_bruteforce(s, k), g = f_stat_greedy(s, k);
      bad_order += g <= b ? 0 : 1;
      bad_mono += b >= prev_b && g >= prev_g ? 0 : 1;
      worst_ratio = std::min(worst_ratio, g / b);
      prev_b = b;
      prev_g = g;
    }
  }
  return {bad_order == 0 && bad_f1 == 0 && bad_mono == 0,
          "greedy > brute in " + std::to_string(bad_order) + ", f(1) mismatches " + std::to_string(bad_f1) +
              ", monotonicity breaks " + std::to_string(bad_mono) + " over 100 instances; worst greedy/brute " +
              fmt("%.3f", worst_ratio)};
}

Verdict lower_bound() {
  double worst = 0.0, worst_homog = 0.0;
  for (double eta : {0.01, 0.04, 0.25}) {
    const double closed = std::sqrt(eta) / 2 - eta / 2;
    worst = std::max(worst, std::abs(epsilon_lower_bound(fourpoint_distribution(eta), eta) - closed));
    for (double s2 : {0.5, 2.0, 7.0}) {
      const double scale = s2 / std::sqrt(2.0 - eta);
      worst_homog = std::max(worst_homog, std::abs(epsilon_lower_bound(fourpoint_distribution(eta, s2), eta) -
                                                   scale * epsilon_lower_bound(fourpoint_distribution(eta), eta)));
    }
  }
  return {worst <= 1e-12 && worst_homog <= 1e-12,
          "max |eps - closed form| " + fmt("%.2e", worst) + ", homogeneity " + fmt("%.2e", worst_homog) + " (tol 1e-12)"};
}

Verdict determinism() {
  const std::vector<std::string> args{"simulate",        "--distributions", "gaussian", "t:9", "mixture:cell",
                                      "--adversaries",   "none",            "quantile_replace",
                                      "--n",             "60",              "120",
                                      "--eta",           "0",               "0.05",
                                      "--trials",        "3",               "--dim",    "3",
                                      "--estimators",    "sample_cov",      "p4",       "pgt4", "trace", "opnorm",
                                      "--seed",          "2024"};
  auto once = [&](const char* threads) {
    setenv("ROBUSTCOV_THREADS", threads, 1);
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return code == 0 ? out.str() : std::string("exit ") + std::to_string(code);
  };
  const std::string a = once("1"), b = once("1"), c = once("4");
  unsetenv("ROBUSTCOV_THREADS");
  const bool same = !a.empty() && a.rfind("exit ", 0) != 0 && a == b && a == c;
  return {same, std::to_string(a.size()) + " bytes; rerun " + (a == b ? "identical" : "differs") + ", 4 threads " +
                    (a == c ? "identical" : "differs")};
}

}  // namespace

int main() {
  const ScopedQuietWarnings quiet;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"truncation suite", truncation_suite},
      {"small-lambda reduction to the sample covariance", small_lambda_reduction},
      {"min-max exact recovery", exact_recovery},
      {"p4 rate in N", rate_in_n},
      {"p4 rate in eta (heavy tail)", rate_in_eta_p4},
      {"pgt4 rate in eta (light tail)", rate_in_eta_light},
      {"trace bracket", trace_bracket},
      {"operator-norm bracket", opnorm_bracket},
      {"robustness dominance", dominance},
      {"contamination budget and breakdown", budget_and_breakdown},
      {"f statistic oracle", f_statistic},
      {"lower-bound closed forms", lower_bound},
      {"simulate determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += v.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
