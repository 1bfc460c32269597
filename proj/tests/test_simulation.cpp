#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "robustcov/errors.hpp"
#include "robustcov/simulation.hpp"
#include "support.hpp"

using namespace robustcov;

namespace {

Eigen::Index changed_rows(const Sample& a, const Sample& b) {
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) n += a.row(i) != b.row(i) ? 1 : 0;
  return n;
}

std::string csv_of(const ExperimentConfig& cfg) {
  std::ostringstream out;
  write_records_csv(out, run_experiment(cfg));
  return out.str();
}

}  // namespace

TEST_CASE("Gaussian sampler") {
  CHECK(sample_gaussian(Eigen::MatrixXd::Zero(3, 3), 10, 1).is_zero());

  const Sample one = sample_gaussian(Eigen::MatrixXd::Constant(1, 1, 4.0), 100000, 2);
  CHECK(one.rows().squaredNorm() / 1e5 == doctest::Approx(4.0).epsilon(0.05));

  const Eigen::MatrixXd sigma = Eigen::Vector2d(3, 1).asDiagonal();
  const Sample s = sample_gaussian(sigma, 100000, 3);
  CHECK(op_norm(Eigen::MatrixXd(sample_covariance(s) - sigma)) <= 0.1);
  CHECK_THROWS_AS(sample_gaussian(Eigen::Matrix2d{{1, 0}, {0, -1}}, 10, 1), InvalidParameter);
}

TEST_CASE("elliptical t sampler") {
  const Eigen::MatrixXd sigma = Eigen::Vector2d(2, 1).asDiagonal();
  const Sample near_gauss = sample_elliptical_t(sigma, 1e6, 100000, 4);
  const Eigen::MatrixXd c = sample_covariance(near_gauss);
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(c(1, 1) == doctest::Approx(1.0).epsilon(0.05));

  const Sample t9 = sample_elliptical_t(sigma, 9.0, 100000, 5);
  CHECK(op_norm(Eigen::MatrixXd(sample_covariance(t9) - sigma)) <= 0.1);

  const Sample scalar = sample_elliptical_t(Eigen::MatrixXd::Identity(1, 1), 9.0, 1000000, 6);
  const double m4 = scalar.rows().array().pow(4).mean();
  CHECK(m4 == doctest::Approx(3.0 * 7.0 / 5.0).epsilon(0.1));
  CHECK_THROWS_AS(sample_elliptical_t(sigma, 4.0, 10, 1), InvalidParameter);
}

TEST_CASE("four-point sampler") {
  const double eta = 0.04;
  const Sample y = sample_fourpoint(eta, std::sqrt(2.0 - eta), 1000000, 7);
  const Eigen::ArrayXd x = y.rows().col(0).array();
  CHECK(std::abs(x.mean()) <= 0.01);
  const double big = 1.0 / std::sqrt(eta);
  const double freq = (x.abs() == big).cast<double>().mean();
  CHECK(std::abs(freq - eta) <= 0.005);
  CHECK(x.square().mean() == doctest::Approx(2.0 - eta).epsilon(0.01));
  CHECK_THROWS_AS(sample_fourpoint(0.3, 1.0, 10, 1), InvalidParameter);
}

TEST_CASE("four-point mixture has the advertised covariance") {
  const Eigen::MatrixXd sigma = Eigen::Vector2d(2, 1).asDiagonal();
  const DistributionSpec spec = parse_distribution("mixture:0.04", sigma);
  const Sample s = spec.draw(400000, 8);
  CHECK(op_norm(Eigen::MatrixXd(sample_covariance(s) - spec.covariance())) <= 0.1);
  CHECK(spec.kappa(4.0) > gaussian_kappa(4.0));
}

TEST_CASE("distribution and adversary parsing") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  CHECK(parse_distribution("gaussian", I).kind == DistributionKind::gaussian);
  CHECK(parse_distribution("t:9", I).nu == 9.0);
  CHECK(parse_distribution("fourpoint:cell", I).eta_from_cell);
  CHECK_THROWS_AS(parse_distribution("t:3", I), InvalidParameter);
  CHECK_THROWS_AS(parse_distribution("cauchy", I), InvalidInput);
  CHECK(parse_adversary("fixed_outlier:100:trace").relative_to_trace);
  CHECK(parse_adversary("variance_inflation:5").factor == 5.0);
  CHECK_THROWS_AS(parse_adversary("bogus"), InvalidInput);
  CHECK(gaussian_kappa(4.0) == doctest::Approx(std::pow(3.0, 0.25)));
}

TEST_CASE("contamination budget") {
  const Sample s = test::gaussian_rows(100, 3, 9);
  ContaminationSpec none = parse_adversary("fixed_outlier:100");
  CHECK(contaminate(s, none, 1).rows() == s.rows());

  ContaminationSpec fixed = parse_adversary("fixed_outlier:100");
  fixed.eta = 0.1;
  const Sample c = contaminate(s, fixed, 2);
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < c.size(); ++i) hits += c.row(i) == 100.0 * test::unit(3, 0).transpose() ? 1 : 0;
  CHECK(hits == 10);

  CHECK(contamination_budget(0.1, 100) == 10);
  CHECK(contamination_budget(0.07, 30) == 2);
  for (const char* text : {"fixed_outlier:100", "variance_inflation:10", "quantile_replace", "none"}) {
    for (double eta : {0.0, 0.01, 0.05, 0.16, 0.5}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ContaminationSpec spec = parse_adversary(text);
        spec.eta = eta;
        const Sample base = test::gaussian_rows(57, 2, seed);
        const Eigen::Index expected = spec.kind == AdversaryKind::none ? 0 : contamination_budget(eta, 57);
        CHECK(changed_rows(base, contaminate(base, spec, seed)) == expected);
      }
    }
  }
}

TEST_CASE("experiment records") {
  ExperimentConfig cfg;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  cfg.distributions = {parse_distribution("gaussian", I)};
  cfg.adversaries = {parse_adversary("none")};
  cfg.n_values = {100};
  cfg.eta_values = {0.0};
  cfg.trials = 1;
  cfg.seed = 42;
  const auto one = run_experiment(cfg);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].err_sample_cov);
  const Sample drawn = cfg.distributions[0].draw(300, derive_seed(one[0].seed, 0));
  CHECK(*one[0].err_sample_cov == op_norm(Eigen::MatrixXd(sample_covariance(drawn) - I)));
  CHECK(one[0].status == "ok");

  cfg.n_values = {20, 40, 80};
  cfg.eta_values = {0.0, 0.1};
  cfg.trials = 10;
  cfg.adversaries = {parse_adversary("fixed_outlier:50")};
  cfg.estimators = {Estimator::sample_cov, Estimator::trace};
  CHECK(run_experiment(cfg).size() == 60);
  const std::string csv = csv_of(cfg);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 61);
  CHECK(csv == csv_of(cfg));
}

TEST_CASE("experiment CSV does not depend on thread count") {
  ExperimentConfig cfg;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  cfg.distributions = {parse_distribution("gaussian", I), parse_distribution("t:9", I)};
  cfg.adversaries = {parse_adversary("quantile_replace")};
  cfg.n_values = {60};
  cfg.eta_values = {0.0, 0.05};
  cfg.trials = 3;
  cfg.estimators = {Estimator::sample_cov, Estimator::p4, Estimator::trace, Estimator::opnorm};
  setenv("ROBUSTCOV_THREADS", "1", 1);
  const std::string serial = csv_of(cfg);
  setenv("ROBUSTCOV_THREADS", "4", 1);
  const std::string threaded = csv_of(cfg);
  unsetenv("ROBUSTCOV_THREADS");
  CHECK(serial == threaded);
}

TEST_CASE("failed cells are reported, not thrown") {
  ExperimentConfig cfg;
  cfg.distributions = {parse_distribution("gaussian", Eigen::MatrixXd::Zero(2, 2))};
  cfg.adversaries = {parse_adversary("none")};
  cfg.n_values = {30};
  cfg.eta_values = {0.0};
  cfg.trials = 1;
  cfg.estimators = {Estimator::opnorm};
  const auto r = run_experiment(cfg);
  REQUIRE(r.size() == 1);
  CHECK(r[0].status.rfind("error:", 0) == 0);
  CHECK(r[0].status.find(',') == std::string::npos);
}
