#include <doctest.h>

#include <cmath>

#include "robustcov/diagnostics.hpp"
#include "robustcov/directions.hpp"
#include "robustcov/errors.hpp"
#include "robustcov/truncation.hpp"
#include "support.hpp"

using namespace robustcov;

TEST_CASE("f statistic closed forms") {
  const Sample s = test::gaussian_rows(7, 3, 1);
  CHECK(f_stat_bruteforce(s, 1) == doctest::Approx(s.rows().rowwise().squaredNorm().maxCoeff()).epsilon(1e-14));
  CHECK(f_stat_bruteforce(s, 7) == doctest::Approx(7.0 * op_norm(sample_covariance(s))).epsilon(1e-12));

  const Sample ortho(Eigen::MatrixXd(Eigen::Matrix2d::Identity()));
  CHECK(f_stat_bruteforce(ortho, 2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(f_stat_bruteforce(s, 0), InvalidParameter);
  CHECK_THROWS_AS(f_stat_bruteforce(test::gaussian_rows(60, 2, 1), 30, 1e3), BudgetExceeded);
}

TEST_CASE("greedy against brute force") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Sample s = test::gaussian_rows(12, 4, 100 + seed);
    CHECK(f_stat_greedy(s, 1) == f_stat_bruteforce(s, 1));
    double prev = 0.0;
    for (Eigen::Index k = 1; k <= 3; ++k) {
      const double g = f_stat_greedy(s, k), b = f_stat_bruteforce(s, k);
      CHECK(g <= b);
      CHECK(g >= 0.8 * b);
      CHECK(g >= prev);
      prev = g;
    }
  }
}

TEST_CASE("greedy on a larger sample stays below brute force") {
  const Sample s = test::gaussian_rows(30, 3, 77);
  for (Eigen::Index k = 1; k <= 3; ++k) CHECK(f_stat_greedy(s, k) <= f_stat_bruteforce(s, k));
}

TEST_CASE("peaky/spread decomposition") {
  const Sample s = test::gaussian_rows(80, 3, 5);
  const Eigen::MatrixXd ref = Eigen::MatrixXd::Identity(3, 3);
  const DirectionSet ds = seed_directions(s, ref, 64, 1);

  const double tiny = 1.0 / (2.0 * s.rows().rowwise().squaredNorm().maxCoeff());
  const Decomposition flat = peaky_spread_decompose(s, tiny, ref, ds);
  CHECK(flat.peaky == 0.0);
  CHECK(flat.spread == doctest::Approx(flat.total).epsilon(1e-12));

  for (double lambda : {0.1, 1.0, 10.0}) {
    const Decomposition d = peaky_spread_decompose(s, lambda, ref, ds);
    for (Eigen::Index j = 0; j < d.directions.cols(); ++j) {
      CHECK(d.total_values(j) <= d.peaky_values(j) + d.spread_values(j) + 1e-12);
    }
  }
}

TEST_CASE("decomposition in one dimension") {
  const Eigen::Vector4d x(1, -3, 0.5, 2);
  const Sample s{Eigen::MatrixXd(x)};
  const Eigen::MatrixXd ref = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const double lambda = 0.5;
  const Decomposition d = peaky_spread_decompose(s, lambda, ref, seed_directions(s, ref, 4, 1));
  double peaky = 0.0, total = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double q = x(i) * x(i);
    peaky += lambda * q > 1.0 ? q : 0.0;
    total += q;
  }
  CHECK(d.peaky == doctest::Approx(peaky / 4));
  CHECK(d.total == doctest::Approx(std::abs(total / 4 - 2.0)));
  CHECK(d.spread == doctest::Approx(std::abs(truncated_process(s, Eigen::VectorXd::Ones(1), TruncationLevel(lambda)) - 2.0)));
}

TEST_CASE("truncated Gaussian factor") {
  CHECK(truncated_gaussian_factor(3, 1e3) == doctest::Approx(1.0));
  CHECK(truncated_gaussian_factor(3, 0.0) == 0.0);
  // d = 2: P(chi^2_4 <= R^2) = 1 - exp(-R^2/2)(1 + R^2/2).
  const double r2 = 3.0;
  CHECK(truncated_gaussian_factor(2, std::sqrt(r2)) == doctest::Approx(1.0 - std::exp(-r2 / 2) * (1.0 + r2 / 2)));
}
