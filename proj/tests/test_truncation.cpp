#include <doctest.h>

#include <cmath>

#include "robustcov/errors.hpp"
#include "robustcov/truncation.hpp"
#include "support.hpp"

using namespace robustcov;

TEST_CASE("psi values") {
  CHECK(psi(0.5) == 0.5);
  CHECK(psi(2.0) == 1.0);
  CHECK(psi(-3.0) == -1.0);
  CHECK(psi(1.0) == 1.0);
  CHECK(psi(-1.0) == -1.0);
}

TEST_CASE("psi is odd, bounded and 1-Lipschitz") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng), y = u(rng);
    CHECK(psi(-x) == -psi(x));
    CHECK(std::abs(psi(x)) <= 1.0);
    CHECK(std::abs(psi(x) - psi(y)) <= std::abs(x - y));
  }
}

TEST_CASE("psi_band") {
  for (double lambda : {0.1, 1.0, 3.0}) {
    for (double x : {-20.0, -1.0, -0.2, 0.0, 0.3, 4.0, 50.0}) {
      CHECK(psi_band(x, lambda, lambda) == doctest::Approx(psi(lambda * x) / lambda));
    }
  }
  CHECK(psi_band(0.3, 1.0, 1.0) == 0.3);
  CHECK(psi_band(5.0, 1.0, 0.5) == 2.0);
  CHECK(psi_band(-5.0, 1.0, 0.5) == -1.0);
  CHECK_THROWS_AS(psi_band(0.0, 0.5, 1.0), InvalidParameter);
}

TEST_CASE("truncated_process") {
  const Sample s(Eigen::MatrixXd(Eigen::Matrix2d{{2, 0}, {0, 1}}));
  const Eigen::VectorXd e1 = test::unit(2, 0), e2 = test::unit(2, 1);
  CHECK(truncated_process(s, e1, TruncationLevel(1.0)) == doctest::Approx(0.5));

  const Sample g = test::gaussian_rows(50, 3, 4);
  const Eigen::VectorXd v = Eigen::Vector3d(1, 2, -1).normalized();
  const double lambda = 1.0 / (g.rows() * v).array().square().maxCoeff();
  CHECK(truncated_process(g, v, TruncationLevel(lambda)) == doctest::Approx(v.dot(sample_covariance(g) * v)));

  const Sample col(Eigen::MatrixXd(Eigen::Matrix2d{{3, 0}, {-1, 0}}));
  CHECK(truncated_process(col, e2, TruncationLevel(2.0)) == 0.0);
  CHECK_THROWS_AS(truncated_process(s, Eigen::Vector2d(1, 1), TruncationLevel(1.0)), InvalidDirection);
  CHECK_THROWS_AS(TruncationLevel(0.0), InvalidParameter);
}

TEST_CASE("one-sided trimming") {
  CHECK(trimming_level(1.0, 3.0) == 0.25);
  const Sample big(Eigen::MatrixXd(Eigen::Matrix2d{{3, 0}, {-5, 0}}));
  CHECK(one_sided_process(big, test::unit(2, 0), 1.0, 3.0) == doctest::Approx(4.0));
  const Sample one(Eigen::MatrixXd(Eigen::RowVector2d(std::sqrt(2.0), 0)));
  CHECK(one_sided_process(one, test::unit(2, 0), 1.0, 3.0) == doctest::Approx(2.0));
}

TEST_CASE("norm_truncate") {
  const Sample s(Eigen::MatrixXd(Eigen::Matrix2d{{3, 0}, {0, 1}}));
  CHECK(norm_truncate(s, 10.0).rows() == s.rows());
  CHECK(norm_truncate(s, 2.0).rows() == Eigen::Matrix2d{{0, 0}, {0, 1}});
  CHECK(truncation_radius(16, 1.0, 1.0) == doctest::Approx(2.0));
  CHECK(truncation_radius(16, 4.0, 4.0) == doctest::Approx(4.0));
}
