#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "robustcov/core.hpp"
#include "robustcov/rng.hpp"

namespace robustcov::test {

inline Eigen::MatrixXd random_symmetric(Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = u(rng);
  }
  return m;
}

inline Sample gaussian_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  return Sample(standard_normal(n, d, rng));
}

inline Eigen::VectorXd unit(Eigen::Index d, Eigen::Index i) { return Eigen::VectorXd::Unit(d, i); }

}  // namespace robustcov::test
