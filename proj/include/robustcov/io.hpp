#pragma once

// Plain CSV for matrices, samples and discrete distributions.
//
// Numbers are comma-separated, one row per line. A first line containing a
// non-numeric field is a header and is skipped; blank lines and lines starting
// with '#' are ignored.

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "robustcov/core.hpp"
#include "robustcov/robust_scalar.hpp"

namespace robustcov {

Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

Sample read_sample_csv(const std::string& path);

/// Two columns: value, probability.
DiscreteDistribution read_atoms_csv(const std::string& path);

/// %.17g, so values round-trip exactly. An optional header names the columns.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});

std::string format_number(double v);

}  // namespace robustcov
