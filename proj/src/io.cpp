#include "robustcov/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "robustcov/errors.hpp"

namespace robustcov {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_field(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  const char* begin = t.data() + (t[0] == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return in;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto parts = fields(t);
    std::vector<double> row(parts.size());
    bool numeric = true;
    for (std::size_t j = 0; j < parts.size(); ++j) numeric = numeric && parse_field(parts[j], row[j]);
    if (!numeric) {
      if (first_content) {
        first_content = false;
        continue;
      }
      throw InvalidInput("line " + std::to_string(line_no) + ": non-numeric field");
    }
    first_content = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidInput("line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                         " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("no numeric rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return read_matrix_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

Sample read_sample_csv(const std::string& path) { return Sample(read_matrix_csv(path)); }

DiscreteDistribution read_atoms_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() != 2) throw InvalidInput(path + ": atoms need two columns (value, probability)");
  std::vector<Atom> atoms;
  for (Eigen::Index i = 0; i < m.rows(); ++i) atoms.push_back({m(i, 0), m(i, 1)});
  return DiscreteDistribution(std::move(atoms));
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  if (!header.empty()) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols()) throw InvalidParameter("header size mismatch");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_matrix_csv(out, m, header);
}

}  // namespace robustcov
