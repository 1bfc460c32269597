#include "robustcov/robust_scalar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robustcov/log.hpp"

namespace robustcov {
namespace {

// Probability comparisons tolerate accumulated rounding in atom weights.
constexpr double kProbTol = 1e-12;

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidInput("distribution needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.value) || !std::isfinite(a.prob) || a.prob < 0.0) {
      throw InvalidInput("atoms need finite values and nonnegative probabilities");
    }
    total += a.prob;
  }
  if (std::abs(total - 1.0) > kProbTol) throw InvalidInput("atom probabilities must sum to 1");
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
  for (const auto& a : atoms) {
    if (!atoms_.empty() && atoms_.back().value == a.value) {
      atoms_.back().prob += a.prob;
    } else {
      atoms_.push_back(a);
    }
  }
}

double DiscreteDistribution::mean() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.prob * a.value;
  return m;
}

double DiscreteDistribution::second_moment() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.prob * a.value * a.value;
  return m;
}

double DiscreteDistribution::tail(double m) const {
  double t = 0.0;
  for (const auto& a : atoms_) {
    if (a.value >= m) t += a.prob;
  }
  return t;
}

DiscreteDistribution DiscreteDistribution::scaled(double c) const {
  if (!(c > 0.0)) throw InvalidParameter("scale factor must be positive");
  std::vector<Atom> out = atoms_;
  for (auto& a : out) a.value *= c;
  return DiscreteDistribution(std::move(out));
}

DiscreteDistribution DiscreteDistribution::shifted(double c) const {
  std::vector<Atom> out = atoms_;
  for (auto& a : out) a.value += c;
  return DiscreteDistribution(std::move(out));
}

DiscreteDistribution fourpoint_distribution(double eta, double sigma_sq) {
  if (!(eta > 0.0) || eta > 0.25) throw InvalidParameter("four-point law requires 0 < eta <= 1/4");
  const double big = 1.0 / std::sqrt(eta);
  DiscreteDistribution y1({{-big, eta / 2}, {-1.0, (1 - eta) / 2}, {1.0, (1 - eta) / 2}, {big, eta / 2}});
  if (sigma_sq > 0.0) return y1.scaled(sigma_sq / std::sqrt(2.0 - eta));
  return y1;
}

double fourpoint_lower_bound(double eta, double sigma_sq) {
  if (!(eta > 0.0) || eta > 0.25) throw InvalidParameter("four-point law requires 0 < eta <= 1/4");
  const double base = std::sqrt(eta) / 2 - eta / 2;
  return sigma_sq > 0.0 ? base * sigma_sq / std::sqrt(2.0 - eta) : base;
}

double quantile_Q(const DiscreteDistribution& d, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1)");
  const auto& atoms = d.atoms();
  // Tail probabilities from the top atom down; the sup is the largest atom
  // whose upper tail still carries mass 1 - q.
  double tail = 0.0;
  for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
    tail += it->prob;
    if (tail + kProbTol >= 1.0 - q) return it->value;
  }
  return atoms.front().value;
}

double epsilon_lower_bound(const DiscreteDistribution& d, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidParameter("eta must lie in (0, 1)");
  const DiscreteDistribution centered = d.shifted(-d.mean());
  const double q_low = quantile_Q(centered, eta / 2);
  const double q_high = quantile_Q(centered, 1 - eta / 2);
  double lower = 0.0, upper = 0.0;
  for (const auto& a : centered.atoms()) {
    if (a.value <= q_low) lower += a.prob * (q_low - a.value);
    if (a.value >= q_high) upper += a.prob * (a.value - q_high);
  }
  return std::max(lower, upper);
}

double trimmed_mean(std::span<const double> values, double eps) {
  if (values.size() < 2 || values.size() % 2 != 0) {
    throw InvalidParameter("trimmed mean needs an even number (>= 2) of values");
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw InvalidParameter("trimming fraction must lie in [0, 1)");
  const std::size_t m = values.size() / 2;
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(eps * static_cast<double>(m) - 1e-12)));
  if (2 * k > m) throw InvalidParameter("trimming fraction too large for the sample size");

  std::vector<double> first(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m));
  std::stable_sort(first.begin(), first.end());
  const double lo = first[k - 1];
  const double hi = first[m - k];

  double acc = 0.0;
  for (std::size_t i = m; i < values.size(); ++i) acc += std::clamp(values[i], lo, hi);
  return acc / static_cast<double>(m);
}

double trace_epsilon(double eta, double delta, Eigen::Index n) {
  if (!(delta > 0.0 && delta < 4.0) || n < 1 || !(eta >= 0.0)) {
    throw InvalidParameter("trace epsilon needs eta >= 0, 0 < delta < 4, n >= 1");
  }
  return 8.0 * eta + 12.0 * std::log(4.0 / delta) / static_cast<double>(n);
}

double estimate_trace(const Sample& s, double eta, double delta) {
  if (s.size() % 2 != 0) throw InvalidParameter("trace estimation needs an even sample size");
  const Eigen::VectorXd sq = s.rows().rowwise().squaredNorm();
  const Eigen::Index m = s.size() / 2;
  double eps = trace_epsilon(eta, delta, m);
  // Beyond m/2 trimmed points per side the window is empty; trim to the median pair instead.
  const double eps_max = static_cast<double>(m / 2) / static_cast<double>(m);
  if (eps > eps_max) {
    warn("trace: trimming fraction exceeds 1/2 and is clamped; the guarantee does not apply");
    eps = eps_max;
  }
  return std::max(0.0, trimmed_mean(std::span<const double>(sq.data(), static_cast<std::size_t>(sq.size())), eps));
}

}  // namespace robustcov
