#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "robustcov/cov_p4.hpp"
#include "robustcov/cov_pgt4.hpp"
#include "robustcov/diagnostics.hpp"
#include "robustcov/io.hpp"
#include "robustcov/log.hpp"
#include "robustcov/plot.hpp"
#include "robustcov/rng.hpp"
#include "robustcov/robust_scalar.hpp"
#include "robustcov/simulation.hpp"

namespace robustcov::cli {
namespace {

struct EstimateArgs {
  std::string input;
  std::string output;
  bool p4 = false;
  bool pgt4 = false;
  double eta = 0.0;
  double delta = 0.1;
  double kappa = 1.5;
  double p = 8.0;
  double c_gamma = 2.0;
  std::uint64_t seed = 0;
  std::string oracle_scale;
  bool center = false;
  double jitter = 0.0;
  std::optional<double> lambda_override;
};

struct SimulateArgs {
  std::vector<std::string> distributions{"gaussian"};
  std::vector<std::string> adversaries{"none"};
  std::vector<long> n_values{200};
  std::vector<double> eta_values{0.0};
  std::vector<std::string> estimators{"sample_cov", "p4"};
  double delta = 0.1;
  int trials = 10;
  std::uint64_t seed = 0;
  long dim = 5;
  std::string sigma;
  bool oracle_kappa = true;
  double kappa4 = 1.5;
  double c_gamma = 2.0;
  bool p4_oracle_scale = false;
  bool pgt4_oracle_scale = true;
  std::string p_rule = "fixed";
  double p = 8.0;
  double p_offset = 4.0;
  double eps_eta_factor = 20.0;
  double eps_conf_factor = 560.0;
  bool timing = false;
  std::string output;
  std::string plot;
};

struct DiagnoseArgs {
  std::string input;
  long k_max = 3;
  std::vector<double> lambdas;
  std::string reference;
  std::uint64_t seed = 0;
  std::string prefix;
};

struct LowerboundArgs {
  bool fourpoint = false;
  std::string atoms;
  std::vector<double> etas;
  double sigma_sq = 0.0;
};

std::string fmt(double v) { return format_number(v); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_to(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw InvalidInput("cannot write '" + path + "'");
  body(file);
}

std::string effective_rank_text(const Eigen::MatrixXd& m) {
  try {
    return fmt(effective_rank(m));
  } catch (const UndefinedScale&) {
    return "undefined";
  }
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.p4 && a.pgt4) throw InvalidParameter("choose one of --p4 and --pgt4");
  Eigen::MatrixXd rows = read_matrix_csv(a.input);
  if (a.center) rows.rowwise() -= rows.colwise().mean();
  if (a.jitter < 0.0) throw InvalidParameter("jitter must be nonnegative");
  if (a.jitter > 0.0) {
    Rng rng(derive_seed(a.seed, 0x6a));
    rows += a.jitter * standard_normal(rows.rows(), rows.cols(), rng);
  }
  Sample s(std::move(rows));
  std::optional<ScaleInfo> scale;
  if (!a.oracle_scale.empty()) {
    const Eigen::MatrixXd sigma = read_matrix_csv(a.oracle_scale);
    if (sigma.rows() != s.dim() || sigma.cols() != s.dim()) throw InvalidInput("oracle covariance has the wrong size");
    scale = ScaleInfo::from_covariance(sigma);
  }

  std::ostringstream summary;
  Eigen::MatrixXd estimate;
  if (!a.pgt4) {
    P4Config cfg;
    cfg.eta = a.eta;
    cfg.delta = a.delta;
    cfg.kappa4 = a.kappa;
    cfg.c_gamma = a.c_gamma;
    cfg.seed = a.seed;
    cfg.scale = scale;
    cfg.lambda_override = a.lambda_override;
    const P4Result r = estimate_cov_p4_detailed(s, cfg);
    estimate = r.sigma;
    summary << "estimator=p4 split=" << r.split_size << " lambda=" << fmt(r.lambda)
            << " residual=" << fmt(r.fit.residual)
            << " radius=" << (r.radius ? fmt(*r.radius) : std::string("unchecked"))
            << " feasible=" << (r.degenerate ? "false" : (r.feasible ? "true" : "false"))
            << " converged=" << (r.fit.converged ? "true" : "false");
  } else {
    Pgt4Config cfg;
    cfg.eta = a.eta;
    cfg.delta = a.delta;
    cfg.p = a.p;
    cfg.kappa_p = a.kappa;
    cfg.seed = a.seed;
    Pgt4Result r;
    if (scale) {
      cfg.scale = scale;
      const Eigen::Index even = s.size() - s.size() % 2;
      if (even < 2) throw InvalidInput("p > 4 estimation needs at least two rows");
      r = estimate_cov_pgt4_detailed(s.slice(0, even), cfg);
    } else {
      r = estimate_cov_pgt4_plugin(s, cfg, a.kappa);
    }
    estimate = r.sigma;
    const double residual = r.levels.empty() ? 0.0 : r.levels.back().fit.residual;
    summary << "estimator=pgt4 half=" << r.half_size << " eps=" << fmt(r.eps)
            << " Q=" << (r.chosen_Q ? fmt(*r.chosen_Q) : std::string("none")) << " residual=" << fmt(residual)
            << " feasible=" << (r.feasible ? "true" : "false") << " top_of_grid=" << (r.top_of_grid ? "true" : "false");
  }
  summary << " effective_rank=" << effective_rank_text(estimate);
  write_to(a.output, out, [&](std::ostream& o) { write_matrix_csv(o, estimate); });
  err << summary.str() << '\n';
  return kOk;
}

ExperimentConfig experiment_config(const SimulateArgs& a) {
  ExperimentConfig cfg;
  Eigen::MatrixXd sigma;
  if (!a.sigma.empty()) {
    sigma = read_matrix_csv(a.sigma);
  } else {
    if (a.dim < 1) throw InvalidInput("dim must be positive");
    sigma = Eigen::MatrixXd::Identity(a.dim, a.dim);
  }
  for (const auto& d : a.distributions) cfg.distributions.push_back(parse_distribution(d, sigma));
  for (const auto& adv : a.adversaries) cfg.adversaries.push_back(parse_adversary(adv));
  for (long n : a.n_values) cfg.n_values.push_back(n);
  cfg.eta_values = a.eta_values;
  cfg.estimators.clear();
  for (const auto& e : a.estimators) cfg.estimators.push_back(parse_estimator(e));
  cfg.delta = a.delta;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.oracle_kappa = a.oracle_kappa;
  cfg.kappa4 = a.kappa4;
  cfg.c_gamma = a.c_gamma;
  cfg.p4_oracle_scale = a.p4_oracle_scale;
  cfg.pgt4_oracle_scale = a.pgt4_oracle_scale;
  if (a.p_rule == "fixed") {
    cfg.p_rule = PRule::fixed;
  } else if (a.p_rule == "log_inv_eta") {
    cfg.p_rule = PRule::log_inv_eta;
  } else {
    throw InvalidInput("p_rule must be fixed or log_inv_eta");
  }
  cfg.p = a.p;
  cfg.p_offset = a.p_offset;
  cfg.eps_eta_factor = a.eps_eta_factor;
  cfg.eps_conf_factor = a.eps_conf_factor;
  cfg.timing = a.timing;
  return cfg;
}

std::optional<double> error_of(const ExperimentRecord& r, Estimator e) {
  switch (e) {
    case Estimator::sample_cov: return r.err_sample_cov;
    case Estimator::p4: return r.err_p4;
    case Estimator::pgt4: return r.err_pgt4;
    case Estimator::trace: return r.err_trace;
    case Estimator::opnorm: return r.err_opnorm;
  }
  return std::nullopt;
}

// Median error per estimator against `axis`, over the records kept by `keep`.
std::vector<Series> median_curves(const ExperimentConfig& cfg, const std::vector<ExperimentRecord>& records,
                                  const std::function<bool(const ExperimentRecord&)>& keep,
                                  const std::function<double(const ExperimentRecord&)>& axis) {
  std::vector<Series> out;
  for (Estimator e : cfg.estimators) {
    std::map<double, std::vector<double>> groups;
    for (const auto& r : records) {
      const auto v = error_of(r, e);
      if (r.status == "ok" && v && keep(r)) groups[axis(r)].push_back(*v);
    }
    Series s{estimator_name(e), {}, {}};
    for (const auto& [x, ys] : groups) {
      s.x.push_back(x);
      s.y.push_back(median(ys));
    }
    out.push_back(std::move(s));
  }
  return out;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = experiment_config(a);
  const auto records = run_experiment(cfg);
  write_to(a.output, out, [&](std::ostream& o) { write_records_csv(o, records, cfg.timing); });

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.status == "ok" ? 0 : 1;
  if (failed > 0) err << "warning: " << failed << " of " << records.size() << " cells failed\n";

  if (!a.plot.empty()) {
    const double eta_min = *std::min_element(cfg.eta_values.begin(), cfg.eta_values.end());
    const Eigen::Index n_max = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
    const auto vs_n = median_curves(
        cfg, records, [&](const ExperimentRecord& r) { return r.eta == eta_min; },
        [](const ExperimentRecord& r) { return static_cast<double>(r.n); });
    const auto vs_eta = median_curves(
        cfg, records, [&](const ExperimentRecord& r) { return r.n == n_max && r.eta > 0.0; },
        [](const ExperimentRecord& r) { return r.eta; });
    write_to(a.plot + "_vs_n.svg", out, [&](std::ostream& o) {
      write_loglog_svg(o, "median error vs N (eta = " + fmt(eta_min) + ")", "N", "median error", vs_n);
    });
    write_to(a.plot + "_vs_eta.svg", out, [&](std::ostream& o) {
      write_loglog_svg(o, "median error vs eta (N = " + std::to_string(n_max) + ")", "eta", "median error", vs_eta);
    });
  }
  return kOk;
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  const Sample s = read_sample_csv(a.input);
  if (a.k_max < 1) throw InvalidParameter("k-max must be positive");
  const Eigen::Index k_max = std::min<Eigen::Index>(a.k_max, s.size());

  std::ostringstream f_table;
  f_table << "k,f_brute,f_greedy\n";
  bool brute_ok = true;
  for (Eigen::Index k = 1; k <= k_max; ++k) {
    std::string brute;
    if (brute_ok) {
      try {
        brute = fmt(f_stat_bruteforce(s, k));
      } catch (const BudgetExceeded&) {
        brute_ok = false;
        err << "warning: exhaustive f statistic skipped from k = " << k << " (too many subsets)\n";
      }
    }
    f_table << k << ',' << brute << ',' << fmt(f_stat_greedy(s, k)) << '\n';
  }

  const Eigen::MatrixXd second = sample_covariance(s);
  const Eigen::MatrixXd ref = a.reference.empty() ? second : read_matrix_csv(a.reference);
  if (ref.rows() != s.dim() || ref.cols() != s.dim()) throw InvalidInput("reference matrix has the wrong size");
  std::vector<double> lambdas = a.lambdas;
  if (lambdas.empty()) {
    const double op = op_norm(second);
    if (!(op > 0.0)) throw DegenerateSample("zero sample has no natural truncation scale; pass --lambda");
    lambdas = {0.1 / op, 1.0 / op, 10.0 / op};
  }
  const DirectionSet ds = seed_directions(s, ref, DirectionSearchOptions{}.resolved_budget(s.dim()), a.seed);
  std::ostringstream d_table;
  d_table << "lambda,peaky,spread,total\n";
  for (double lambda : lambdas) {
    const Decomposition dec = peaky_spread_decompose(s, lambda, ref, ds);
    d_table << fmt(lambda) << ',' << fmt(dec.peaky) << ',' << fmt(dec.spread) << ',' << fmt(dec.total) << '\n';
  }

  if (a.prefix.empty()) {
    out << f_table.str() << '\n' << d_table.str();
  } else {
    write_to(a.prefix + "_f.csv", out, [&](std::ostream& o) { o << f_table.str(); });
    write_to(a.prefix + "_decomposition.csv", out, [&](std::ostream& o) { o << d_table.str(); });
  }
  return kOk;
}

int cmd_lowerbound(const LowerboundArgs& a, std::ostream& out) {
  if (a.fourpoint && !a.atoms.empty()) throw InvalidParameter("choose one of --fourpoint and --atoms");
  if (a.etas.empty()) throw InvalidParameter("at least one --eta is required");
  std::optional<DiscreteDistribution> atoms;
  if (!a.atoms.empty()) atoms = read_atoms_csv(a.atoms);
  // Validate the whole list before printing anything.
  for (double eta : a.etas) {
    if (!atoms && (!(eta > 0.0) || eta > 0.25)) {
      throw InvalidParameter("the four-point law needs 0 < eta <= 1/4 (got " + fmt(eta) + ")");
    }
    if (atoms && !(eta > 0.0 && eta < 1.0)) throw InvalidParameter("eta must lie in (0, 1)");
  }
  out << "eta,epsilon,reference,rel_error\n";
  for (double eta : a.etas) {
    if (atoms) {
      out << fmt(eta) << ',' << fmt(epsilon_lower_bound(*atoms, eta)) << ",,\n";
      continue;
    }
    const double eps = epsilon_lower_bound(fourpoint_distribution(eta, a.sigma_sq), eta);
    const double ref = fourpoint_lower_bound(eta, a.sigma_sq);
    out << fmt(eta) << ',' << fmt(eps) << ',' << fmt(ref) << ',' << fmt(std::abs(eps - ref) / std::abs(ref)) << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Robust covariance estimation under heavy tails and adversarial contamination", "robustcov");
  app.set_config("--config", "", "TOML/INI file; keys live in a section named after the subcommand");
  app.require_subcommand(1);

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate a covariance matrix from a CSV sample");
  est->fallthrough();
  est->add_option("input", ea.input, "Sample CSV (one row per observation)")->required();
  est->add_option("-o,--output", ea.output, "Output CSV (default stdout)");
  est->add_flag("--p4", ea.p4, "p = 4 estimator (default)");
  est->add_flag("--pgt4", ea.pgt4, "p > 4 estimator");
  est->add_option("--eta", ea.eta, "Contamination level")->capture_default_str();
  est->add_option("--delta", ea.delta, "Confidence level")->capture_default_str();
  est->add_option("--kappa", ea.kappa, "Norm-equivalence constant (kappa(4) or kappa(p))")->capture_default_str();
  est->add_option("--p", ea.p, "Moment order for --pgt4")->capture_default_str();
  est->add_option("--c-gamma", ea.c_gamma, "Radius constant of the p = 4 band")->capture_default_str();
  est->add_option("--seed", ea.seed, "Seed of the direction search and jitter")->capture_default_str();
  est->add_option("--oracle-scale", ea.oracle_scale, "Covariance CSV supplying trace and operator norm");
  est->add_flag("--center", ea.center, "Subtract column means first");
  est->add_option("--jitter", ea.jitter, "Add seeded Gaussian noise of this standard deviation");
  est->add_option("--lambda-override", ea.lambda_override, "Fixed truncation level for --p4");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo sweep and write one CSV row per cell");
  sim->fallthrough();
  sim->add_option("--distributions", sa.distributions, "gaussian | custom_psd | t:<nu> | fourpoint:<eta>[:<s2>] | mixture:<eta|cell>");
  sim->add_option("--adversaries", sa.adversaries, "none | fixed_outlier:<m>[:trace] | variance_inflation:<f> | quantile_replace");
  sim->add_option("--n", sa.n_values, "Rows per split (each cell draws 3N)");
  sim->add_option("--eta", sa.eta_values, "Contamination levels");
  sim->add_option("--estimators", sa.estimators, "sample_cov p4 pgt4 trace opnorm");
  sim->add_option("--delta", sa.delta)->capture_default_str();
  sim->add_option("--trials", sa.trials)->capture_default_str();
  sim->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
  sim->add_option("--dim", sa.dim, "Dimension with identity covariance")->capture_default_str();
  sim->add_option("--sigma", sa.sigma, "Covariance CSV (overrides --dim)");
  sim->add_option("--oracle-kappa", sa.oracle_kappa, "Use each law's kappa")->capture_default_str();
  sim->add_option("--kappa4", sa.kappa4, "kappa(4) when --oracle-kappa is false")->capture_default_str();
  sim->add_option("--c-gamma", sa.c_gamma)->capture_default_str();
  sim->add_option("--p4-oracle-scale", sa.p4_oracle_scale)->capture_default_str();
  sim->add_option("--pgt4-oracle-scale", sa.pgt4_oracle_scale)->capture_default_str();
  sim->add_option("--p-rule", sa.p_rule, "fixed | log_inv_eta")->capture_default_str();
  sim->add_option("--p", sa.p)->capture_default_str();
  sim->add_option("--p-offset", sa.p_offset)->capture_default_str();
  sim->add_option("--eps-eta-factor", sa.eps_eta_factor)->capture_default_str();
  sim->add_option("--eps-conf-factor", sa.eps_conf_factor)->capture_default_str();
  sim->add_flag("--timing", sa.timing, "Append wall_seconds (breaks byte determinism)");
  sim->add_option("-o,--output", sa.output, "Output CSV (default stdout)");
  sim->add_option("--plot", sa.plot, "Write <prefix>_vs_n.svg and <prefix>_vs_eta.svg");

  DiagnoseArgs da;
  auto* dia = app.add_subcommand("diagnose", "Sparse supremum and peaky/spread tables for a CSV sample");
  dia->fallthrough();
  dia->add_option("input", da.input)->required();
  dia->add_option("--k-max", da.k_max)->capture_default_str();
  dia->add_option("--lambda", da.lambdas, "Truncation levels (default 0.1, 1, 10 over the operator norm)");
  dia->add_option("--reference", da.reference, "Reference matrix CSV (default the sample second moment)");
  dia->add_option("--seed", da.seed)->capture_default_str();
  dia->add_option("--prefix", da.prefix, "Write <prefix>_f.csv and <prefix>_decomposition.csv");

  LowerboundArgs la;
  auto* low = app.add_subcommand("lowerbound", "Tail first moment of a discrete law around its quantiles");
  low->fallthrough();
  low->add_flag("--fourpoint", la.fourpoint, "Built-in four-point law (default)");
  low->add_option("--atoms", la.atoms, "CSV of value,probability");
  low->add_option("--eta", la.etas, "Contamination levels")->required();
  low->add_option("--sigma-sq", la.sigma_sq, "Scale the four-point law by sigma^2 / sqrt(2 - eta)");

  std::vector<std::string> argv_store{"robustcov"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (est->parsed()) return cmd_estimate(ea, out, err);
    if (sim->parsed()) return cmd_simulate(sa, out, err);
    if (dia->parsed()) return cmd_diagnose(da, out, err);
    if (low->parsed()) return cmd_lowerbound(la, out);
  } catch (const DegenerateSample& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const UndefinedScale& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace robustcov::cli
