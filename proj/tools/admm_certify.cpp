// admm-certify: rate certificates, bound sweeps and ADMM experiments.
//
// Exit codes: 0 success, 1 domain failure, 2 usage error.

#include <admmcert/admmcert.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace admmcert;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ordered_json real_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json real_or_null(const std::optional<double>& v) {
  return v ? real_or_null(*v) : ordered_json(nullptr);
}

ordered_json certificate_json(const RateCertificate& c) {
  ordered_json j;
  j["p11"] = c.P(0, 0);
  j["p12"] = c.P(0, 1);
  j["p22"] = c.P(1, 1);
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["tau"] = c.tau;
  return j;
}

ConditioningSpec checked_spec(double kappa, double epsilon, double alpha) {
  const ConditioningSpec spec{kappa, epsilon, alpha};
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

std::optional<double> analytic_rate(const ConditioningSpec& spec) {
  if (!(spec.alpha > 0.0 && spec.alpha < 2.0)) return std::nullopt;
  return analytic_certificate(spec).tau;
}

/// Writes to <dir>/<name>, or stdout when dir is empty.
void emit(const std::string& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainFailure("cannot open " + path.string());
  os << text;
  std::cerr << "wrote " << path.string() << '\n';
}

// ---------------------------------------------------------------- certify

struct CertifyArgs {
  double kappa = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::optional<double> tau;
  double tol = 1e-4;
};

int cmd_certify(const CertifyArgs& a) {
  const ConditioningSpec spec = checked_spec(a.kappa, a.epsilon, a.alpha);
  ordered_json out;
  out["kappa"] = spec.kappa;
  out["epsilon"] = spec.epsilon;
  out["alpha"] = spec.alpha;

  if (a.tau) {
    if (!(*a.tau > 0.0 && *a.tau < 1.0)) throw UsageError("--tau must lie in (0, 1)");
    const FeasibilityReport rep = find_certificate(spec, *a.tau);
    out["tau"] = *a.tau;
    out["status"] = to_string(rep.status);
    out["residual"] = real_or_null(rep.residual);
    out["lower_bound"] = real_or_null(rep.lower_bound);
    out["solver_iterations"] = rep.solver_iterations;
    out["certificate"] = rep.certificate ? certificate_json(*rep.certificate) : ordered_json(nullptr);
    std::cout << out.dump(2) << '\n';
    if (!rep.certified()) {
      std::cerr << "admm-certify: no certificate found at tau = " << *a.tau << '\n';
      return kExitDomain;
    }
    return kExitOk;
  }

  if (!(a.tol > 0.0)) throw UsageError("--tol must be positive");
  try {
    const MinRateResult res = min_rate(spec, a.tol);
    out["status"] = "certified";
    out["tau_star"] = res.tau_star;
    out["probes"] = res.probes;
    out["tau_thm3"] = real_or_null(analytic_rate(spec));
    out["tau_lower"] = lower_bound_rate(spec);
    out["certificate"] = certificate_json(res.certificate);
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  } catch (const UncertifiedError& e) {
    out["status"] = "not-found";
    out["tau_star"] = nullptr;
    std::cout << out.dump(2) << '\n';
    std::cerr << "admm-certify: " << e.what() << '\n';
    return kExitDomain;
  }
}

// ------------------------------------------------------------- rate-curve

struct RateCurveArgs {
  std::vector<double> epsilons;
  double alpha = 1.5;
  double kappa_min = 10.0;
  double kappa_max = 1e4;
  int points = 20;
  std::string out;
};

int cmd_rate_curve(const RateCurveArgs& a) {
  if (a.epsilons.empty()) throw UsageError("--epsilon-list is empty");
  if (a.points < 1) throw UsageError("--points must be >= 1");
  if (!(a.kappa_min >= 1.0 && a.kappa_max >= a.kappa_min)) {
    throw UsageError("need 1 <= --kappa-min <= --kappa-max");
  }
  for (double e : a.epsilons) checked_spec(a.kappa_min, e, a.alpha);
  const std::vector<double> kappas = geomspace(a.kappa_min, a.kappa_max, a.points);

  struct Row {
    double kappa, epsilon;
    std::optional<double> tau_star, tau_thm3;
    double tau_lower;
  };
  std::vector<Row> rows;
  for (double e : a.epsilons) {
    for (double k : kappas) rows.push_back({k, e, std::nullopt, std::nullopt, 0.0});
  }
  parallel_for(rows.size(), [&](std::size_t i) {
    Row& row = rows[i];
    const ConditioningSpec spec{row.kappa, row.epsilon, a.alpha};
    try {
      row.tau_star = min_rate(spec).tau_star;
    } catch (const UncertifiedError&) {
      row.tau_star.reset();
    }
    row.tau_thm3 = analytic_rate(spec);
    row.tau_lower = worst_case_construction(spec, 1.0, spec.kappa).achieved_rate;
  });

  std::ostringstream os;
  os << "kappa,epsilon,tau_star,iters_proxy,tau_thm3,tau_lower\n";
  for (const Row& r : rows) {
    std::optional<double> proxy;
    if (r.tau_star && *r.tau_star > 0.0) proxy = -1.0 / std::log(*r.tau_star);
    os << format_real(r.kappa) << ',' << format_real(r.epsilon) << ',' << format_real(r.tau_star)
       << ',' << format_real(proxy) << ',' << format_real(r.tau_thm3) << ','
       << format_real(r.tau_lower) << '\n';
  }
  emit(a.out, "rate_curve.csv", os.str());
  return kExitOk;
}

// -------------------------------------------------------------- max-alpha

struct MaxAlphaArgs {
  double epsilon = 0.0;
  std::vector<double> kappas;
  double alpha_hi = 10.0;
  double tol = 1e-3;
  std::string out;
};

int cmd_max_alpha(const MaxAlphaArgs& a) {
  if (a.kappas.empty()) throw UsageError("--kappa-list is empty");
  for (double k : a.kappas) checked_spec(k, a.epsilon, 1.0);
  if (!(a.alpha_hi > 0.0) || !(a.tol > 0.0)) throw UsageError("--alpha-hi and --tol must be positive");

  std::vector<std::optional<double>> result(a.kappas.size());
  parallel_for(a.kappas.size(), [&](std::size_t i) {
    try {
      result[i] = max_alpha(a.kappas[i], a.epsilon, a.alpha_hi, a.tol);
    } catch (const NoCertifiableAlphaError&) {
      result[i].reset();
    }
  });

  std::ostringstream os;
  os << "kappa,alpha_max\n";
  for (std::size_t i = 0; i < a.kappas.size(); ++i) {
    os << format_real(a.kappas[i]) << ',' << format_real(result[i]) << '\n';
  }
  emit(a.out, "max_alpha.csv", os.str());
  return kExitOk;
}

// ------------------------------------------------------------------ lasso

struct LassoArgs {
  std::string scale = "desk";
  std::uint64_t seed = 1;
  std::vector<double> alphas;
  std::vector<double> rhos;
  double target = 1e-6;
  long budget = 1000;
  std::string out = ".";
};

ordered_json grid_point_json(const std::optional<GridResult>& g) {
  if (!g) return nullptr;
  ordered_json j;
  j["alpha"] = g->alpha;
  j["rho"] = g->rho;
  j["certified_tau"] = real_or_null(g->certified_tau);
  j["iterations"] = g->iterations_to_tol ? ordered_json(*g->iterations_to_tol) : ordered_json(nullptr);
  j["final_error"] = real_or_null(g->final_error);
  return j;
}

int cmd_lasso(const LassoArgs& a) {
  if (!(a.target > 0.0)) throw UsageError("--target must be positive");
  if (a.budget < 0) throw UsageError("--budget must be >= 0");
  const LassoProfile prof = lasso_profile(a.scale);
  const std::vector<double> alphas = a.alphas.empty() ? prof.alphas() : a.alphas;
  const std::vector<double> rhos = a.rhos.empty() ? prof.rhos() : a.rhos;
  for (double x : alphas) {
    if (!(x > 0.0 && std::isfinite(x))) throw UsageError("grid alphas must be positive");
  }
  for (double x : rhos) {
    if (!(x > 0.0 && std::isfinite(x))) throw UsageError("grid rhos must be positive");
  }

  const LassoInstance inst = prof.instance(a.seed);
  const LassoConditioning cond = conditioning(inst);
  const Vector z_star = reference_solution(inst);
  const std::vector<GridResult> grid = run_grid(inst, z_star, alphas, rhos, a.target, a.budget);

  std::ostringstream csv;
  write_grid_csv(csv, grid);
  emit(a.out, "lasso_certified.csv", csv.str());
  emit(a.out, "lasso_iterations.csv", csv.str());

  ordered_json out;
  out["scale"] = a.scale;
  out["seed"] = inst.seed;
  out["m"] = cond.m;
  out["L"] = cond.L;
  out["kappa"] = cond.kappa;
  out["recommended"] = grid_point_json(best_certified(grid));
  out["empirical_best"] = grid_point_json(best_empirical(grid));
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

// -------------------------------------------------------------- quadratic

struct QuadraticArgs {
  double kappa = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::string delta_mode = "auto";
  long max_iters = 1000000;
  std::string trace_out;
};

int cmd_quadratic(const QuadraticArgs& a) {
  const ConditioningSpec spec = checked_spec(a.kappa, a.epsilon, a.alpha);
  const DeltaMode mode = a.delta_mode == "zero" ? DeltaMode::zero
                         : a.delta_mode == "L"  ? DeltaMode::lipschitz
                                                : DeltaMode::automatic;
  const WorstCaseSetup setup = worst_case_setup(spec, mode);
  const QuadraticInstance& inst = setup.instance;

  // Start on the slow eigenvector with u matched to z, so z_k = T^k z_0.
  Vector z = setup.slow_direction;
  Vector u = (inst.delta / inst.rho) * z;
  const double d0 = z.norm();
  std::vector<double> dist{d0};
  std::ostringstream trace;
  trace << "k,dist\n" << 0 << ',' << format_real(d0) << '\n';
  long k = 0;
  while (k < a.max_iters && dist.back() > 1e-9 * d0) {
    const QuadraticIterate next = quadratic_step(inst, z, u);
    z = next.z;
    u = next.u;
    ++k;
    dist.push_back(z.norm());
    trace << k << ',' << format_real(dist.back()) << '\n';
  }
  double empirical;
  if (dist.size() >= 21) {
    empirical = empirical_rate(dist);
  } else {
    // Too few steps for a fit; use the mean contraction instead.
    empirical = k > 0 ? std::pow(dist.back() / d0, 1.0 / static_cast<double>(k)) : 0.0;
  }

  std::optional<double> certified;
  std::string diagnostic;
  try {
    certified = min_rate(spec).tau_star;
  } catch (const UncertifiedError& e) {
    diagnostic = e.what();
  }

  const double lower = lower_bound_rate(spec);
  const bool lower_applies = mode == DeltaMode::automatic;
  constexpr double kSlack = 2e-3;
  bool ordering_ok = certified && empirical <= *certified + kSlack;
  if (lower_applies) ordering_ok = ordering_ok && lower <= empirical + kSlack;

  ordered_json out;
  out["kappa"] = spec.kappa;
  out["epsilon"] = spec.epsilon;
  out["alpha"] = spec.alpha;
  out["delta_mode"] = a.delta_mode;
  out["delta"] = inst.delta;
  out["rho"] = inst.rho;
  out["predicted_rate"] = std::abs(setup.bound.achieved_rate);
  out["empirical_rate"] = empirical;
  out["certified_tau"] = real_or_null(certified);
  out["lower_bound"] = lower;
  out["lower_bound_applies"] = lower_applies;
  out["iterations"] = k;
  out["ordering_ok"] = ordering_ok;
  std::cout << out.dump(2) << '\n';

  if (!a.trace_out.empty()) {
    std::ofstream os(a.trace_out, std::ios::binary);
    if (!os) throw DomainFailure("cannot open " + a.trace_out);
    os << trace.str();
  }
  if (!certified) {
    std::cerr << "admm-certify: " << diagnostic << '\n';
    return kExitDomain;
  }
  if (!ordering_ok) {
    std::cerr << "admm-certify: rate ordering violated (lower <= empirical <= certified)\n";
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence-rate certificates for over-relaxed ADMM"};
  app.require_subcommand(1);

  CertifyArgs certify;
  auto* c = app.add_subcommand("certify", "Minimal certified rate, or feasibility at a given tau");
  c->add_option("--kappa", certify.kappa, "Condition number (>= 1)")->required();
  c->add_option("--epsilon", certify.epsilon, "Step-size exponent, rho0 = kappa^epsilon")->required();
  c->add_option("--alpha", certify.alpha, "Over-relaxation parameter (> 0)")->required();
  c->add_option("--tau", certify.tau, "Check feasibility at this rate instead of bisecting");
  c->add_option("--tol", certify.tol, "Relative tolerance on 1 - tau*")->capture_default_str();

  RateCurveArgs curve;
  auto* rc = app.add_subcommand("rate-curve", "Certified rate against kappa (CSV)");
  rc->add_option("--epsilon-list", curve.epsilons, "Comma-separated epsilons")
      ->required()
      ->delimiter(',');
  rc->add_option("--alpha", curve.alpha)->capture_default_str();
  rc->add_option("--kappa-min", curve.kappa_min)->capture_default_str();
  rc->add_option("--kappa-max", curve.kappa_max)->capture_default_str();
  rc->add_option("--points", curve.points, "Log-spaced kappa values")->capture_default_str();
  rc->add_option("--out", curve.out, "Output directory (default: stdout)");

  MaxAlphaArgs malpha;
  auto* ma = app.add_subcommand("max-alpha", "Largest certifiable alpha per kappa (CSV)");
  ma->add_option("--epsilon", malpha.epsilon)->required();
  ma->add_option("--kappa-list", malpha.kappas, "Comma-separated kappas")->required()->delimiter(',');
  ma->add_option("--alpha-hi", malpha.alpha_hi)->capture_default_str();
  ma->add_option("--tol", malpha.tol)->capture_default_str();
  ma->add_option("--out", malpha.out, "Output directory (default: stdout)");

  LassoArgs lasso;
  auto* la = app.add_subcommand("lasso", "Distributed Lasso parameter grid (two CSVs)");
  la->add_option("--scale", lasso.scale)
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  la->add_option("--seed", lasso.seed)->capture_default_str();
  la->add_option("--grid-alphas", lasso.alphas, "Comma-separated alphas")->delimiter(',');
  la->add_option("--grid-rhos", lasso.rhos, "Comma-separated rhos")->delimiter(',');
  la->add_option("--target", lasso.target, "Distance to the reference solution")->capture_default_str();
  la->add_option("--budget", lasso.budget, "Iteration budget per grid point")->capture_default_str();
  la->add_option("--out", lasso.out, "Output directory")->capture_default_str();

  QuadraticArgs quad;
  auto* qu = app.add_subcommand("quadratic", "Worst-case quadratic instance run");
  qu->add_option("--kappa", quad.kappa)->required();
  qu->add_option("--epsilon", quad.epsilon)->required();
  qu->add_option("--alpha", quad.alpha)->required();
  qu->add_option("--delta-mode", quad.delta_mode)
      ->check(CLI::IsMember({"auto", "zero", "L"}))
      ->capture_default_str();
  qu->add_option("--max-iters", quad.max_iters)->capture_default_str();
  qu->add_option("--trace-out", quad.trace_out, "Write k,dist CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c) return cmd_certify(certify);
    if (*rc) return cmd_rate_curve(curve);
    if (*ma) return cmd_max_alpha(malpha);
    if (*la) return cmd_lasso(lasso);
    if (*qu) return cmd_quadratic(quad);
  } catch (const UsageError& e) {
    std::cerr << "admm-certify: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "admm-certify: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
