#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

#include "cli.hpp"
#include "darkspin/cumulant.hpp"
#include "darkspin/errors.hpp"
#include "darkspin/lindblad.hpp"
#include "darkspin/metrology.hpp"
#include "darkspin/mps.hpp"
#include "darkspin/steady_state.hpp"

namespace darkspin::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = n == 1 ? a : a + (b - a) * k / (n - 1);
  return v;
}

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (double& x : v) x = std::exp(x);
  return v;
}

struct Fit {
  double slope, intercept;
};

// least squares of log y on log x
Fit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

ChainModel pair_model(HalfInt S, double delta, double omega, double gamma = 1.0) {
  ChainModel m;
  m.S = S;
  m.deltas = {delta / 2, -delta / 2};
  m.omega = omega;
  m.gamma_collective = gamma;
  return m;
}

std::vector<double> staircase(int L, double de, double db) {
  std::vector<double> d(L);
  d[0] = de / 2;
  d[L - 1] = -de / 2;
  for (int k = 1; k < L - 1; ++k) d[k] = (k % 2 ? db : -db) / 2;
  return d;
}

// ---------------------------------------------------------------------------

JobOutput pair_spectrum(Params& p, JobContext&) {
  const HalfInt S = p.spin("S", HalfInt(50));
  const double chi = p.number("chi_over_omega", 0.0, 0.0, 1e6);
  // delta/omega = S^-p for each exponent p
  const std::vector<double> powers = p.numbers("detuning_exponents", {1.0, 0.5, 0.0}, -2, 4);
  const std::vector<HalfInt> sweep = p.spins("qfi_spins", {10, 20, 30, 50, 70, 100, 150, 200});
  p.finish();

  JobOutput out;
  Table spec{"spectrum", {"S", "detuning_exponent", "delta_over_omega", "J", "weight"}, {}};
  for (double q : powers) {
    const double r = std::pow(S.value(), -q);
    const PairState ps = pair_coeffs(S, r, chi, 1.0);
    for (std::size_t J = 0; J < ps.c.size(); ++J)
      spec.add({S.value(), q, r, static_cast<long long>(J), std::norm(ps.c[J])});
  }
  Table qfi{"qfi", {"detuning_exponent", "S", "delta_over_omega", "qfi", "qfi_max", "xi2", "spin_length"}, {}};
  Table fit{"qfi_fit", {"detuning_exponent", "exponent", "log_prefactor", "expected"}, {}};
  for (double q : powers) {
    std::vector<double> xs, ys;
    for (HalfInt s : sweep) {
      const double r = std::pow(s.value(), -q);
      const PairState ps = pair_coeffs(s, r, chi, 1.0);
      const double F = qfi_pair(ps);
      const Wineland w = wineland(ps);
      qfi.add({q, s.value(), r, F, 16 * s.value() * (s.value() + 1) / 3, w.xi2, w.spin_length});
      xs.push_back(s.value());
      ys.push_back(F);
    }
    const Fit f = loglog_fit(xs, ys);
    fit.add({q, f.slope, f.intercept, 1 + q});
    if (chi == 0 && sweep.size() >= 2)
      out.checks.push_back({fmt::format("QFI exponent at delta/omega = S^-{}", q), f.slope, 0.9 + q, 1.1 + q});
  }
  out.tables = {spec, qfi, fit};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput squeeze_tradeoff(Params& p, JobContext& ctx) {
  const HalfInt S = p.spin("S", HalfInt(1), half(1), HalfInt(10));
  const std::vector<double> ratios = p.numbers("delta_over_omega", {0.25, 0.5, 1.0}, 1e-6, 1e3);
  const double og_min = p.number("omega_over_gamma_min", 1.0, 1e-3, 1e6);
  const double og_max = p.number("omega_over_gamma_max", 100.0 * S.value(), 1e-3, 1e6);
  const int og_points = p.integer("omega_over_gamma_points", 6, 1, 200);
  const double eps = p.number("eps", 1e-3, 1e-9, 0.5);
  const double t_max = p.number("t_max", 1e3, 1e-3, 1e8);
  const std::string method = p.choice("method", "trajectories", {"trajectories", "master"});
  const int n_traj = p.integer("n_traj", 100, 1, 1000000);
  p.finish();
  if (og_min > og_max) throw ConfigError(std::vector<FieldError>{{"params.omega_over_gamma_min", "exceeds omega_over_gamma_max"}});

  JobOutput out;
  Table scan{"scan",
             {"delta_over_omega", "omega_over_gamma", "gamma_t_ss", "gamma_bound", "final_fidelity", "var_y_plus", "xi2",
              "status"},
             {}};
  Table best{"optimal",
             {"delta_over_omega", "omega_over_gamma", "gamma_t_ss", "gamma_bound", "var_y_plus", "xi2",
              "gamma_t_ss_times_var", "at_boundary"},
             {}};
  const std::vector<double> ogs = geomspace(og_min, og_max, og_points);
  bool bound_ok = true;
  for (std::size_t a = 0; a < ratios.size(); ++a) {
    const PairState ps = pair_coeffs(S, ratios[a], 0.0, 1.0);
    const Wineland w = wineland(ps);
    double tbest = kInf, bbest = 0, ogbest = 0;
    std::size_t ibest = 0;
    for (std::size_t b = 0; b < ogs.size(); ++b) {
      RelaxationOptions opt;
      opt.eps = eps;
      opt.t_max = t_max;
      opt.use_master_equation = method == "master";
      opt.traj.n_traj = n_traj;
      opt.traj.threads = ctx.threads;
      opt.traj.seed = ctx.task_seed(fmt::format("{}/{}", a, b));
      const ChainModel m = pair_model(S, ratios[a] * ogs[b], ogs[b]);
      try {
        const RelaxationResult r = relaxation_time(m, opt);
        scan.add({ratios[a], ogs[b], r.t_ss, r.bound, r.final_fidelity, w.var_y_plus, w.xi2, std::string("ok")});
        bound_ok = bound_ok && r.t_ss >= r.bound;
        if (r.t_ss < tbest) tbest = r.t_ss, bbest = r.bound, ogbest = ogs[b], ibest = b;
      } catch (const TimeoutError& e) {
        scan.add({ratios[a], ogs[b], kInf, kInf, e.last_value, w.var_y_plus, w.xi2, std::string("timeout")});
      }
    }
    if (std::isfinite(tbest)) {
      const bool edge = ogs.size() > 1 && (ibest == 0 || ibest + 1 == ogs.size());
      best.add({ratios[a], ogbest, tbest, bbest, w.var_y_plus, w.xi2, tbest * w.var_y_plus,
                static_cast<long long>(edge)});
      out.checks.push_back({fmt::format("gamma t_ss Var at delta/omega = {}", ratios[a]), tbest * w.var_y_plus, 0.3, 3});
    }
  }
  out.checks.push_back({"t_ss >= bound on every configuration", bound_ok ? 1.0 : 0.0, 1, 1});
  out.diagnostics["omega_over_gamma_grid"] = ogs;
  out.tables = {scan, best};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput squeeze_opt(Params& p, JobContext& ctx) {
  const std::vector<HalfInt> spins = p.spins("S", {10, 100, 1000});
  const std::vector<double> coop = p.numbers("C", {10, 100, 1000}, 1e-6, 1e12);
  const int golden = p.integer("golden_iterations", 12, 0, 200);
  const int points = p.integer("time_points", 240, 8, 100000);
  const double horizon = p.number("horizon", 20, 1e-3, 1e6);
  const bool large_s = p.flag("large_s_variance", true);
  const std::vector<double> dx = p.numbers("delta_over_omega_exponents", linspace(-1, 2, 13), -20, 20);
  const std::vector<double> dy = p.numbers("omega_over_gamma_exponents", linspace(-1.5, 0.5, 5), -20, 20);
  p.finish();

  JobOutput out;
  Table t{"optimum",
          {"S", "C", "delta_over_omega", "omega_over_gamma", "t_opt", "xi2_opt", "at_boundary", "evaluations"},
          {}};
  std::vector<double> sc, xi;
  json grids = json::array();
  double worst = 1;
  for (HalfInt S : spins)
    for (double C : coop) {
      SqueezingSearch s;
      const double centre = 1 / std::sqrt(S.value() * C);
      // grid: delta/omega = centre 10^x, omega/gamma = S 10^y
      for (double x : dx) s.delta_over_omega.push_back(centre * std::pow(10.0, x));
      for (double y : dy) s.omega_over_gamma.push_back(S.value() * std::pow(10.0, y));
      s.golden_iterations = golden;
      s.time_points = points;
      s.horizon = horizon;
      s.large_s = large_s;
      s.threads = ctx.threads;
      const SqueezingOptimum o = optimize_squeezing(S, C, s);
      t.add({S.value(), C, o.delta_over_omega, o.omega_over_gamma, o.t_opt, o.xi2, static_cast<long long>(o.at_boundary),
             static_cast<long long>(o.evaluations)});
      grids.push_back({{"S", S.value()},
                       {"C", C},
                       {"delta_over_omega", s.delta_over_omega},
                       {"omega_over_gamma", s.omega_over_gamma},
                       {"warning", o.warning}});
      if (std::isfinite(o.xi2) && o.xi2 > 0) {
        sc.push_back(S.value() * C);
        xi.push_back(o.xi2);
      }
      const double ratio = o.delta_over_omega / centre;
      worst = std::max({worst, ratio, 1 / ratio});
    }
  const Fit f = loglog_fit(sc, xi);
  Table fit{"fit", {"exponent", "log_prefactor", "points"}, {}};
  fit.add({f.slope, f.intercept, static_cast<long long>(sc.size())});
  out.checks.push_back({"xi2_opt exponent vs SC", f.slope, -0.6, -0.4});
  out.checks.push_back({"max factor between optimal delta/omega and 1/sqrt(SC)", worst, 0, 3});
  out.diagnostics["search_grids"] = grids;
  out.diagnostics["time_window"] = fmt::format("t_max = {} (1 + omega/(S delta)) / gamma, {} geometric samples", horizon,
                                               points);
  out.tables = {t, fit};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput ellipse(Params& p, JobContext&) {
  const HalfInt S = p.spin("S", HalfInt(50));
  const double q = p.number("detuning_exponent", 0.5, -2, 4);
  const double pmf_phi = p.number("pmf_phi", 0.1, -10, 10);
  const std::vector<double> phis = p.numbers("phi", linspace(0.01, std::numbers::pi / 2, 16), -10, 10);
  p.finish();

  const double r = std::pow(S.value(), -q);
  const PairState ps = pair_coeffs(S, r, 0.0, 1.0);
  const double F = qfi_pair(ps);
  JobOutput out;
  const EllipsePmf pmf = ellipse_pmf(ps, pmf_phi);
  Table tp{"pmf", {"p1", "p2", "probability"}, {}};
  for (Eigen::Index i = 0; i < pmf.P.rows(); ++i)
    for (Eigen::Index j = 0; j < pmf.P.cols(); ++j)
      tp.add({pmf.outcome(static_cast<int>(i)), pmf.outcome(static_cast<int>(j)), std::max(pmf.P(i, j), 0.0)});
  Table tc{"fisher", {"phi", "cfi", "qfi", "cfi_over_qfi"}, {}};
  for (double phi : phis) {
    const double c = cfi(ps, phi);
    tc.add({phi, c, F, c / F});
  }
  out.diagnostics["theta_quadrature_nodes"] = pmf.theta_points;
  out.diagnostics["delta_over_omega"] = r;
  out.tables = {tp, tc};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput four_entropy(Params& p, JobContext& ctx) {
  const HalfInt S = p.spin("S", HalfInt(1), half(1), HalfInt(3));
  const double chi = p.number("chi", 1.0, 1e-9, 1e9);
  const double omega = p.number("omega", 10 * S.value() * chi, 0, 1e12);
  const std::vector<double> da = p.numbers("delta_A", {1, 2, 3, 4, 5, 6});
  const std::vector<double> db = p.numbers("delta_B", {1, 2, 3, 4, 5, 6});
  p.finish();

  JobOutput out;
  Table t{"entropy", {"pattern", "delta_A", "delta_B", "S_12", "S_13", "S_14"}, {}};
  json skipped = json::array();
  double dimer_max = 0;
  for (const std::string pattern : {"nested", "dimerized"})
    for (double a : da)
      for (double b : db) {
        ChainModel m;
        m.S = S;
        m.chi = chi;
        m.omega = omega;
        m.deltas = pattern == "nested" ? std::vector<double>{a / 2, b / 2, -b / 2, -a / 2}
                                       : std::vector<double>{a / 2, -a / 2, b / 2, -b / 2};
        try {
          const ChainState st = assemble_chain(m, ctx.memory_budget);
          const double s12 = reduced_entropy(st, {0, 1}), s13 = reduced_entropy(st, {0, 2}),
                       s14 = reduced_entropy(st, {0, 3});
          t.add({pattern, a, b, s12, s13, s14});
          if (pattern == "dimerized") dimer_max = std::max(dimer_max, s12);
          if (pattern == "nested" && a == 4 && b == 6 && omega == 10 * S.value() * chi && S == HalfInt(1))
            out.checks.push_back({"nested (4, 6) min entropy", std::min({s12, s13, s14}), 0.01, kInf});
        } catch (const DomainError& e) {
          skipped.push_back({{"pattern", pattern}, {"delta_A", a}, {"delta_B", b}, {"reason", e.what()}});
        }
      }
  if (!da.empty()) out.checks.push_back({"dimerized max S_12", dimer_max, 0, 1e-8});
  out.diagnostics["skipped"] = skipped;
  out.diagnostics["units"] = "detunings in units of chi";
  out.tables = {t};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput four_qfi(Params& p, JobContext&) {
  const HalfInt S = p.spin("S", HalfInt(1), half(1), HalfInt(3));
  const double chi = p.number("chi", 1.0, 1e-9, 1e9);
  const std::vector<double> da = p.numbers("delta_A", linspace(0.25, 4, 16));
  const std::vector<double> db = p.numbers("delta_B", linspace(0.25, 4, 16));
  const bool dephased = p.flag("common_gradient_dephasing", true);
  p.finish();

  JobOutput out;
  const double fmax = 64 * S.value() * (S.value() + 1) / 3;
  Table t{"components",
          {"delta_A", "delta_B", "F_pppp", "F_ppmm", "F_pmpm", "F_pmmp", "sum", "F_ppmm_cg", "F_pmpm_cg", "F_pmmp_cg"},
          {}};
  json skipped = json::array();
  double worst_sum = 0, worst_pppp = 0;
  const std::vector<double> tot{1, 1, 1, 1}, grad{3, 1, -1, -3};
  for (double a : da)
    for (double b : db) {
      try {
        const std::vector<cd> g = four_largeomega(S, a, b, chi);
        const FourQfi f = four_qfi_components(S, g);
        double c1 = 0, c2 = 0, c3 = 0;
        if (dephased) {
          const ChainState st = four_state_from_g(S, g);
          c1 = qfi_dephased_weighted(st, {1, 1, -1, -1}, {tot, grad});
          c2 = qfi_dephased_weighted(st, {1, -1, 1, -1}, {tot, grad});
          c3 = qfi_dephased_weighted(st, {1, -1, -1, 1}, {tot, grad});
        }
        t.add({a, b, f.pppp, f.ppmm, f.pmpm, f.pmmp, f.sum(), c1, c2, c3});
        worst_sum = std::max(worst_sum, std::abs(f.sum() - fmax) / fmax);
        worst_pppp = std::max(worst_pppp, std::abs(f.pppp));
      } catch (const DomainError& e) {
        skipped.push_back({{"delta_A", a}, {"delta_B", b}, {"reason", e.what()}});
      }
    }
  out.checks.push_back({"max relative deviation of the component sum from 64S(S+1)/3", worst_sum, 0, 1e-10});
  out.checks.push_back({"max |F_pppp|", worst_pppp, 0, 1e-10});
  out.diagnostics["skipped"] = skipped;
  out.diagnostics["drive"] = "infinite (large-drive coefficients)";
  out.diagnostics["dephasing"] = "uniform common and gradient (3, 1, -1, -3) phases, exact block projection";
  out.tables = {t};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput chain_aklt(Params& p, JobContext& ctx) {
  const double de = p.number("delta_e", 0.0);
  const double db = p.number("delta_b", std::numbers::sqrt2);
  const double chi = p.number("chi", 1.0, 1e-9, 1e9);
  const std::vector<double> drives = p.numbers("omega_over_chi", {3, 10, 30, 100, 300, 1000}, 1e-6, 1e12);
  std::vector<double> Ls = p.numbers("L", {2, 4, 6, 8, 10}, 2, 16);
  p.finish();
  for (std::size_t i = 0; i < Ls.size(); ++i)
    if (Ls[i] != std::floor(Ls[i]) || static_cast<int>(Ls[i]) % 2)
      throw ConfigError(std::vector<FieldError>{{fmt::format("params.L[{}]", i), "chain length must be an even integer"}});

  JobOutput out;
  Table t{"fidelity", {"L", "omega_over_chi", "aklt_fidelity"}, {}};
  for (double Lf : Ls)
    for (double w : drives) {
      ChainModel m;
      m.S = half(1);
      m.deltas = staircase(static_cast<int>(Lf), de, db);
      m.chi = chi;
      m.omega = w * chi;
      const double f = aklt_fidelity(assemble_chain(m, ctx.memory_budget));
      t.add({static_cast<long long>(Lf), w, f});
      if (Lf == 6 && w == 1000 && de == 0 && std::abs(db - std::numbers::sqrt2 * chi) < 1e-12)
        out.checks.push_back({"L = 6, omega/chi = 1000 AKLT fidelity", f, 0.95, 1});
    }
  out.tables = {t};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput phase_diagram(Params& p, JobContext&) {
  const HalfInt S = p.spin("S", half(1), half(1), HalfInt(4));
  const double chi = p.number("chi", 1.0, 1e-9, 1e9);
  const std::vector<double> de = p.numbers("delta_e", linspace(0, 4, 41));
  const std::vector<double> db = p.numbers("delta_b", linspace(0, 4, 41));
  const double phi = p.number("phi", std::numbers::pi, -10, 10);
  p.finish();

  JobOutput out;
  Table t{"phase_diagram",
          {"delta_e_over_chi", "delta_b_over_chi", "L_corr", "L_string", "string_order", "lambda1_abs", "lambdaG_abs"},
          {}};
  for (double a : de)
    for (double b : db) {
      const MPSUnitCell cell = unit_cell_large_omega(S, f_coeffs(S, a * chi, b * chi, chi));
      const CorrelationLengths c = correlation_lengths(cell, phi);
      t.add({a, b, c.corr_infinite ? kInf : c.L_corr, c.string_infinite ? kInf : c.L_string, string_order(cell, phi),
             c.lambda1_abs, c.lambdaG_abs});
    }
  out.diagnostics["drive"] = "infinite (large-drive unit cell)";
  out.tables = {t};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput string_order_job(Params& p, JobContext&) {
  const std::vector<HalfInt> spins = p.spins("S", {half(1), HalfInt(1), half(3), HalfInt(2)});
  const double de = p.number("delta_e", 0.0);
  const double db = p.number("delta_b", std::numbers::sqrt2);
  const double chi = p.number("chi", 1.0, 1e-9, 1e9);
  const int n = p.integer("phi_points", 65, 2, 100000);
  p.finish();

  JobOutput out;
  Table t{"string_order", {"S", "phi", "string_order", "closed_form", "L_corr", "L_string"}, {}};
  const bool aklt = de == 0 && std::abs(db - std::numbers::sqrt2 * chi) < 1e-12;
  for (HalfInt S : spins) {
    const std::vector<cd> f = f_coeffs(S, de, db, chi);
    const MPSUnitCell cell = unit_cell_large_omega(S, f);
    for (int k = 0; k < n; ++k) {
      // phi = 2 pi k/(n-1), pi exactly at the midpoint of an odd grid
      const double phi = 2 * std::numbers::pi * k / (n - 1);
      const double tm = string_order(cell, phi), cf = string_order_closed(S, f, phi);
      const CorrelationLengths c = correlation_lengths(cell, phi);
      t.add({S.value(), phi, tm, cf, c.corr_infinite ? kInf : c.L_corr, c.string_infinite ? kInf : c.L_string});
      if (2 * k == n - 1) {
        if (aklt && S == half(1)) out.checks.push_back({"AKLT string order at pi minus 4/9", tm - 4.0 / 9, -1e-10, 1e-10});
        if (S.is_integer()) out.checks.push_back({fmt::format("S = {} string order at pi", S.str()), tm, -1e-12, 1e-12});
      }
    }
  }
  out.tables = {t};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput gap(Params& p, JobContext&) {
  const HalfInt S = p.spin("S", HalfInt(5), half(1), HalfInt(8));
  const double omega = p.number("omega_over_gamma", 100.0, 1e-6, 1e9);
  const std::vector<double> xs = p.numbers("s_delta_over_omega", {0.1, 0.2, 0.5, 1, 2, 3}, 1e-9, 1e6);
  const std::vector<HalfInt> pert_spins = p.spins("perturbative_spins", {10, 30, 100, 300, 1000});
  const std::vector<double> pert_x = p.numbers("perturbative_s_delta_over_omega", {0.01, 0.02, 0.05, 0.1}, 1e-9, 1e6);
  p.finish();

  JobOutput out;
  Table te{"exact", {"S", "s_delta_over_omega", "exact_gap", "perturbative_gap", "relative_difference"}, {}};
  double worst = 0;
  for (double x : xs) {
    const double delta = x * omega / S.value();
    const double ex = spectral_gap(pair_model(S, delta, omega)).gap;
    const double pg = perturbative_gap(S, delta, omega, 1.0);
    te.add({S.value(), x, ex, pg, (pg - ex) / ex});
    if (x <= 1) worst = std::max(worst, std::abs(pg - ex) / ex);
  }
  out.checks.push_back({"max relative perturbative error for S delta/omega <= 1", worst, 0, 0.1});
  Table tp{"perturbative", {"S", "s_delta_over_omega", "gap"}, {}};
  Table tf{"perturbative_fit", {"S", "exponent", "log_prefactor"}, {}};
  for (HalfInt s : pert_spins) {
    std::vector<double> gs;
    for (double x : pert_x) {
      gs.push_back(perturbative_gap(s, x * omega / s.value(), omega, 1.0));
      tp.add({s.value(), x, gs.back()});
    }
    const Fit f = loglog_fit(pert_x, gs);
    tf.add({s.value(), f.slope, f.intercept});
    out.checks.push_back({fmt::format("perturbative gap exponent at S = {}", s.str()), f.slope, 1.9, 2.1});
  }
  out.tables = {te, tp, tf};
  return out;
}

// ---------------------------------------------------------------------------

JobOutput cumulant_benchmark(Params& p, JobContext& ctx) {
  const HalfInt S = p.spin("S", HalfInt(30), half(2), HalfInt(10000));
  const double x = p.number("s_delta_over_omega", 10, 1e-9, 1e9);
  const double y = p.number("s_gamma_over_omega", 10, 1e-9, 1e9);
  const double gs = p.number("gamma_single", 0.0, 0, 1e6);
  const double t_end = p.number("t_end", 50, 1e-6, 1e7);
  const int points = p.integer("time_points", 201, 2, 1000000);
  const double t_steady = p.number("steady_t_max", 2000, 1e-6, 1e9);
  const int n_traj = p.integer("n_traj", 0, 0, 1000000);
  p.finish();

  const double gamma = 1.0, omega = S.value() * gamma / y, delta = x * omega / S.value();
  CumulantParams cp;
  cp.S = S;
  cp.omega = omega;
  cp.delta = delta;
  cp.gamma_collective = gamma;
  cp.gamma_single = gs;
  const CumulantRhs rhs(cp);
  JobOutput out;
  const std::vector<double> grid = linspace(0, t_end, points);

  Table ts{"cumulant_series",
           {"t", "xi2", "xi2_large_s", "sx_minus", "var_y_plus", "var_y_plus_large_s", "max_abs_moment"},
           {}};
  CumulantMoments m = all_down_moments();
  std::string stop;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) {
      try {
        m = evolve(rhs, m, {grid[k - 1], grid[k]}).m.back();
      } catch (const IntegrationError& e) {
        stop = fmt::format("stopped at t = {}: {}", grid[k - 1], e.what());
        break;
      }
    }
    const CollectiveObservables o = collective(m, S);
    double mx = 0;
    for (double v : m) mx = std::max(mx, std::abs(v));
    ts.add({grid[k], o.xi2, o.xi2_large, o.sx_minus, o.var_y_plus, o.var_y_plus_large, mx});
  }
  out.diagnostics["series"] = stop.empty() ? std::string("complete") : stop;

  Table st{"steady", {"method", "xi2", "xi2_large_s", "sx_minus", "var_y_plus", "t_relax", "residual"}, {}};
  double exact_xi2 = kInf;
  if (gs == 0) {
    const Wineland w = wineland(pair_coeffs(S, delta, 0.0, omega));
    exact_xi2 = w.xi2;
    st.add({std::string("exact"), w.xi2, w.xi2, w.spin_length, w.var_y_plus, 0.0, 0.0});
  }
  try {
    const CumulantSteady c = cumulant_steady(rhs, all_down_moments(), t_steady);
    st.add({std::string("cumulant"), c.obs.xi2, c.obs.xi2_large, c.obs.sx_minus, c.obs.var_y_plus, c.t, c.residual});
    out.diagnostics["cumulant_steady"] = "converged";
    if (std::isfinite(exact_xi2))
      out.checks.push_back({"cumulant steady xi2 relative error", std::abs(c.obs.xi2 - exact_xi2) / exact_xi2, 0, 0.1});
  } catch (const std::runtime_error& e) {
    out.diagnostics["cumulant_steady"] = e.what();
    if (std::isfinite(exact_xi2)) out.checks.push_back({"cumulant steady xi2 relative error", kInf, 0, 0.1});
  }

  std::vector<Table> tables{ts, st};
  if (n_traj > 0) {
    if (gs != 0) throw ConfigError(std::vector<FieldError>{{"params.n_traj", "trajectories need gamma_single = 0"}});
    const SystemOps ops = system_operators(pair_model(S, delta, omega, gamma));
    const int d = spin_dim(S);
    const SpinMatrices sm = spin_matrices(S);
    const SpMat sx = sm.sx.sparseView(), sy = sm.sy.sparseView();
    const SpMat sxm = embed(sx, 0, 2, d) - embed(sx, 1, 2, d);
    const SpMat syp = embed(sy, 0, 2, d) + embed(sy, 1, 2, d);
    const SpMat syp2 = syp * syp;
    CVec psi0 = CVec::Zero(ops.dim());
    psi0(ops.dim() - 1) = 1;
    TrajectoryOptions opt;
    opt.n_traj = n_traj;
    opt.seed = ctx.task_seed("trajectories");
    opt.threads = ctx.threads;
    const CVec target = pair_state_vector(pair_coeffs(S, delta, 0.0, omega));
    const TrajectoryResult r = jump_trajectories(ops, psi0, grid, {sxm, syp, syp2}, target, opt);
    Table tj{"trajectory_series", {"t", "xi2", "sx_minus", "sx_minus_stderr", "var_y_plus", "fidelity", "n_traj"}, {}};
    for (std::size_t k = 0; k < r.t.size(); ++k) {
      const double l = r.mean[0][k], var = r.mean[2][k] - r.mean[1][k] * r.mean[1][k];
      tj.add({r.t[k], l != 0 ? 4 * S.value() * var / (l * l) : kInf, l, r.stderr_[0][k], var, r.fidelity_mean[k],
              static_cast<long long>(r.n_traj)});
    }
    tables.push_back(tj);
  }
  out.diagnostics["rates"] = {{"gamma", gamma}, {"omega", omega}, {"delta", delta}, {"gamma_single", gs}};
  out.tables = tables;
  return out;
}

}  // namespace

const std::map<std::string, JobFn>& job_registry() {
  static const std::map<std::string, JobFn> r{
      {"pair-spectrum", pair_spectrum},       {"squeeze-tradeoff", squeeze_tradeoff},
      {"squeeze-opt", squeeze_opt},           {"ellipse", ellipse},
      {"four-entropy", four_entropy},         {"four-qfi", four_qfi},
      {"chain-aklt", chain_aklt},             {"phase-diagram", phase_diagram},
      {"string-order", string_order_job},     {"gap", gap},
      {"cumulant-benchmark", cumulant_benchmark},
  };
  return r;
}

}  // namespace darkspin::cli
