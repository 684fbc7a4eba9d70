// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "darkspin/cumulant.hpp"
#include "darkspin/errors.hpp"
#include "darkspin/lindblad.hpp"
#include "darkspin/metrology.hpp"
#include "darkspin/mps.hpp"
#include "darkspin/steady_state.hpp"

using namespace darkspin;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

struct Outcome {
  bool pass = true;
  std::string detail;
  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds, 0 = none
  std::function<void(Outcome&)> run;
};

ChainModel pair_model(HalfInt S, double delta, double chi, double omega, double gamma = 1.0) {
  ChainModel m;
  m.S = S;
  m.deltas = {delta / 2, -delta / 2};
  m.omega = omega;
  m.chi = chi;
  m.gamma_collective = gamma;
  return m;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double opnorm(const CMat& A) { return Eigen::BDCSVD<CMat>(A).singularValues()(0); }

std::vector<cd> random_f(HalfInt S, std::mt19937& rng) {
  std::normal_distribution<double> n01;
  std::vector<cd> f(S.twice + 1);
  double s = 0;
  for (int J = 0; J <= S.twice; ++J) {
    f[J] = cd(n01(rng), n01(rng));
    s += (2 * J + 1) * std::norm(f[J]);
  }
  for (auto& x : f) x *= (S.twice + 1) / std::sqrt(s);
  return f;
}

std::vector<double> staircase(int L, double de, double db) {
  std::vector<double> d(L);
  d[0] = de / 2;
  d[L - 1] = -de / 2;
  for (int k = 1; k < L - 1; ++k) d[k] = (k % 2 ? db : -db) / 2;
  return d;
}

// ---------------------------------------------------------------------------

void c1_unique_pure(Outcome& o) {
  double worst_purity = 1, worst_fid = 1;
  for (HalfInt S : {half(1), HalfInt(1)})
    for (double r : {0.1, 1.0, 10.0}) {
      const SteadyReport rep = nullspace_steady(pair_model(S, r, 0.0, 1.0));
      o.need(rep.multiplicity == 1, fmt::format("S={} r={} multiplicity {}", S.str(), r, rep.multiplicity));
      worst_purity = std::min(worst_purity, rep.purity);
      worst_fid = std::min(worst_fid, fidelity(rep.rho, pair_state_vector(pair_coeffs(S, r, 0.0, 1.0))));
    }
  o.need(worst_purity > 1 - 1e-8, fmt::format("purity {:.12f}", worst_purity));
  o.need(worst_fid > 1 - 1e-8, fmt::format("fidelity {:.12f}", worst_fid));
  o.note(fmt::format("min purity 1-{:.1e}, min fidelity 1-{:.1e}", 1 - worst_purity, 1 - worst_fid));
}

void c2_degeneracy(Outcome& o) {
  for (int tS : {1, 2, 3, 4}) {
    const int k = null_multiplicity(pair_model(half(tS), 0.0, 0.0, 1.0));
    o.need(k == tS + 1, fmt::format("S={}: {} zero eigenvalues", half(tS).str(), k));
    o.note(fmt::format("S={}: {}", half(tS).str(), k));
  }
}

void c3_qfi_limits(Outcome& o) {
  double worst = 0;
  for (HalfInt S : {half(1), HalfInt(1), HalfInt(2), HalfInt(5), HalfInt(10), HalfInt(30), HalfInt(100)}) {
    const double s = S.value(), hl = 16 * s * (s + 1) / 3;
    worst = std::max(worst, std::abs(qfi_pair(pair_coeffs(S, 1e-3 / s, 0.0, 1.0)) - hl) / hl);
  }
  o.need(worst < 0.01, fmt::format("pair QFI off by {:.3g}", worst));
  double worst_sum = 0, worst_pppp = 0;
  for (int tS = 1; tS <= 20; ++tS)
    for (auto [a, b] : {std::pair{0.7, 2.3}, std::pair{3.1, 0.4}}) {
      const HalfInt S = half(tS);
      const double s = S.value(), fmax = 64 * s * (s + 1) / 3;
      const FourQfi f = four_qfi_components(S, four_largeomega(S, a, b, 1.0));
      worst_sum = std::max(worst_sum, std::abs(f.sum() - fmax) / fmax);
      worst_pppp = std::max(worst_pppp, std::abs(f.pppp));
    }
  o.need(worst_sum < 1e-10, fmt::format("four-component sum off by {:.3g}", worst_sum));
  o.need(worst_pppp < 1e-10, fmt::format("|F++++| = {:.3g}", worst_pppp));
  o.note(fmt::format("pair {:.2e}, sum {:.1e}, F++++ {:.1e}", worst, worst_sum, worst_pppp));
}

void c4_scaling(Outcome& o) {
  const std::vector<int> spins{10, 20, 30, 50, 70, 100, 150, 200};
  for (double q : {1.0, 0.5, 0.0}) {
    std::vector<double> x, y;
    for (int s : spins) {
      x.push_back(s);
      y.push_back(qfi_pair(pair_coeffs(s, std::pow(s, -q), 0.0, 1.0)));
    }
    const double e = loglog_slope(x, y);
    o.need(std::abs(e - (1 + q)) <= 0.1, fmt::format("exponent {:.3f} at S^-{}", e, q));
    o.note(fmt::format("S^-{}: {:.3f}", q, e));
  }
}

void c5_identity_dephasing(Outcome& o) {
  double worst_id = 0, worst_deph = 0;
  for (HalfInt S : {half(1), HalfInt(1), HalfInt(2), HalfInt(5), HalfInt(10)})
    for (double r : {0.01, 0.1, 1.0, 3.0, 10.0}) {
      const PairState p = pair_coeffs(S, r, 0.0, 1.0);
      const double F = qfi_pair(p), want = -r / 4 * F;
      worst_id = std::max(worst_id, std::abs(wineland(p).spin_length - want) / std::max(std::abs(want), 1e-300));
      worst_deph = std::max(worst_deph, std::abs(qfi_dephased(p, {PhasePrior::Kind::Uniform, 0}) - F) / F);
    }
  o.need(worst_id < 1e-8, fmt::format("spin-length identity off by {:.3g}", worst_id));
  o.need(worst_deph < 1e-8, fmt::format("dephased QFI off by {:.3g}", worst_deph));
  o.note(fmt::format("identity {:.1e}, dephasing {:.1e}", worst_id, worst_deph));
}

void c6_cfi(Outcome& o) {
  const PairState p = pair_coeffs(100, 0.1, 0.0, 1.0);
  const double F = qfi_pair(p);
  const double hi = cfi(p, kPi / 4) / F, lo = cfi(p, 0.01) / F;
  o.need(hi > 0.8, fmt::format("CFI/QFI at pi/4 = {:.4f}, need > 0.8", hi));
  o.need(lo < 0.5, fmt::format("CFI/QFI at 0.01 = {:.4f}, need < 0.5", lo));
  if (o.pass) o.note(fmt::format("pi/4: {:.4f}, 0.01: {:.4f}", hi, lo));
}

void c7_gate_conjugation(Outcome& o) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  double worst_h = 0, worst_k = 0;
  int cases = 0;
  for (int tS : {1, 2, 3})
    for (int rep = 0; rep < 6; ++rep) {
      const HalfInt S = half(tS);
      // two opposite-sign pairs, shuffled
      const double a = u(rng), b = -u(rng);
      std::vector<double> deltas{a, -a, b, -b};
      std::shuffle(deltas.begin(), deltas.end(), rng);
      const double chi = 0.2 + u(rng) / 2, omega = u(rng);
      SwapSchedule sch;
      try {
        sch = swap_schedule(deltas, chi);
      } catch (const DomainError&) {
        continue;
      }
      ChainModel init;
      init.S = S;
      init.deltas = sch.delta_init;
      init.omega = omega;
      init.chi = chi;
      ChainModel target = init;
      target.deltas = deltas;
      const CMat H0 = CMat(chain_hamiltonian(init).toDense()), H1 = CMat(chain_hamiltonian(target).toDense());
      const Eigen::Index D = H0.rows();
      CMat U = CMat::Identity(D, D);
      for (const Swap& sw : sch.swaps) {
        const CMat G = pair_gate(S, gate_phases(S, sw.delta_left, sw.delta_right, chi));
        for (Eigen::Index c = 0; c < D; ++c) {
          CVec col = U.col(c);
          apply_two_site(col, S, 4, sw.site, G);
          U.col(c) = col;
        }
      }
      const CMat K = CMat(collective_lowering(S, 4).toDense());
      worst_h = std::max(worst_h, opnorm(U * H0 * U.adjoint() - H1) / opnorm(H1));
      worst_k = std::max(worst_k, opnorm(U * K - K * U));
      ++cases;
    }
  o.need(cases >= 12, fmt::format("only {} valid patterns", cases));
  o.need(worst_h < 1e-9, fmt::format("conjugation residual {:.3g}", worst_h));
  o.need(worst_k < 1e-10, fmt::format("commutator {:.3g}", worst_k));
  o.note(fmt::format("{} patterns, residual {:.1e}, commutator {:.1e}", cases, worst_h, worst_k));
}

void c8_entropy(Outcome& o) {
  const HalfInt S = 1;
  double dimer = 0, nested = kPi;
  for (double a : {1.0, 2.0, 4.0})
    for (double b : {3.0, 5.0, 6.0}) {
      ChainModel m;
      m.S = S;
      m.chi = 1;
      m.omega = 10 * S.value();
      m.deltas = {a / 2, -a / 2, b / 2, -b / 2};
      dimer = std::max(dimer, reduced_entropy(assemble_chain(m), {0, 1}));
      m.deltas = {a / 2, b / 2, -b / 2, -a / 2};
      const ChainState st = assemble_chain(m);
      nested = std::min({nested, reduced_entropy(st, {0, 1}), reduced_entropy(st, {0, 2}), reduced_entropy(st, {0, 3})});
    }
  o.need(dimer < 1e-8, fmt::format("dimerized S(12) = {:.3g}", dimer));
  o.need(nested > 0.01, fmt::format("nested min entropy {:.4f}", nested));
  o.note(fmt::format("dimerized max {:.1e}, nested min {:.4f}", dimer, nested));
}

void c9_aklt(Outcome& o) {
  const std::vector<cd> f = f_coeffs(half(1), 0.0, kSqrt2, 1.0);
  const MPSUnitCell cell = unit_cell_large_omega(half(1), f);
  const double so = string_order(cell, kPi);
  const double lc = correlation_lengths(cell, kPi).L_corr;
  ChainModel m;
  m.S = half(1);
  m.deltas = staircase(6, 0.0, kSqrt2);
  m.chi = 1;
  m.omega = 1e3;
  const double fid = aklt_fidelity(assemble_chain(m));
  o.need(std::abs(f[0]) < 1e-12, fmt::format("|f0| = {:.3g}", std::abs(f[0])));
  o.need(std::abs(so - 4.0 / 9) < 1e-10, fmt::format("string order {:.12f}", so));
  o.need(std::abs(lc - 2 / std::log(3.0)) < 1e-8, fmt::format("L_corr {:.12f}", lc));
  o.need(fid > 0.95, fmt::format("L=6 fidelity {:.6f}", fid));
  o.note(fmt::format("|f0| {:.1e}, O(pi)-4/9 {:.1e}, L_corr-2/ln3 {:.1e}, fidelity {:.7f}", std::abs(f[0]),
                     so - 4.0 / 9, lc - 2 / std::log(3.0), fid));
}

void c10_string_universality(Outcome& o) {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> uphi(0, 2 * kPi);
  double worst = 0, worst_int = 0;
  for (int tS = 1; tS <= 4; ++tS)
    for (int k = 0; k < 8; ++k) {
      const HalfInt S = half(tS);
      const auto f = random_f(S, rng);
      const MPSUnitCell c = unit_cell_large_omega(S, f);
      for (double phi : {uphi(rng), uphi(rng), kPi})
        worst = std::max(worst, std::abs(string_order(c, phi) - string_order_closed(S, f, phi)));
      if (tS % 2 == 0) worst_int = std::max({worst_int, std::abs(string_order_closed(S, f, kPi)), std::abs(string_order(c, kPi))});
    }
  o.need(worst < 1e-8, fmt::format("closed vs transfer {:.3g}", worst));
  o.need(worst_int < 1e-12, fmt::format("integer-S value {:.3g}", worst_int));
  o.note(fmt::format("closed vs transfer {:.1e}, integer S {:.1e}", worst, worst_int));
}

void c11_sum_rules(Outcome& o) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-4, 4);
  std::uniform_int_distribution<int> us(1, 12);
  double worst_f = 0, worst_n = 0;
  for (int k = 0; k < 100; ++k) {
    const HalfInt S = half(us(rng));
    const auto f = f_coeffs(S, u(rng), u(rng), std::abs(u(rng)) + 0.05);
    double s = 0;
    for (int J = 0; J <= S.twice; ++J) s += (2 * J + 1) * std::norm(f[J]);
    const double want = std::pow(S.twice + 1.0, 2);
    worst_f = std::max(worst_f, std::abs(s - want) / want);
    const PairState p = pair_coeffs(S, std::exp(u(rng)), std::abs(u(rng)) / 2, 1.0);
    double n = 0;
    for (cd c : p.c) n += std::norm(c);
    worst_n = std::max({worst_n, std::abs(n - 1), std::abs(pair_state_vector(p).squaredNorm() - 1)});
  }
  o.need(worst_f < 1e-10, fmt::format("f sum rule {:.3g}", worst_f));
  o.need(worst_n < 1e-10, fmt::format("pair normalisation {:.3g}", worst_n));
  o.note(fmt::format("100 draws: f {:.1e}, norm {:.1e}", worst_f, worst_n));
}

void c12_gap(Outcome& o) {
  const HalfInt S = 5;
  const double omega = 100;
  double worst = 0;
  for (double x : {0.1, 0.2, 0.5, 1.0}) {
    const double delta = x * omega / S.value();
    const double ex = spectral_gap(pair_model(S, delta, 0.0, omega)).gap;
    worst = std::max(worst, std::abs(perturbative_gap(S, delta, omega, 1.0) - ex) / ex);
  }
  o.need(worst < 0.1, fmt::format("S=5 perturbative error {:.3f}", worst));
  double lo = 10, hi = -10;
  for (int s : {10, 30, 100, 300, 1000}) {
    std::vector<double> x, y;
    for (double r : {0.01, 0.02, 0.05, 0.1}) {
      x.push_back(r);
      y.push_back(perturbative_gap(s, r * omega / s, omega, 1.0));
    }
    const double e = loglog_slope(x, y);
    lo = std::min(lo, e), hi = std::max(hi, e);
  }
  o.need(lo >= 1.9 && hi <= 2.1, fmt::format("exponents in [{:.3f}, {:.3f}]", lo, hi));
  o.note(fmt::format("S=5 max error {:.4f}, exponents [{:.4f}, {:.4f}]", worst, lo, hi));
}

void c13_relaxation(Outcome& o) {
  // all-down start, 100 trajectories, t_ss at fidelity 1 - 1e-3
  const std::vector<double> ogs{1, 3, 10, 30, 100};
  bool bound_ok = true;
  for (HalfInt S : {half(1), HalfInt(1), HalfInt(2)})
    for (double r : {0.25, 1.0}) {
      const Wineland w = wineland(pair_coeffs(S, r, 0.0, 1.0));
      double best = INFINITY, best_og = 0;
      int k = 0;
      for (double og : ogs) {
        RelaxationOptions opt;
        opt.eps = 1e-3;
        opt.t_max = 1e3;
        opt.traj.n_traj = 100;
        opt.traj.seed = 1000 + 10 * S.twice + k++;
        try {
          const RelaxationResult res = relaxation_time(pair_model(S, r * og, 0.0, og), opt);
          if (res.t_ss < res.bound) {
            bound_ok = false;
            o.need(false, fmt::format("S={} r={} omega/gamma={}: t_ss {:.3g} < bound {:.3g}", S.str(), r, og, res.t_ss,
                                      res.bound));
          }
          if (res.t_ss < best) best = res.t_ss, best_og = og;
        } catch (const TimeoutError&) {
        }
      }
      const double prod = best * w.var_y_plus;
      const std::string line = fmt::format("S={} r={}: gamma t_ss Var = {:.3f} at omega/gamma={}", S.str(), r, prod, best_og);
      if (prod >= 0.3 && prod <= 3)
        o.note(line);
      else
        o.need(false, line);
    }
  if (bound_ok) o.note("bound holds on all 30 configurations");
}

void c14_cumulant(Outcome& o) {
  // gamma = 0 benchmark: S = 30, S delta/omega = 10, S gamma/omega = 10
  const HalfInt S = 30;
  CumulantParams cp;
  cp.S = S;
  cp.gamma_collective = 1;
  cp.omega = S.value() / 10;
  cp.delta = 10 * cp.omega / S.value();
  const double exact = wineland(pair_coeffs(S, cp.delta, 0.0, cp.omega)).xi2;
  try {
    const CumulantSteady st = cumulant_steady(CumulantRhs(cp), all_down_moments(), 2e3);
    const double err = std::abs(st.obs.xi2 - exact) / exact;
    const std::string line = fmt::format("steady xi2 {:.4f} vs exact {:.4f}", st.obs.xi2, exact);
    if (err <= 0.1)
      o.note(line);
    else
      o.need(false, line);
  } catch (const std::runtime_error& e) {
    o.need(false, fmt::format("benchmark: no stationary moments ({}), exact xi2 {:.4f}", e.what(), exact));
  }

  std::vector<double> sc, xi;
  for (int s : {10, 100, 1000})
    for (double C : {10.0, 100.0, 1000.0}) {
      SqueezingSearch search = default_squeezing_search(s, C);
      search.golden_iterations = 12;
      const SqueezingOptimum opt = optimize_squeezing(s, C, search);
      if (opt.at_boundary) o.note(fmt::format("S={} C={} optimum on the grid edge", s, C));
      if (std::isfinite(opt.xi2) && opt.xi2 > 0) {
        sc.push_back(s * C);
        xi.push_back(opt.xi2);
      }
    }
  o.need(sc.size() == 9, fmt::format("{} of 9 optima finite", sc.size()));
  if (sc.size() >= 2) {
    const double e = loglog_slope(sc, xi);
    if (std::abs(e + 0.5) <= 0.1)
      o.note(fmt::format("xi2_opt exponent {:.3f}", e));
    else
      o.need(false, fmt::format("xi2_opt exponent {:.3f}", e));
  }
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<Criterion> all{
      {1, "unique pure steady state", 10, c1_unique_pure},
      {2, "resonant degeneracy 2S+1", 10, c2_degeneracy},
      {3, "QFI limits", 0, c3_qfi_limits},
      {4, "QFI scaling exponents", 60, c4_scaling},
      {5, "spin-length identity and dephasing invariance", 0, c5_identity_dephasing},
      {6, "ellipse CFI/QFI", 300, c6_cfi},
      {7, "gate conjugation", 0, c7_gate_conjugation},
      {8, "four-ensemble entropies", 60, c8_entropy},
      {9, "AKLT point", 0, c9_aklt},
      {10, "string order closed form", 0, c10_string_universality},
      {11, "sum rules", 0, c11_sum_rules},
      {12, "perturbative gap", 0, c12_gap},
      {13, "relaxation bound", 0, c13_relaxation},
      {14, "cumulant benchmark and squeezing scaling", 0, c14_cumulant},
  };
  int failed = 0;
  int ran = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0) o.need(dt < c.time_limit, fmt::format("runtime {:.1f} s over {} s", dt, c.time_limit));
    failed += !o.pass;
    std::printf("%s %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), dt, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria pass\n", ran - failed, ran);
  return failed ? 1 : 0;
}
