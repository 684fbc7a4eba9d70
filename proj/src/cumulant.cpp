#include "darkspin/cumulant.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <tuple>

#include "darkspin/errors.hpp"
#include "darkspin/spin_ops.hpp"

namespace darkspin {

int one_body_index(int ensemble, int a) { return 3 * ensemble + a; }

int intra_index(int ensemble, int a, int b) {
  if (a > b) std::swap(a, b);
  static constexpr int slot[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
  return 6 + 6 * ensemble + slot[a][b];
}

int inter_index(int a, int b) { return 18 + 3 * a + b; }

namespace {

// Six representative atoms: ensemble e owns qubits 3e, 3e+1 (moment slots)
// and 3e+2 (stands in for every atom outside the operator's support).
constexpr int kQubits = 6;
constexpr int kDim = 1 << kQubits;

CMat pauli(int a) {
  CMat p(2, 2);
  switch (a) {
    case 0: p << 0, 1, 1, 0; break;
    case 1: p << 0, cd(0, -1), cd(0, 1), 0; break;
    case 2: p << 1, 0, 0, -1; break;
    default: p = CMat::Identity(2, 2);
  }
  return p;
}

// Basis (up, down); qubit 0 most significant.
SpMat on_qubit(const CMat& op, int q) { return embed(op.sparseView(), q, kQubits, 2); }

struct Site {
  int qubit, pauli;
};

int ensemble_of(int q) { return q / 3; }

// Closure of <prod sites>, weight <= 3, into terms over moment indices.
void close_string(const std::vector<Site>& s, double c, std::vector<CumulantRhs::Term>& out) {
  auto one = [](const Site& a) { return one_body_index(ensemble_of(a.qubit), a.pauli); };
  auto two = [](const Site& a, const Site& b) {
    const int ea = ensemble_of(a.qubit), eb = ensemble_of(b.qubit);
    if (ea == eb) return intra_index(ea, a.pauli, b.pauli);
    return ea == 0 ? inter_index(a.pauli, b.pauli) : inter_index(b.pauli, a.pauli);
  };
  switch (s.size()) {
    case 0: out.push_back({c, -1, -1, -1}); break;
    case 1: out.push_back({c, one(s[0]), -1, -1}); break;
    case 2: out.push_back({c, two(s[0], s[1]), -1, -1}); break;
    case 3: {
      const Site &a = s[0], &b = s[1], &d = s[2];
      out.push_back({c, two(a, b), one(d), -1});
      out.push_back({c, two(a, d), one(b), -1});
      out.push_back({c, two(b, d), one(a), -1});
      out.push_back({-2 * c, one(a), one(b), one(d)});
      break;
    }
    default: throw std::logic_error("cumulant: string of weight > 3");
  }
}

// The defining string of each moment on the moment slots.
std::vector<Site> moment_string(int row) {
  if (row < 6) return {{3 * (row / 3), row % 3}};
  if (row < 18) {
    static constexpr int pa[6] = {0, 1, 2, 0, 0, 1}, pb[6] = {0, 1, 2, 1, 2, 2};
    const int e = (row - 6) / 6, k = (row - 6) % 6;
    return {{3 * e, pa[k]}, {3 * e + 1, pb[k]}};
  }
  const int k = row - 18;
  return {{0, k / 3}, {3, k % 3}};
}

}  // namespace

CumulantRhs::CumulantRhs(const CumulantParams& p) : p_(p) {
  if (p.S.twice < 2) throw DomainError("cumulant: need S >= 1 (two or more atoms per ensemble)");
  if (p.gamma_collective < 0 || p.gamma_single < 0) throw DomainError("cumulant: rates must be non-negative");
  const double n_atoms = p.S.twice;
  std::array<SpMat, kQubits> sm, sp;
  std::array<std::array<SpMat, 3>, kQubits> sig;
  CMat lower(2, 2);
  lower << 0, 0, 1, 0;
  for (int q = 0; q < kQubits; ++q) {
    sm[q] = on_qubit(lower, q);
    sp[q] = sm[q].adjoint();
    for (int a = 0; a < 3; ++a) sig[q][a] = on_qubit(pauli(a), q);
  }
  const double gc = p.gamma_collective, gs = p.gamma_single;

  for (int row = 0; row < kNumMoments; ++row) {
    const std::vector<Site> str = moment_string(row);
    SpMat O = identity_sparse(kDim);
    std::array<int, 2> inside{0, 0};
    for (const Site& s : str) {
      O = O * sig[s.qubit][s.pauli];
      ++inside[ensemble_of(s.qubit)];
    }
    SpMat H(kDim, kDim);
    for (const Site& s : str) {
      const double sign = ensemble_of(s.qubit) == 0 ? 1.0 : -1.0;
      H += 0.5 * p.omega * sig[s.qubit][0] + 0.25 * sign * p.delta * sig[s.qubit][2];
    }
    SpMat R = cd(0, 1) * (H * O - O * H);
    for (const Site& a : str) {
      const SpMat &A = sm[a.qubit], &Ad = sp[a.qubit];
      for (const Site& b : str) {
        const SpMat& B = sm[b.qubit];
        R += gc * (Ad * O * B - 0.5 * (Ad * B * O + O * Ad * B));
      }
      // pairs with one atom outside the support, summed over the outside atoms
      for (int e = 0; e < 2; ++e) {
        const double mult = n_atoms - inside[e];
        if (mult <= 0) continue;
        const int out = 3 * e + 2;
        R += 0.5 * gc * mult * ((Ad * O - O * Ad) * sm[out] + sp[out] * (O * A - A * O));
      }
      R += gs * (Ad * O * A - 0.5 * (Ad * A * O + O * Ad * A));
    }

    const CMat Rd(R);
    // Pauli decomposition on the support plus both outside representatives
    std::vector<int> qs;
    for (const Site& s : str) qs.push_back(s.qubit);
    qs.push_back(2);
    qs.push_back(5);
    const int nq = static_cast<int>(qs.size());
    std::vector<CumulantRhs::Term> raw;
    int code_max = 1;
    for (int k = 0; k < nq; ++k) code_max *= 4;
    for (int code = 0; code < code_max; ++code) {
      // Tr(P R) for the Pauli string P: P|j> = phase(j) |j ^ flip>
      std::vector<Site> s;
      int c = code, flip = 0;
      for (int k = 0; k < nq; ++k, c /= 4) {
        const int a = c % 4;
        if (a == 3) continue;
        s.push_back({qs[k], a});
        if (a < 2) flip |= 1 << (kQubits - 1 - qs[k]);
      }
      cd tr = 0;
      for (int j = 0; j < kDim; ++j) {
        cd ph = 1;
        for (const Site& x : s) {
          const bool down = (j >> (kQubits - 1 - x.qubit)) & 1;
          if (x.pauli == 1) ph *= down ? cd(0, -1) : cd(0, 1);
          if (x.pauli == 2 && down) ph = -ph;
        }
        tr += ph * Rd(j, j ^ flip);
      }
      const cd coef = tr / double(kDim);
      if (std::abs(coef) < 1e-13) continue;
      if (std::abs(coef.imag()) > 1e-9 * (1 + std::abs(coef.real())))
        throw std::logic_error("cumulant: non-Hermitian Heisenberg image");
      close_string(s, coef.real(), raw);
    }
    // merge equal monomials
    std::map<std::tuple<int, int, int>, double> acc;
    for (Term t : raw) {
      std::array<int, 3> idx{t.i, t.j, t.k};
      std::sort(idx.begin(), idx.end(), std::greater<>());
      acc[{idx[0], idx[1], idx[2]}] += t.c;
    }
    for (const auto& [k, c] : acc)
      if (std::abs(c) > 1e-14) rows_[row].push_back({c, std::get<0>(k), std::get<1>(k), std::get<2>(k)});
  }
}

void CumulantRhs::operator()(const CumulantMoments& m, CumulantMoments& dmdt) const {
  auto v = [&m](int i) { return i < 0 ? 1.0 : m[i]; };
  for (int r = 0; r < kNumMoments; ++r) {
    double s = 0;
    for (const Term& t : rows_[r]) s += t.c * v(t.i) * v(t.j) * v(t.k);
    dmdt[r] = s;
  }
}

CumulantRhs derive_rhs(const CumulantParams& p) { return CumulantRhs(p); }

CumulantMoments product_moments(const std::array<double, 3>& n1, const std::array<double, 3>& n2) {
  CumulantMoments m{};
  const std::array<const std::array<double, 3>*, 2> n{&n1, &n2};
  for (int e = 0; e < 2; ++e)
    for (int a = 0; a < 3; ++a) {
      m[one_body_index(e, a)] = (*n[e])[a];
      for (int b = a; b < 3; ++b) m[intra_index(e, a, b)] = (*n[e])[a] * (*n[e])[b];
    }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m[inter_index(a, b)] = n1[a] * n2[b];
  return m;
}

CumulantMoments all_down_moments() { return product_moments({0, 0, -1}, {0, 0, -1}); }

CumulantMoments swap_ensembles(const CumulantMoments& m) {
  CumulantMoments s{};
  for (int a = 0; a < 3; ++a) {
    s[one_body_index(0, a)] = m[one_body_index(1, a)];
    s[one_body_index(1, a)] = m[one_body_index(0, a)];
    for (int b = a; b < 3; ++b) {
      s[intra_index(0, a, b)] = m[intra_index(1, a, b)];
      s[intra_index(1, a, b)] = m[intra_index(0, a, b)];
    }
    for (int b = 0; b < 3; ++b) s[inter_index(a, b)] = m[inter_index(b, a)];
  }
  return s;
}

CollectiveObservables collective(const CumulantMoments& m, HalfInt S) {
  const double s = S.value();
  CollectiveObservables o;
  o.sx_minus = s * (m[one_body_index(0, 0)] - m[one_body_index(1, 0)]);
  o.sy_plus = s * (m[one_body_index(0, 1)] + m[one_body_index(1, 1)]);
  const double yy = m[intra_index(0, 1, 1)] + m[intra_index(1, 1, 1)];
  const double y1y2 = m[inter_index(1, 1)];
  o.sy_plus_sq = s + s * (s - 0.5) * yy + 2 * s * s * y1y2;
  o.sy_plus_sq_large = s + s * s * (yy + 2 * y1y2);
  o.var_y_plus = o.sy_plus_sq - o.sy_plus * o.sy_plus;
  o.var_y_plus_large = o.sy_plus_sq_large - o.sy_plus * o.sy_plus;
  const double sz_minus = s * (m[one_body_index(0, 2)] - m[one_body_index(1, 2)]);
  const double zz = m[intra_index(0, 2, 2)] + m[intra_index(1, 2, 2)];
  const double z1z2 = m[inter_index(2, 2)];
  o.var_z_minus = s + s * (s - 0.5) * zz - 2 * s * s * z1z2 - sz_minus * sz_minus;
  o.var_z_minus_large = s + s * s * (zz - 2 * z1z2) - sz_minus * sz_minus;
  const double l2 = o.sx_minus * o.sx_minus;
  o.xi2 = 4 * s * o.var_y_plus / l2;
  o.xi2_large = 4 * s * o.var_y_plus_large / l2;
  return o;
}

namespace {

namespace odeint = boost::numeric::odeint;

struct Observer {
  CumulantSeries* out;
  HalfInt S;
  void operator()(const CumulantMoments& m, double t) const {
    for (double x : m)
      if (!std::isfinite(x)) throw IntegrationError("cumulant: non-finite moment");
    for (double x : m) out->max_abs_moment = std::max(out->max_abs_moment, std::abs(x));
    for (int e = 0; e < 2; ++e) {
      double b = 0;
      for (int a = 0; a < 3; ++a) b += m[one_body_index(e, a)] * m[one_body_index(e, a)];
      out->max_bloch2 = std::max(out->max_bloch2, b);
    }
    out->t.push_back(t);
    out->m.push_back(m);
    out->obs.push_back(collective(m, S));
  }
};

}  // namespace

CumulantMoments clip_moments(CumulantMoments m) {
  for (double& x : m) x = std::clamp(x, -1.0, 1.0);
  return m;
}

CumulantSeries evolve(const CumulantRhs& rhs, const CumulantMoments& m0, const std::vector<double>& t_grid,
                      const CumulantOptions& opt) {
  CumulantSeries out;
  if (t_grid.empty()) return out;
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw DomainError("cumulant evolve: time grid must be sorted");
  CumulantMoments x = m0;
  // a blown-up closure otherwise sends the step size to zero without end
  auto sys = [&rhs](const CumulantMoments& m, CumulantMoments& d, double t) {
    for (double v : m)
      if (!(std::abs(v) < 1e6)) throw IntegrationError("cumulant evolve: moments diverged near t = " + std::to_string(t));
    rhs(m, d);
  };
  try {
    auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<CumulantMoments>());
    const double span = std::max(t_grid.back() - t_grid.front(), 1e-300);
    odeint::integrate_times(stepper, sys, x, t_grid.begin(), t_grid.end(), 1e-3 * span / t_grid.size(),
                            Observer{&out, rhs.params().S});
  } catch (const IntegrationError&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("cumulant evolve: ") + e.what());
  }
  return out;
}

Eigen::MatrixXd CumulantRhs::jacobian(const CumulantMoments& m) const {
  auto v = [&m](int i) { return i < 0 ? 1.0 : m[i]; };
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(kNumMoments, kNumMoments);
  for (int r = 0; r < kNumMoments; ++r)
    for (const Term& t : rows_[r]) {
      if (t.i >= 0) J(r, t.i) += t.c * v(t.j) * v(t.k);
      if (t.j >= 0) J(r, t.j) += t.c * v(t.i) * v(t.k);
      if (t.k >= 0) J(r, t.k) += t.c * v(t.i) * v(t.j);
    }
  return J;
}

namespace {

double max_abs(const CumulantMoments& d) {
  double r = 0;
  for (double x : d) r = std::max(r, std::abs(x));
  return r;
}

}  // namespace

namespace {

// Newton from x; false when it fails to reach tol
bool newton(const CumulantRhs& rhs, CumulantMoments& x, double tol, double& residual) {
  CumulantMoments d;
  rhs(x, d);
  residual = max_abs(d);
  for (int it = 0; it < 20 && residual >= tol; ++it) {
    const Eigen::Map<const Eigen::VectorXd> f(d.data(), kNumMoments);
    const Eigen::VectorXd step = rhs.jacobian(x).completeOrthogonalDecomposition().solve(f);
    for (int k = 0; k < kNumMoments; ++k) x[k] -= step(k);
    rhs(x, d);
    residual = max_abs(d);
    if (!std::isfinite(residual)) return false;
  }
  return residual < tol;
}

}  // namespace

CumulantSteady cumulant_steady(const CumulantRhs& rhs, const CumulantMoments& m0, double t_max, double tol,
                               const CumulantOptions& opt) {
  // integrate until the flow is slow, then polish the fixed point by Newton
  constexpr double kPolishFrom = 1e-6;
  CumulantSteady st;
  st.m = m0;
  double t = 0, chunk = 1.0 / std::max(rhs.params().gamma_collective, 1e-12);
  CumulantMoments d;
  for (;;) {
    const CumulantSeries s = evolve(rhs, st.m, {0.0, chunk}, opt);
    st.m = s.m.back();
    t += chunk;
    rhs(st.m, d);
    st.residual = max_abs(d);
    if (st.residual < kPolishFrom) {
      CumulantMoments x = st.m;
      double res = 0;
      if (newton(rhs, x, tol, res)) {
        st.m = x;
        st.residual = res;
        break;
      }
    }
    if (t >= t_max) throw TimeoutError("cumulant_steady: not stationary by t_max", st.residual);
    chunk = std::min(chunk * 2, t_max - t);
  }
  st.t = t;
  st.obs = collective(st.m, rhs.params().S);
  return st;
}

CumulantSteady polish_steady(const CumulantRhs& rhs, const CumulantMoments& guess, double tol) {
  CumulantSteady st;
  st.m = guess;
  if (!newton(rhs, st.m, tol, st.residual))
    throw AccuracyError("polish_steady: Newton stalled at residual " + std::to_string(st.residual));
  st.obs = collective(st.m, rhs.params().S);
  return st;
}

namespace {

double pick(const CollectiveObservables& o, bool large) { return large ? o.xi2_large : o.xi2; }

}  // namespace

namespace {

// A sample is usable while the closed moments stay physical: bounded, and
// Var(Sy+) Var(Sz-) >= <Sx->^2 / 4 since [Sy1 + Sy2, Sz1 - Sz2] = i (Sx1 - Sx2).
bool physical(const CumulantMoments& m, const CollectiveObservables& o) {
  for (double x : m)
    if (std::abs(x) > 1 + 1e-6) return false;
  const double bound = 0.25 * o.sx_minus * o.sx_minus * (1 - 1e-9);
  return o.var_y_plus > 0 && o.var_y_plus_large > 0 && o.var_y_plus * o.var_z_minus >= bound &&
         o.var_y_plus_large * o.var_z_minus_large >= bound;
}

}  // namespace

TimeMinimum min_over_time(const CumulantParams& p, const SqueezingSearch& search) {
  const CumulantRhs rhs(p);
  const double ratio = p.delta / p.omega;
  const double t_max = search.horizon * (1 + 1 / (p.S.value() * ratio)) / search.gamma;
  const int n = std::max(search.time_points, 8);
  std::vector<double> grid(n + 1);
  grid[0] = 0;
  for (int k = 1; k <= n; ++k) grid[k] = t_max * std::pow(10.0, -3.0 * (n - k) / (n - 1));
  // interval by interval, so a closure blow-up keeps the samples before it
  CumulantSeries s;
  s.t.push_back(0);
  s.m.push_back(all_down_moments());
  s.obs.push_back(collective(s.m[0], p.S));
  bool truncated = false;
  for (int k = 1; k <= n && !truncated; ++k) {
    try {
      const CumulantSeries step = evolve(rhs, s.m.back(), {grid[k - 1], grid[k]}, search.ode);
      s.t.push_back(grid[k]);
      s.m.push_back(step.m.back());
      s.obs.push_back(step.obs.back());
      truncated = !physical(s.m.back(), s.obs.back());
    } catch (const IntegrationError&) {
      truncated = true;
    }
  }
  std::size_t end = 1;
  while (end < s.t.size() && physical(s.m[end], s.obs[end])) ++end;
  TimeMinimum r;
  r.unphysical = truncated || end < s.t.size();
  if (end <= 1) {
    r.xi2 = std::numeric_limits<double>::infinity();
    return r;
  }
  std::size_t best = 1;
  for (std::size_t k = 1; k < end; ++k)
    if (pick(s.obs[k], search.large_s) < pick(s.obs[best], search.large_s)) best = k;
  r.xi2 = pick(s.obs[best], search.large_s);
  r.t = s.t[best];
  r.at_end = best + 1 == grid.size();
  if (best + 1 >= end || best == 1) return r;
  // golden section on [t_{k-1}, t_{k+1}], restarting from the moments at t_{k-1}
  const CumulantMoments start = s.m[best - 1];
  const double a0 = s.t[best - 1];
  auto f = [&](double t) {
    const CumulantSeries e = evolve(rhs, start, {a0, t}, search.ode);
    if (!physical(e.m.back(), e.obs.back())) return std::numeric_limits<double>::infinity();
    return pick(e.obs.back(), search.large_s);
  };
  const double g = (std::sqrt(5.0) - 1) / 2;
  double a = a0, b = s.t[best + 1];
  double c = b - g * (b - a), d = a + g * (b - a), fc = f(c), fd = f(d);
  for (int it = 0; it < search.golden_iterations; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc, c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd, d = a + g * (b - a), fd = f(d);
    }
  }
  if (std::min(fc, fd) < r.xi2) {
    r.xi2 = std::min(fc, fd);
    r.t = fc < fd ? c : d;
  }
  return r;
}

SqueezingSearch default_squeezing_search(HalfInt S, double C) {
  SqueezingSearch s;
  const double centre = 1 / std::sqrt(S.value() * C);
  // the closure optimum sits above the centre ratio and below omega = S gamma
  for (int k = -4; k <= 8; ++k) s.delta_over_omega.push_back(centre * std::pow(10.0, 0.25 * k));
  for (int k = -3; k <= 1; ++k) s.omega_over_gamma.push_back(S.value() * std::pow(10.0, 0.5 * k));
  return s;
}

SqueezingOptimum optimize_squeezing(HalfInt S, double C, const SqueezingSearch& search) {
  if (!(C > 0)) throw DomainError("optimize_squeezing: cooperativity must be positive");
  if (search.delta_over_omega.empty() || search.omega_over_gamma.empty())
    throw DomainError("optimize_squeezing: empty search grid");
  const std::size_t nx = search.delta_over_omega.size(), ny = search.omega_over_gamma.size();
  auto params = [&](double ratio, double og) {
    CumulantParams p;
    p.S = S;
    p.gamma_collective = search.gamma;
    p.gamma_single = search.gamma / C;
    p.omega = og * search.gamma;
    p.delta = ratio * p.omega;
    return p;
  };
  std::vector<TimeMinimum> cell(nx * ny);
  const int threads = std::max(1, std::min<int>(search.threads, static_cast<int>(cell.size())));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](int w) {
    try {
      for (std::size_t k = w; k < cell.size(); k += threads)
        cell[k] = min_over_time(params(search.delta_over_omega[k % nx], search.omega_over_gamma[k / nx]), search);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < threads; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t best = 0;
  for (std::size_t k = 1; k < cell.size(); ++k)
    if (cell[k].xi2 < cell[best].xi2) best = k;
  const std::size_t ix = best % nx, iy = best / nx;
  SqueezingOptimum opt;
  opt.evaluations = static_cast<int>(cell.size());
  opt.xi2 = cell[best].xi2;
  opt.delta_over_omega = search.delta_over_omega[ix];
  opt.omega_over_gamma = search.omega_over_gamma[iy];
  opt.t_opt = cell[best].t;
  const bool edge_x = nx > 1 && (ix == 0 || ix + 1 == nx);
  const bool edge_y = ny > 1 && (iy == 0 || iy + 1 == ny);
  if (edge_x || edge_y || cell[best].at_end) {
    opt.at_boundary = true;
    opt.warning = edge_x   ? "optimum on the delta/omega grid boundary"
                  : edge_y ? "optimum on the omega/gamma grid boundary"
                           : "optimum at the end of the time window";
  }
  if (nx >= 3 && !edge_x) {
    const double og = opt.omega_over_gamma;
    const double g = (std::sqrt(5.0) - 1) / 2;
    double a = std::log(search.delta_over_omega[ix - 1]), b = std::log(search.delta_over_omega[ix + 1]);
    auto f = [&](double lx) {
      ++opt.evaluations;
      return min_over_time(params(std::exp(lx), og), search);
    };
    double c = b - g * (b - a), d = a + g * (b - a);
    TimeMinimum fc = f(c), fd = f(d);
    for (int it = 0; it < search.golden_iterations; ++it) {
      if (fc.xi2 < fd.xi2) {
        b = d, d = c, fd = fc, c = b - g * (b - a), fc = f(c);
      } else {
        a = c, c = d, fc = fd, d = a + g * (b - a), fd = f(d);
      }
    }
    const TimeMinimum& m = fc.xi2 < fd.xi2 ? fc : fd;
    if (m.xi2 < opt.xi2) {
      opt.xi2 = m.xi2;
      opt.delta_over_omega = std::exp(fc.xi2 < fd.xi2 ? c : d);
      opt.t_opt = m.t;
    }
  }
  return opt;
}

}  // namespace darkspin
