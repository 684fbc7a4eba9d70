#include "darkspin/lindblad.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>
#include <thread>
#include <Eigen/UmfPackSupport>
#include <arpack/arpack.hpp>
#undef I  // from <complex.h>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "darkspin/errors.hpp"

namespace darkspin {

namespace {

struct EnsembleOps {
  std::vector<SpMat> sx, sz, sp, sm;
};

SpMat sparse(const CMat& m) { return m.sparseView(); }

EnsembleOps collective_ops(HalfInt S, int L) {
  const int d = spin_dim(S);
  const auto s = spin_matrices(S);
  EnsembleOps e;
  for (int l = 0; l < L; ++l) {
    e.sx.push_back(embed(sparse(s.sx), l, L, d));
    e.sz.push_back(embed(sparse(s.sz), l, L, d));
    e.sp.push_back(embed(sparse(s.sp), l, L, d));
    e.sm.push_back(embed(sparse(s.sm), l, L, d));
  }
  return e;
}

// Ensemble l owns qubits [2S l, 2S (l+1)).
EnsembleOps qubit_ops(HalfInt S, int L, std::vector<SpMat>* single_lowering) {
  const int n = S.twice;
  const int Q = n * L;
  const auto s = spin_matrices(half(1));
  EnsembleOps e;
  for (int l = 0; l < L; ++l) {
    SpMat x, z, p, m;
    for (int a = 0; a < n; ++a) {
      const int q = l * n + a;
      const SpMat qm = embed(sparse(s.sm), q, Q, 2);
      if (single_lowering) single_lowering->push_back(qm);
      if (a == 0) {
        x = embed(sparse(s.sx), q, Q, 2);
        z = embed(sparse(s.sz), q, Q, 2);
        p = embed(sparse(s.sp), q, Q, 2);
        m = qm;
      } else {
        x += embed(sparse(s.sx), q, Q, 2);
        z += embed(sparse(s.sz), q, Q, 2);
        p += embed(sparse(s.sp), q, Q, 2);
        m += qm;
      }
    }
    e.sx.push_back(x);
    e.sz.push_back(z);
    e.sp.push_back(p);
    e.sm.push_back(m);
  }
  return e;
}

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Eigen::Index ipow(Eigen::Index b, int e) {
  Eigen::Index r = 1;
  while (e-- > 0) r *= b;
  return r;
}

}  // namespace

SystemOps system_operators(const ChainModel& m) {
  if (m.L() < 1) throw DomainError("system_operators: empty chain");
  if (!(m.gamma_collective > 0)) throw DomainError("system_operators: collective rate must be positive");
  if (m.gamma_single < 0) throw DomainError("system_operators: single-atom rate must be non-negative");
  SystemOps ops;
  ops.S = m.S;
  ops.L = m.L();
  ops.qubits = m.gamma_single > 0;
  std::vector<SpMat> singles;
  EnsembleOps e;
  if (ops.qubits) {
    if (m.S.twice > 3) throw DomainError("system_operators: single-atom decay only for S <= 3/2");
    e = qubit_ops(m.S, ops.L, &singles);
  } else {
    e = collective_ops(m.S, ops.L);
  }
  const Eigen::Index D = e.sx[0].rows();
  SpMat H(D, D), K(D, D);
  for (int l = 0; l < ops.L; ++l) {
    H += m.omega * e.sx[l] + m.deltas[l] * e.sz[l];
    K += e.sm[l];
  }
  if (m.chi != 0.0)
    for (int k = 0; k < ops.L; ++k)
      for (int l = k + 1; l < ops.L; ++l) {
        SpMat t = e.sp[k] * e.sm[l] - e.sm[k] * e.sp[l];
        H += cd(0, 0.5 * m.chi) * t;
      }
  H.prune(cd(0, 0));
  ops.H = H;
  ops.jumps.push_back(std::sqrt(m.gamma_collective) * K);
  for (const auto& q : singles) ops.jumps.push_back(std::sqrt(m.gamma_single) * q);
  return ops;
}

CVec embed_symmetric(HalfInt S, int L, const CVec& v) {
  const int n = S.twice, d = n + 1;
  const int Q = n * L;
  if (v.size() != ipow(d, L)) throw DomainError("embed_symmetric: dimension mismatch");
  CVec out = CVec::Zero(ipow(2, Q));
  for (Eigen::Index idx = 0; idx < out.size(); ++idx) {
    Eigen::Index flat = 0;
    double w = 1;
    for (int l = 0; l < L; ++l) {
      const int bits = static_cast<int>((idx >> (n * (L - 1 - l))) & ((1 << n) - 1));
      const int downs = __builtin_popcount(bits);
      flat = flat * d + downs;
      w /= std::sqrt(binomial(n, downs));
    }
    out(idx) = v(flat) * w;
  }
  return out;
}

SpMat liouvillian(const SystemOps& ops) {
  const Eigen::Index D = ops.dim();
  const SpMat I = identity_sparse(D);
  const SpMat Ht = ops.H.transpose();
  SpMat Lv = cd(0, -1) * (SpMat(Eigen::kroneckerProduct(I, ops.H)) - SpMat(Eigen::kroneckerProduct(Ht, I)));
  for (const auto& K : ops.jumps) {
    const SpMat KdK = K.adjoint() * K;
    const SpMat KdKt = KdK.transpose();
    Lv += SpMat(Eigen::kroneckerProduct(SpMat(K.conjugate()), K));
    Lv -= 0.5 * SpMat(Eigen::kroneckerProduct(I, KdK));
    Lv -= 0.5 * SpMat(Eigen::kroneckerProduct(KdKt, I));
  }
  Lv.prune(cd(0, 0));
  return Lv;
}

CMat lindblad_rhs(const SystemOps& ops, const CMat& rho) {
  const CMat H = ops.H;
  CMat out = cd(0, -1) * (H * rho - rho * H);
  for (const auto& Ks : ops.jumps) {
    const CMat K = Ks;
    const CMat KdK = K.adjoint() * K;
    out += K * rho * K.adjoint() - 0.5 * (KdK * rho + rho * KdK);
  }
  return out;
}

CMat build_superoperator(const ChainModel& m, std::size_t budget_bytes) {
  const SystemOps ops = system_operators(m);
  const double n = double(ops.dim()) * ops.dim();
  const double bytes = n * n * 16;
  if (bytes > double(budget_bytes))
    throw CapacityError("build_superoperator: dense Liouvillian exceeds memory budget", std::size_t(bytes));
  return CMat(liouvillian(ops));
}

namespace {

// Orthonormal map from column-stacked vec(rho) to real coordinates in a
// Hermitian operator basis (diagonals, then (ij+ji)/sqrt2 and i(ij-ji)/sqrt2).
SpMat hermitian_basis(Eigen::Index D) {
  std::vector<Eigen::Triplet<cd>> tr;
  const double r = 1 / std::sqrt(2.0);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < D; ++i) tr.emplace_back(row++, i + i * D, 1.0);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = i + 1; j < D; ++j) {
      tr.emplace_back(row, i + j * D, r);
      tr.emplace_back(row, j + i * D, r);
      ++row;
      tr.emplace_back(row, i + j * D, cd(0, r));
      tr.emplace_back(row, j + i * D, cd(0, -r));
      ++row;
    }
  SpMat U(D * D, D * D);
  U.setFromTriplets(tr.begin(), tr.end());
  return U;
}

Eigen::MatrixXd real_liouvillian(const SpMat& Lv, Eigen::Index D) {
  const SpMat U = hermitian_basis(D);
  const SpMat R = U * Lv * SpMat(U.adjoint());
  return CMat(R).real();
}

std::vector<cd> dense_spectrum(const SystemOps& ops) {
  const Eigen::MatrixXd R = real_liouvillian(liouvillian(ops), ops.dim());
  Eigen::EigenSolver<Eigen::MatrixXd> es(R, false);
  std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](cd a, cd b) { return a.real() > b.real(); });
  return ev;
}

int count_zero(const std::vector<cd>& ev, double tol) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [tol](cd e) { return std::abs(e) < tol; }));
}

}  // namespace

std::vector<cd> sparse_spectrum_near(const SpMat& Lv, int nev, double sigma) {
  const a_int n = static_cast<a_int>(Lv.rows());
  nev = std::min<int>(nev, static_cast<int>(n) - 2);
  const a_int ncv = std::min<a_int>(n, 2 * nev + 8);
  SpMat A = Lv - sigma * identity_sparse(n);
  A.makeCompressed();
  Eigen::UmfPackLU<SpMat> lu;
  lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_CHOLMOD;  // least fill on Kronecker-structured L
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw AccuracyError("spectrum: sparse LU of the shifted Liouvillian failed");

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> g;
  std::vector<cd> resid(n), v(std::size_t(n) * ncv), workd(3 * std::size_t(n)), workev(2 * ncv), d(nev + 1);
  for (auto& x : resid) x = cd(g(rng), g(rng));
  const a_int lworkl = 3 * ncv * ncv + 5 * ncv;
  std::vector<cd> workl(lworkl);
  std::vector<double> rwork(ncv);
  std::vector<a_int> select(ncv);
  a_int iparam[11] = {}, ipntr[14] = {};
  iparam[0] = 1;
  iparam[2] = 3000;
  iparam[6] = 3;
  a_int ido = 0, info = 1;
  const double tol = 1e-11;
  CVec y;
  for (;;) {
    arpack::naupd(ido, arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, tol, resid.data(), ncv,
                  v.data(), n, iparam, ipntr, workd.data(), workl.data(), lworkl, rwork.data(), info);
    if (ido != -1 && ido != 1) break;
    y = lu.solve(Eigen::Map<const CVec>(workd.data() + ipntr[0] - 1, n));
    Eigen::Map<CVec>(workd.data() + ipntr[1] - 1, n) = y;
  }
  if (info < 0 || info == 1) throw AccuracyError("spectrum: ARPACK did not converge");
  arpack::neupd(0, arpack::howmny::ritz_vectors, select.data(), d.data(), v.data(), n, cd(sigma), workev.data(),
                arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, tol, resid.data(), ncv, v.data(), n,
                iparam, ipntr, workd.data(), workl.data(), lworkl, rwork.data(), info);
  if (info != 0) throw AccuracyError("spectrum: ARPACK eigenvalue extraction failed");
  std::vector<cd> ev(d.begin(), d.begin() + iparam[4]);
  std::sort(ev.begin(), ev.end(), [](cd a, cd b) { return a.real() > b.real(); });
  return ev;
}

namespace {

constexpr double kSparseShift = -1e-6;
// enough Ritz values to see a (2S+1)-fold null space plus the first decaying modes
int sparse_nev(HalfInt S) { return S.twice + 4; }

constexpr double kZeroTol = 1e-10;

}  // namespace

int null_multiplicity(const ChainModel& m) {
  const SystemOps ops = system_operators(m);
  const Eigen::Index n = ops.dim() * ops.dim();
  if (n <= kDenseLiouvilleLimit) return count_zero(dense_spectrum(ops), kZeroTol);
  return count_zero(sparse_spectrum_near(liouvillian(ops), sparse_nev(m.S), kSparseShift), kZeroTol);
}

namespace {

// Solves L rho = 0 with the rho_00 equation replaced by the trace condition.
CMat constrained_steady(const SpMat& Lv, Eigen::Index D) {
  std::vector<Eigen::Triplet<cd>> tr;
  for (int k = 0; k < Lv.outerSize(); ++k)
    for (SpMat::InnerIterator it(Lv, k); it; ++it)
      if (it.row() != 0) tr.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < D; ++i) tr.emplace_back(0, i + i * D, 1.0);
  SpMat A(Lv.rows(), Lv.cols());
  A.setFromTriplets(tr.begin(), tr.end());
  CVec b = CVec::Zero(A.rows());
  b(0) = 1.0;
  Eigen::UmfPackLU<SpMat> lu;
  lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_CHOLMOD;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw AccuracyError("nullspace_steady: constrained system singular");
  const CVec x = lu.solve(b);
  CMat rho = Eigen::Map<const CMat>(x.data(), D, D);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();
  return rho;
}

}  // namespace

SteadyReport nullspace_steady(const ChainModel& m) {
  const SystemOps ops = system_operators(m);
  SteadyReport rep;
  rep.multiplicity = null_multiplicity(m);
  if (rep.multiplicity != 1)
    throw AmbiguityError("nullspace_steady: steady state not unique", rep.multiplicity);
  rep.rho = constrained_steady(liouvillian(ops), ops.dim());
  rep.purity = (rep.rho * rep.rho).trace().real();
  return rep;
}

double fidelity(const CMat& rho, const CVec& psi) { return (psi.dot(rho * psi)).real() / psi.squaredNorm(); }

SpectralReport spectral_gap(const ChainModel& m, double zero_tol) {
  const SystemOps ops = system_operators(m);
  const Eigen::Index n = ops.dim() * ops.dim();
  SpectralReport rep;
  if (n <= kDenseLiouvilleLimit) {
    rep.eigenvalues = dense_spectrum(ops);
  } else {
    // rough UMFPACK fill estimate: nnz(L) times the bandwidth D
    const double bytes = double(n) * ops.dim() * 16 * 4;
    if (bytes > double(kDefaultMemoryBudget))
      throw CapacityError("spectral_gap: sparse factorisation exceeds memory budget", std::size_t(bytes));
    rep.eigenvalues = sparse_spectrum_near(liouvillian(ops), sparse_nev(m.S), kSparseShift);
  }
  rep.multiplicity = count_zero(rep.eigenvalues, zero_tol);
  double best = -std::numeric_limits<double>::infinity();
  for (cd e : rep.eigenvalues)
    if (std::abs(e) >= zero_tol) best = std::max(best, e.real());
  rep.gap = -best;
  if (rep.multiplicity == 1) {
    const CMat rho = constrained_steady(liouvillian(ops), ops.dim());
    rep.purity = (rho * rho).trace().real();
  }
  return rep;
}

Eigen::MatrixXd perturbative_matrix(HalfInt S) {
  const int n = S.twice + 1;
  const double D2 = double(n) * n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int J = 0; J < n; ++J) {
    const double j = J;
    M(J, J) = -j * (j + 1) * (D2 - j * (j + 1)) / 3;
    if (J >= 1) M(J, J - 1) = (j - 1) * (j - 1) * j * (D2 - j * j) / (3 * (2 * j + 1));
    if (J + 1 < n) M(J, J + 1) = (j + 2) * (j + 2) * (j + 1) * (D2 - (j + 1) * (j + 1)) / (3 * (2 * j + 1));
  }
  return M;
}

double perturbative_gap(HalfInt S, double delta, double omega, double gamma) {
  const int n = S.twice + 1;
  const double D2 = double(n) * n;
  // the J = 0 column vanishes, so the nonzero spectrum is that of the J >= 1
  // block, symmetrised through sqrt(b_{J+1} c_J)
  Eigen::VectorXd diag(n - 1), off(std::max(n - 2, 0));
  for (int J = 1; J < n; ++J) {
    const double j = J;
    diag(J - 1) = -j * (j + 1) * (D2 - j * (j + 1)) / 3;
    if (J + 1 < n) {
      const double b = j * j * (j + 1) * (D2 - (j + 1) * (j + 1)) / (3 * (2 * j + 3));
      const double c = (j + 2) * (j + 2) * (j + 1) * (D2 - (j + 1) * (j + 1)) / (3 * (2 * j + 1));
      off(J - 1) = std::sqrt(b * c);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  const double th = std::atan(delta / (2 * omega));
  return -gamma * std::sin(th) * std::sin(th) * es.eigenvalues().maxCoeff();
}

CMat evolve_master(const SystemOps& ops, const CMat& rho0, double t) {
  const Eigen::Index D = ops.dim();
  const CMat Lv = CMat(liouvillian(ops)) * t;
  const CMat P = Lv.exp();
  const CVec v = P * Eigen::Map<const CVec>(rho0.data(), D * D);
  return Eigen::Map<const CMat>(v.data(), D, D);
}

std::uint64_t trajectory_seed(std::uint64_t master, int k) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (std::uint64_t(k) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

using State = std::vector<cd>;

struct NoJumpRhs {
  const SpMat* A;  // -i H_eff
  void operator()(const State& x, State& dx, double) const {
    dx.resize(x.size());
    Eigen::Map<CVec>(dx.data(), dx.size()) = (*A) * Eigen::Map<const CVec>(x.data(), x.size());
  }
};

double norm2(const State& x) {
  double s = 0;
  for (const cd& v : x) s += std::norm(v);
  return s;
}

struct SingleTrajectory {
  std::vector<double> values;  // [obs * ngrid + g], last block is fidelity
  long long jumps = 0;
};

SingleTrajectory run_trajectory(const SpMat& A, const std::vector<SpMat>& jumps, const CVec& psi0,
                                const std::vector<double>& grid, const std::vector<SpMat>& obs, const CVec& target,
                                std::uint64_t seed, const TrajectoryOptions& opt) {
  namespace ode = boost::numeric::odeint;
  const std::size_t ng = grid.size(), no = obs.size();
  SingleTrajectory out;
  out.values.assign((no + 1) * ng, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto record = [&](std::size_t g, const State& x) {
    const Eigen::Map<const CVec> v(x.data(), x.size());
    const double n2 = v.squaredNorm();
    for (std::size_t o = 0; o < no; ++o) out.values[o * ng + g] = v.dot(obs[o] * v).real() / n2;
    out.values[no * ng + g] = std::norm(target.dot(v)) / (n2 * target.squaredNorm());
  };

  NoJumpRhs rhs{&A};
  auto stepper = ode::make_dense_output(opt.atol, opt.rtol, ode::runge_kutta_dopri5<State>());
  State x(psi0.data(), psi0.data() + psi0.size());
  double t = 0.0;
  std::size_t g = 0;
  while (g < ng && grid[g] <= t) record(g++, x);
  double r = uni(rng);
  const double dt0 = 1e-3 / std::max(1.0, std::abs(A.coeffs().cwiseAbs().maxCoeff()));
  stepper.initialize(x, t, dt0);
  State tmp(x.size());
  while (g < ng) {
    const auto [ta, tb] = stepper.do_step(rhs);
    if (stepper.current_time_step() < 1e-14 * std::max(1.0, tb))
      throw IntegrationError("jump_trajectories: step size underflow");
    const double nb = norm2(stepper.current_state());
    double t_end = tb;
    const bool jump = nb <= r;
    if (jump) {
      double lo = ta, hi = tb;
      while (hi - lo > 1e-10 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, tmp);
        (norm2(tmp) > r ? lo : hi) = mid;
      }
      t_end = hi;
    }
    while (g < ng && grid[g] <= t_end) {
      stepper.calc_state(grid[g], tmp);
      record(g++, tmp);
    }
    if (!jump) continue;
    stepper.calc_state(t_end, tmp);
    const Eigen::Map<const CVec> v(tmp.data(), tmp.size());
    std::vector<double> w(jumps.size());
    std::vector<CVec> cand(jumps.size());
    double total = 0;
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      cand[k] = jumps[k] * v;
      w[k] = cand[k].squaredNorm();
      total += w[k];
    }
    if (!(total > 0)) throw IntegrationError("jump_trajectories: jump with vanishing rate");
    double pick = uni(rng) * total;
    std::size_t k = 0;
    while (k + 1 < jumps.size() && pick >= w[k]) pick -= w[k++];
    cand[k].normalize();
    x.assign(cand[k].data(), cand[k].data() + cand[k].size());
    ++out.jumps;
    r = uni(rng);
    stepper.initialize(x, t_end, std::max(stepper.current_time_step(), dt0));
  }
  return out;
}

}  // namespace

TrajectoryResult jump_trajectories(const SystemOps& ops, const CVec& psi0, const std::vector<double>& t_grid,
                                   const std::vector<SpMat>& observables, const CVec& target,
                                   const TrajectoryOptions& opt) {
  if (opt.n_traj < 1) throw DomainError("jump_trajectories: need at least one trajectory");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || (!t_grid.empty() && t_grid.front() < 0))
    throw DomainError("jump_trajectories: time grid must be sorted and non-negative");
  if (psi0.size() != ops.dim() || target.size() != ops.dim())
    throw DomainError("jump_trajectories: state dimension mismatch");
  SpMat KdK(ops.dim(), ops.dim());
  for (const auto& K : ops.jumps) KdK += SpMat(K.adjoint() * K);
  const SpMat A = cd(0, -1) * ops.H - 0.5 * KdK;
  const CVec psi = psi0.normalized();

  std::vector<SingleTrajectory> runs(opt.n_traj);
  const int threads = std::max(1, std::min(opt.threads, opt.n_traj));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](int w) {
    try {
      for (int k = w; k < opt.n_traj; k += threads)
        runs[k] = run_trajectory(A, ops.jumps, psi, t_grid, observables, target, trajectory_seed(opt.seed, k), opt);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t ng = t_grid.size(), no = observables.size();
  TrajectoryResult res;
  res.t = t_grid;
  res.n_traj = opt.n_traj;
  res.seed = opt.seed;
  res.mean.assign(no + 1, std::vector<double>(ng, 0.0));
  res.stderr_.assign(no + 1, std::vector<double>(ng, 0.0));
  for (const auto& r : runs) {
    res.jumps += r.jumps;
    for (std::size_t o = 0; o <= no; ++o)
      for (std::size_t g = 0; g < ng; ++g) res.mean[o][g] += r.values[o * ng + g];
  }
  const double n = opt.n_traj;
  for (auto& row : res.mean)
    for (double& v : row) v /= n;
  if (opt.n_traj > 1)
    for (const auto& r : runs)
      for (std::size_t o = 0; o <= no; ++o)
        for (std::size_t g = 0; g < ng; ++g) res.stderr_[o][g] += std::pow(r.values[o * ng + g] - res.mean[o][g], 2);
  for (auto& row : res.stderr_)
    for (double& v : row) v = opt.n_traj > 1 ? std::sqrt(v / (n - 1) / n) : 0.0;
  res.fidelity_mean = res.mean.back();
  res.fidelity_stderr = res.stderr_.back();
  res.mean.pop_back();
  res.stderr_.pop_back();
  return res;
}

double relaxation_bound(const ChainModel& m, const ChainState& target, double f0, double eps) {
  std::vector<double> ones(m.L(), 1.0);
  const SpMat Z = weighted_sz(m.S, ones);
  const double sz = target.amp.dot(Z * target.amp).real() / target.amp.squaredNorm();
  return (1 - eps - f0) / (m.gamma_collective * std::abs(2 * sz));
}

namespace {

std::vector<double> master_fidelity(const SystemOps& ops, const CVec& psi0, const CVec& target,
                                    const std::vector<double>& grid, const TrajectoryOptions& opt) {
  namespace ode = boost::numeric::odeint;
  const Eigen::Index D = ops.dim();
  const SpMat Lv = liouvillian(ops);
  const CMat rho0 = psi0 * psi0.adjoint();
  State x(rho0.data(), rho0.data() + D * D);
  NoJumpRhs rhs{&Lv};
  std::vector<double> F;
  auto observe = [&](const State& s, double) {
    const Eigen::Map<const CMat> rho(s.data(), D, D);
    F.push_back(target.dot(rho * target).real() / target.squaredNorm());
  };
  ode::integrate_times(ode::make_dense_output(opt.atol, opt.rtol, ode::runge_kutta_dopri5<State>()), rhs, x,
                       grid.begin(), grid.end(), 1e-4, observe);
  return F;
}

}  // namespace

RelaxationResult relaxation_time(const ChainModel& m, const RelaxationOptions& opt) {
  if (m.gamma_single != 0) throw DomainError("relaxation_time: requires gamma_single = 0");
  const ChainState target = assemble_chain(m);
  const SystemOps ops = system_operators(m);
  CVec psi0 = CVec::Zero(ops.dim());
  psi0(ops.dim() - 1) = 1.0;
  const double f0 = std::norm(target.amp.dot(psi0)) / target.amp.squaredNorm();

  auto fidelity_on = [&](const std::vector<double>& grid) {
    if (opt.use_master_equation) return master_fidelity(ops, psi0, target.amp, grid, opt.traj);
    return jump_trajectories(ops, psi0, grid, {}, target.amp, opt.traj).fidelity_mean;
  };

  // window grown by 4x from a multiple of the lower bound until the fidelity
  // has settled at its end, so trajectories are not integrated far past t_ss
  const double bound = relaxation_bound(m, target, f0, opt.eps);
  const double thr = 1 - opt.eps;
  double t_hi = std::isfinite(bound) && bound > 0 ? std::min(opt.t_max, 20 * bound) : opt.t_max;
  std::vector<double> grid, F;
  for (;;) {
    grid.assign(1, 0.0);
    for (int k = 0; k < opt.grid_points; ++k)
      grid.push_back(t_hi * std::pow(10.0, -4.0 + 4.0 * k / std::max(1, opt.grid_points - 1)));
    F = fidelity_on(grid);
    if (F.back() > thr || t_hi >= opt.t_max) break;
    t_hi = std::min(opt.t_max, 4 * t_hi);
  }
  RelaxationResult res;
  res.t = grid;
  res.fidelity = F;
  res.final_fidelity = F.back();
  res.bound = bound;
  if (F.back() <= thr) throw TimeoutError("relaxation_time: fidelity below 1 - eps at t_max", F.back());
  std::size_t last = 0;
  bool any = false;
  for (std::size_t i = 0; i < F.size(); ++i)
    if (F[i] <= thr) {
      last = i;
      any = true;
    }
  if (!any) return res;
  std::vector<double> fine;
  for (int k = 0; k <= opt.refine_points; ++k)
    fine.push_back(grid[last] + (grid[last + 1] - grid[last]) * k / opt.refine_points);
  const std::vector<double> Ff = fidelity_on(fine);
  std::size_t lf = 0;
  for (std::size_t i = 0; i < Ff.size(); ++i)
    if (Ff[i] <= thr) lf = i;
  if (lf + 1 >= Ff.size()) {
    res.t_ss = fine.back();
  } else {
    const double a = Ff[lf] - thr, b = Ff[lf + 1] - thr;
    res.t_ss = fine[lf] + (fine[lf + 1] - fine[lf]) * (a / (a - b));
  }
  return res;
}

}  // namespace darkspin
