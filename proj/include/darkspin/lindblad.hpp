#pragma once

#include <cstdint>
#include <vector>

#include "darkspin/steady_state.hpp"

namespace darkspin {

// Hamiltonian and jump operators of a ChainModel. With gamma_single = 0 the
// basis is the product of spin-S ensembles; otherwise each ensemble is 2S
// explicit spin-1/2 atoms (S <= 3/2), qubit 0 of an ensemble the most
// significant, |0> = up.
struct SystemOps {
  HalfInt S;
  int L = 0;
  bool qubits = false;
  SpMat H;
  std::vector<SpMat> jumps;  // rates folded in
  Eigen::Index dim() const { return H.rows(); }
};
SystemOps system_operators(const ChainModel& m);

// Maps a product-of-ensembles state into the qubit basis (symmetric Dicke
// embedding per ensemble).
CVec embed_symmetric(HalfInt S, int L, const CVec& v);

// Column-stacking vectorisation: vec(A X B) = (B^T (x) A) vec(X).
SpMat liouvillian(const SystemOps& ops);
// -i[H, rho] + sum_k (K rho K^dag - {K^dag K, rho}/2), evaluated directly.
CMat lindblad_rhs(const SystemOps& ops, const CMat& rho);

// Dense superoperator; throws CapacityError beyond the budget.
CMat build_superoperator(const ChainModel& m, std::size_t budget_bytes = kDefaultMemoryBudget);

struct SteadyReport {
  CMat rho;
  double purity = 0;
  int multiplicity = 0;
};
// Null space of the Liouvillian. Dense diagonalisation up to Liouville
// dimension kDenseLiouvilleLimit, ARPACK shift-invert near 0 above.
// Throws AmbiguityError when the null space is not one-dimensional.
inline constexpr Eigen::Index kDenseLiouvilleLimit = 1296;
SteadyReport nullspace_steady(const ChainModel& m);
// Null-space dimension without throwing.
int null_multiplicity(const ChainModel& m);

double fidelity(const CMat& rho, const CVec& psi);

struct SpectralReport {
  std::vector<cd> eigenvalues;  // sorted by real part, descending; above the
                                // dense limit only the 2S+4 nearest 0
  double gap = 0;               // -max Re over eigenvalues not within tol of 0
  int multiplicity = 0;         // eigenvalues within tol of 0
  double purity = 0;            // of the steady state when unique, else 0
};
// The nev eigenvalues of Lv nearest sigma (shift-invert Arnoldi on a sparse
// LU of Lv - sigma), sorted by real part, descending.
std::vector<cd> sparse_spectrum_near(const SpMat& Lv, int nev, double sigma);

// Full spectrum via the real representation in a Hermitian operator basis,
// or the low-lying part from shift-invert Arnoldi for large systems.
SpectralReport spectral_gap(const ChainModel& m, double zero_tol = 1e-10);

// Effective (2S+1)-dimensional tridiagonal generator in units of
// Gamma sin^2(theta), rows/cols J = 0..2S.
Eigen::MatrixXd perturbative_matrix(HalfInt S);
// Gamma sin^2(theta) times minus the largest nonzero eigenvalue,
// theta = arctan(delta / (2 omega)).
double perturbative_gap(HalfInt S, double delta, double omega, double gamma);

// Master-equation reference: rho(t) = exp(L t) rho(0) (dense, small systems).
CMat evolve_master(const SystemOps& ops, const CMat& rho0, double t);

struct TrajectoryOptions {
  int n_traj = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  double rtol = 1e-8;
  double atol = 1e-10;
};

struct TrajectoryResult {
  std::vector<double> t;
  // [observable][time]
  std::vector<std::vector<double>> mean, stderr_;
  std::vector<double> fidelity_mean, fidelity_stderr;
  long long jumps = 0;
  int n_traj = 0;
  std::uint64_t seed = 0;
};

// Seed of trajectory k: splitmix64 applied to master + k.
std::uint64_t trajectory_seed(std::uint64_t master, int k);

// Waiting-time unravelling: jump when the no-jump norm^2 falls to a uniform
// draw, crossing located by bisection on the dense-output interpolant.
// Observables must be Hermitian; fidelity is |<target|psi>|^2.
TrajectoryResult jump_trajectories(const SystemOps& ops, const CVec& psi0, const std::vector<double>& t_grid,
                                   const std::vector<SpMat>& observables, const CVec& target,
                                   const TrajectoryOptions& opt);

struct RelaxationResult {
  double t_ss = 0;
  double bound = 0;          // (1 - eps - F0) / (Gamma |2 <sum Sz>_ss|)
  double final_fidelity = 0;
  std::vector<double> t, fidelity;
};

struct RelaxationOptions {
  double eps = 1e-3;
  double t_max = 1e3;
  int grid_points = 60;    // geometric grid on [1e-4, 1] t_hi, t_hi <= t_max
  int refine_points = 60;  // uniform grid inside the last crossing bracket
  bool use_master_equation = false;
  TrajectoryOptions traj;
};

// Relaxation time from the all-down state to the dark state of m (gamma_single
// must be 0). Throws TimeoutError if the fidelity does not settle by t_max.
RelaxationResult relaxation_time(const ChainModel& m, const RelaxationOptions& opt);
double relaxation_bound(const ChainModel& m, const ChainState& target, double f0, double eps);

}  // namespace darkspin
