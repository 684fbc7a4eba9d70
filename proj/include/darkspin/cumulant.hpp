#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "darkspin/wigner.hpp"

namespace darkspin {

// Pauli expectations of a representative atom (or pair of distinct atoms) per
// ensemble, a,b in {x,y,z}:
//   [0..2]   <s^a> ensemble 1        [3..5]   <s^a> ensemble 2
//   [6..11]  <s^a s^b> within 1, pairs xx yy zz xy xz yz
//   [12..17] the same within 2
//   [18..26] <s^a_1 s^b_2>, index 18 + 3a + b
inline constexpr int kNumMoments = 27;
using CumulantMoments = std::array<double, kNumMoments>;

int one_body_index(int ensemble, int a);
int intra_index(int ensemble, int a, int b);
int inter_index(int a, int b);

// H = omega (Sx1 + Sx2) + delta/2 (Sz1 - Sz2), collective jump sqrt(gamma_c)
// (S-1 + S-2), and sqrt(gamma_s) s- on each of the 2S atoms per ensemble.
struct CumulantParams {
  HalfInt S = half(2);
  double omega = 1.0;
  double delta = 0.0;
  double gamma_collective = 1.0;
  double gamma_single = 0.0;
};

// Closed second-order moment equations, generated from the adjoint
// Lindbladian acting on Pauli strings of a few representative atoms, with
// three-point expectations split into one- and two-point ones.
class CumulantRhs {
 public:
  struct Term {
    double c;
    int i, j, k;  // c * m_i * m_j * m_k, index -1 stands for 1
  };

  explicit CumulantRhs(const CumulantParams& p);

  void operator()(const CumulantMoments& m, CumulantMoments& dmdt) const;
  Eigen::MatrixXd jacobian(const CumulantMoments& m) const;
  const CumulantParams& params() const { return p_; }
  const std::vector<Term>& terms(int row) const { return rows_[row]; }

 private:
  CumulantParams p_;
  std::array<std::vector<Term>, kNumMoments> rows_;
};

CumulantRhs derive_rhs(const CumulantParams& p);

// Moments of the product state with Bloch vectors n1, n2 on every atom.
CumulantMoments product_moments(const std::array<double, 3>& n1, const std::array<double, 3>& n2);
CumulantMoments all_down_moments();

// Swaps the two ensembles (the image of the system under delta -> -delta).
CumulantMoments swap_ensembles(const CumulantMoments& m);

struct CollectiveObservables {
  double sx_minus = 0;          // <Sx1 - Sx2>
  double sy_plus = 0;           // <Sy1 + Sy2>
  double sy_plus_sq = 0;        // <(Sy1 + Sy2)^2>, exact prefactors
  double sy_plus_sq_large = 0;  // S(S - 1/2) replaced by S^2
  double var_y_plus = 0;
  double var_y_plus_large = 0;
  double var_z_minus = 0;  // Var(Sz1 - Sz2)
  double var_z_minus_large = 0;
  double xi2 = 0;  // 4S Var / <Sx1 - Sx2>^2
  double xi2_large = 0;
};
CollectiveObservables collective(const CumulantMoments& m, HalfInt S);

struct CumulantOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
};

CumulantMoments clip_moments(CumulantMoments m);  // to [-1, 1]

struct CumulantSeries {
  std::vector<double> t;
  std::vector<CumulantMoments> m;  // raw; see clip_moments for reporting
  std::vector<CollectiveObservables> obs;
  double max_abs_moment = 0;  // unclipped, over the output grid
  double max_bloch2 = 0;      // max |<s>|^2 of either ensemble
};

// Throws IntegrationError on step failure or a non-finite state.
CumulantSeries evolve(const CumulantRhs& rhs, const CumulantMoments& m0, const std::vector<double>& t_grid,
                      const CumulantOptions& opt = {});

struct CumulantSteady {
  CumulantMoments m{};
  CollectiveObservables obs;
  double t = 0;         // integration time needed
  double residual = 0;  // max |dm/dt| at the end
};

// Integrates from m0 in doubling chunks, then Newton-polishes the fixed point
// to max |dm/dt| < tol; throws TimeoutError past t_max.
CumulantSteady cumulant_steady(const CumulantRhs& rhs, const CumulantMoments& m0, double t_max, double tol = 1e-12,
                               const CumulantOptions& opt = {});

// Newton fixed point from a nearby guess, e.g. a steady state at a neighbouring
// parameter point; throws AccuracyError when it stalls above tol.
CumulantSteady polish_steady(const CumulantRhs& rhs, const CumulantMoments& guess, double tol = 1e-12);

// Minimum over t of xi^2(t) from the all-down state, gamma_single = gamma/C.
struct SqueezingSearch {
  std::vector<double> delta_over_omega;  // log-spaced candidates
  std::vector<double> omega_over_gamma;
  double gamma = 1.0;
  double horizon = 20.0;  // t_max = horizon * (1 + omega / (S delta)) / gamma
  int time_points = 240;  // geometric sampling of [1e-3 t_max, t_max]
  bool large_s = true;    // optimise the large-S variance
  int golden_iterations = 25;
  int threads = 1;
  CumulantOptions ode;
};

// Log grids: delta/omega = 10^(k/4) / sqrt(SC) for k = -4..8,
// omega/gamma = S 10^(k/2) for k = -3..1.
SqueezingSearch default_squeezing_search(HalfInt S, double C);

struct SqueezingOptimum {
  double xi2 = 0;
  double delta_over_omega = 0;
  double omega_over_gamma = 0;
  double t_opt = 0;
  bool at_boundary = false;  // grid optimum on an edge of either axis, or at t_max
  std::string warning;
  int evaluations = 0;
};

// Grid search over (delta/omega, omega/gamma), then golden-section in
// log(delta/omega) at the best omega/gamma. Throws DomainError for C <= 0.
SqueezingOptimum optimize_squeezing(HalfInt S, double C, const SqueezingSearch& search);

// Minimum of xi^2(t) along one trajectory from the all-down state, over the
// samples before the closed moments first leave the physical region
// (|m| <= 1, positive variance, uncertainty relation of Sy+ and Sz-);
// infinite when none qualify.
struct TimeMinimum {
  double xi2 = 0;
  double t = 0;
  bool at_end = false;      // minimum at t_max
  bool unphysical = false;  // trajectory truncated
};
TimeMinimum min_over_time(const CumulantParams& p, const SqueezingSearch& search);

}  // namespace darkspin
