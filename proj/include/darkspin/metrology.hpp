#pragma once

#include <vector>

#include "darkspin/steady_state.hpp"

namespace darkspin {

// Quantum Fisher information of a pair state for the differential phase
// generated by Sz1 - Sz2.
double qfi_pair(const PairState& p);

struct Wineland {
  double xi2;          // 4S Var(Sy1+Sy2) / <Sx1-Sx2>^2
  double var_y_plus;   // Var(Sy1+Sy2) = Var(Sx1+Sx2)
  double spin_length;  // <Sx1-Sx2>
};
Wineland wineland(const PairState& p);

// Prior on the common phase theta, applied as exp(-i theta (Sz1+Sz2)).
struct PhasePrior {
  enum class Kind { Delta, Uniform, VonMises } kind = Kind::Uniform;
  double kappa = 0.0;  // von Mises concentration, <= 500
};

// Characteristic function E[exp(-i n theta)] of the prior.
double prior_characteristic(const PhasePrior& prior, int n);

// Mixed-state QFI 2 sum (l_k - l_l)^2/(l_k + l_l) |<k|G|l>|^2, eigenvalues
// below `floor` treated as zero.
double qfi_mixed(const CMat& rho, const CMat& G, double floor = 1e-14);

// QFI of the pair state after averaging the common phase over the prior.
double qfi_dephased(const PairState& p, const PhasePrior& prior);

// Density matrix (product basis) of the phase-averaged pair state.
CMat dephased_pair_rho(const PairState& p, const PhasePrior& prior);

// Joint counting distribution after the differential phase phi and the
// readout pulse, rows/cols index m = S..-S; outcome p_j = m_j/(2S) + 1/2.
struct EllipsePmf {
  HalfInt S;
  Eigen::MatrixXd P;
  int theta_points = 0;  // quadrature nodes used (0 for fixed theta)
  double outcome(int i) const { return 1.0 - double(i) / S.twice; }
};
EllipsePmf ellipse_pmf_fixed(const PairState& p, double phi, double theta);
// Uniform common phase; periodic trapezoid doubled until the pmf changes by
// less than `tol`.
EllipsePmf ellipse_pmf(const PairState& p, double phi, double tol = 1e-10);

// Classical Fisher information of the uniform-theta pmf with respect to phi.
double cfi(const PairState& p, double phi);

// QFI components of the four-ensemble large-drive state for generators
// sum_l s_l Sz_l with sign patterns ++++, ++--, +-+-, +--+.
struct FourQfi {
  double pppp, ppmm, pmpm, pmmp;
  double sum() const { return pppp + ppmm + pmpm + pmmp; }
};
FourQfi four_qfi_components(HalfInt S, const std::vector<cd>& g);

// 4 Var(sum_l w_l Sz_l) of a chain state.
double qfi_pure_weighted(const ChainState& s, const std::vector<double>& weights);

// QFI for sum_l w_l Sz_l after uniform dephasing of each listed generator
// sum_l v_l Sz_l (block projection onto their joint eigenspaces).
double qfi_dephased_weighted(const ChainState& s, const std::vector<double>& weights,
                             const std::vector<std::vector<double>>& dephase);

}  // namespace darkspin
