#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "darkspin/spin_ops.hpp"

namespace darkspin {

// Two-ensemble dark state sum_J c_J |J,-J>, detunings (delta/2, -delta/2).
struct PairState {
  HalfInt S;
  std::vector<cd> c;        // c[J], J = 0..2S, c[0] real positive
  bool degenerate = false;  // delta = chi = 0: steady state not unique, |0,0> returned
};

// omega may be +infinity (the |0,0> limit).
PairState pair_coeffs(HalfInt S, double delta, double chi, double omega);

// Product-basis amplitudes (index (S-m1)(2S+1) + (S-m2)) of a pair state.
CVec pair_state_vector(const PairState& p);

// Phases theta_J (theta_0 = 0) of the gate that exchanges the detunings of two
// neighbouring ensembles, given the detunings before the exchange.
std::vector<double> gate_phases(HalfInt S, double delta_left, double delta_right, double chi);

// Two-ensemble unitary sum_J exp(i theta_J) P_J in the product basis.
CMat pair_gate(HalfInt S, const std::vector<double>& theta);

// Coefficients a_q with sum_q a_q x_J^q = theta_J, x_J the eigenvalue of
// S_1.S_2 on total spin J.
std::vector<double> heisenberg_poly(HalfInt S, const std::vector<double>& theta);

struct Swap {
  int site;  // gate acts on (site, site+1), 0-based
  double delta_left, delta_right;
};

struct SwapSchedule {
  std::vector<double> delta_init;  // dimerised pattern (D1/2, -D1/2, D2/2, ...)
  std::vector<double> dimer_delta;  // D_k for the dimer on sites (2k, 2k+1)
  std::vector<Swap> swaps;          // applied in order
  bool unique = true;               // false when chi = 0 and detunings repeat or vanish
};

// Greedy left-to-right pairing of each detuning with the first unmatched
// partner of opposite sign, then bubble sort into the target order.
SwapSchedule swap_schedule(const std::vector<double>& deltas, double chi);

struct ChainState {
  HalfInt S;
  int L = 0;
  CVec amp;  // product basis, site 0 most significant
};

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t(2) << 30;

// Dark state of the chain: dimer product state transformed by the gate
// schedule. Largest-modulus amplitude made real positive.
ChainState assemble_chain(const ChainModel& m, std::size_t budget_bytes = kDefaultMemoryBudget);

// Applies a two-site unitary (product basis of the pair) to sites (site, site+1).
void apply_two_site(CVec& amp, HalfInt S, int L, int site, const CMat& U);

// Largest-omega dark state of the four-ensemble pattern
// (dA/2, dB/2, -dB/2, -dA/2), coefficients g_j for j = 0..2S.
std::vector<cd> four_largeomega(HalfInt S, double dA, double dB, double chi);

// Product-basis state (1/(2S+1)) sum_j sqrt(2j+1) g_j |j12 = j, j43 = j; 0 0>,
// where j43 couples site 3 (0-based) before site 2.
ChainState four_state_from_g(HalfInt S, const std::vector<cd>& g);

// Von Neumann entropy (natural log) of the reduced state on `keep` (0-based sites).
double reduced_entropy(const ChainState& s, const std::vector<int>& keep);

// Reorders sites: result site i is input site perm[i].
ChainState permute_sites(const ChainState& s, const std::vector<int>& perm);

void write_chain_state(const ChainState& s, const std::filesystem::path& path);
ChainState read_chain_state(const std::filesystem::path& path);

}  // namespace darkspin
