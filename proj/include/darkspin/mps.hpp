#pragma once

#include <vector>

#include "darkspin/steady_state.hpp"

namespace darkspin {

// Translation-invariant two-site cell of the chain MPS
//   psi(m_1..m_L) = v_left[m_1]^T A[m_2 m_3] ... A[m_{L-2} m_{L-1}] v_right[m_L].
// Physical and bond indices both use i = S - m.
struct MPSUnitCell {
  HalfInt S;
  std::vector<CMat> A;        // A[ia * d + ib], d x d bond matrices
  std::vector<CVec> v_left;   // per m_1
  std::vector<CVec> v_right;  // per m_L
  int d() const { return S.twice + 1; }
  // A^{Jm} = sum_{ma mb} <S ma; S mb|J m> A^{ma mb}
  CMat coupled(int J, HalfInt m) const;
};

// Large-drive amplitudes f_J, J = 0..2S, for the staircase pattern
// (De/2, Db/2, -Db/2, ..., Db/2, -Db/2, -De/2).
std::vector<cd> f_coeffs(HalfInt S, double delta_e, double delta_b, double chi);

// [A^{Jm}]_{ab} = (-1)^{S+b} <S,a;S,-b|J,m> f_J / sqrt(2S+1).
MPSUnitCell unit_cell_large_omega(HalfInt S, const std::vector<cd>& f);

// Cell from two staircase gates acting on a finite-drive dimer.
MPSUnitCell unit_cell_from_circuit(HalfInt S, double delta_e, double delta_b, double chi, double omega);

// Dense amplitudes of the open chain of even length L >= 2.
ChainState contract(const MPSUnitCell& cell, int L, std::size_t budget_bytes = kDefaultMemoryBudget);

// sum_{s s'} O_{s' s} A^s (x) conj(A^{s'}), acting on row-major vec of bond
// operators X -> sum O_{s's} A^s X A^{s'}^dagger. O is in the cell's
// two-site product basis.
CMat transfer_matrix(const MPSUnitCell& cell, const CMat& O);

// Two-site operators for the string construction.
CMat cell_identity(HalfInt S);
CMat cell_sz(HalfInt S);                  // Sz_a + Sz_b
CMat cell_string(HalfInt S, double phi);  // exp(i phi (Sz_a + Sz_b))

struct Dominant {
  cd lambda;
  CVec left, right;  // left^T T = lambda left^T, T right = lambda right, left^T right = 1
};
Dominant dominant_eigen(const CMat& T);

// Divides A by sqrt of the identity-map spectral radius.
void normalize_cell(MPSUnitCell& cell);

struct CorrelationLengths {
  double L_corr;
  double L_string;
  bool corr_infinite;    // dominant identity eigenvalue degenerate
  bool string_infinite;  // |lambda_G| = 1 within 1e-12
  double lambda1_abs;
  double lambdaG_abs;
};
CorrelationLengths correlation_lengths(const MPSUnitCell& cell, double phi);

// Infinite-chain string order from transfer matrices; 0 unless |lambda_G| = 1.
double string_order(const MPSUnitCell& cell, double phi);
// Closed form in terms of f_J.
double string_order_closed(HalfInt S, const std::vector<cd>& f, double phi);

double h_sum(HalfInt S, double phi);     // sum_a a sin(a phi)
double h_closed(HalfInt S, double phi);  // trigonometric closed form

// Infinite-chain connected <Sz Sz> between the first sites of two cells
// `cells` apart.
double sz_connected(const MPSUnitCell& cell, int cells);

// Spin-1/2 AKLT reference chain (f_0 = 0) and its fidelity with a state.
ChainState aklt_reference(int L);
double aklt_fidelity(const ChainState& s);

}  // namespace darkspin
