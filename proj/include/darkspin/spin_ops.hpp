#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "darkspin/wigner.hpp"

namespace darkspin {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cd>;

// Spin-S matrices in the basis m = S, S-1, ..., -S (index i = S - m).
struct SpinMatrices {
  CMat sx, sy, sz, sp, sm;
};
SpinMatrices spin_matrices(HalfInt S);

inline int spin_dim(HalfInt S) { return S.twice + 1; }
inline HalfInt index_to_m(HalfInt S, int i) { return half(S.twice - 2 * i); }
inline int m_to_index(HalfInt S, HalfInt m) { return (S.twice - m.twice) / 2; }

// Driven, detuned ensembles with chiral all-to-all coupling and collective
// decay:
//   H = sum_l (omega Sx_l + delta_l Sz_l)
//       + i chi/2 sum_{k<l} (S+_k S-_l - S-_k S+_l),
//   jump sqrt(gamma_collective) sum_l S-_l, plus sqrt(gamma_single) per atom.
struct ChainModel {
  HalfInt S = half(1);
  std::vector<double> deltas;
  double omega = 1.0;
  double chi = 0.0;
  double gamma_collective = 1.0;
  double gamma_single = 0.0;

  int L() const { return static_cast<int>(deltas.size()); }
};

// Product-basis operators on L sites of dimension d; site 0 is the most
// significant digit of the flat index.
SpMat embed(const SpMat& op, int site, int L, int d);
SpMat embed_pair(const SpMat& a, int site_a, const SpMat& b, int site_b, int L, int d);
SpMat identity_sparse(Eigen::Index n);

SpMat chain_hamiltonian(const ChainModel& m);
SpMat collective_lowering(HalfInt S, int L);
// sum over sites of w_l * Sz_l
SpMat weighted_sz(HalfInt S, const std::vector<double>& weights);

// Spin projection m (twice value) of `site` for flat basis index `flat`.
int site_twice_m(HalfInt S, int L, Eigen::Index flat, int site);

}  // namespace darkspin
